import json
import math

import numpy as np
import pytest

from greedy_cover.errors import ConfigError
from greedy_cover.report import (
    DENSITY_COLUMNS,
    LOCK_NAME,
    RunConfig,
    density_csv,
    density_curve,
    execute,
    load_run,
    output_lock,
    replay_run,
    run_cover,
    verify_covering,
)
from greedy_cover.spaces import Space, validate_finite_space


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(space=Space.torus(2), radius=0.6, mu=2.0), "radius"),
        (dict(space=Space.sphere(2), radius=4.0, mu=2.0), "radius"),
        (dict(space=Space.sphere(2), radius=-1.0, mu=2.0), "radius"),
        (dict(space=Space.sphere(2), radius=0.5), "epsilon"),
        (dict(space=Space.sphere(2), radius=0.5, epsilon=0.1, mu=2.0), "epsilon"),
        (dict(space=Space.sphere(2), radius=0.5, epsilon=0.5), "epsilon"),
        (dict(space=Space.sphere(2), radius=0.5, mu=-1.0), "mu"),
        (dict(space=Space.sphere(2), radius=0.5, mu=2.0, samples=0), "samples"),
        (dict(space=Space.sphere(2), radius=0.5, mu=2.0, samples=100, net=50), "net"),
        (dict(space=Space.sphere(2), radius=0.5, mu=2.0, engine="fast"), "engine"),
    ],
)
def test_config_errors_name_field(kwargs, field):
    with pytest.raises(ConfigError) as info:
        RunConfig(**kwargs)
    assert info.value.field == field
    assert str(info.value).startswith(field)


def test_config_resolution():
    cfg = RunConfig(Space.sphere(2), 0.5, mu=2.0, samples=100)
    assert cfg.resolved_epsilon == pytest.approx(0.1)
    assert cfg.net_size == 1000
    back = RunConfig(Space.sphere(2), 0.5, epsilon=cfg.resolved_epsilon, samples=100)
    assert back.resolved_mu == pytest.approx(2.0)
    finite = RunConfig(validate_finite_space(np.ones((4, 4)) - np.eye(4)), 1.0, epsilon=0.2, samples=99)
    assert finite.cloud_size == 4


def test_verify_single_center_whole_sphere():
    rep = verify_covering(Space.sphere(2), [[0, 0, 1]], math.pi, 2000, 0)
    assert rep.covered_fraction_at_r == 1.0
    assert rep.density == pytest.approx(1.0)
    assert rep.bound_comparisons["lower"] == pytest.approx(1.0)


def test_verify_reports_gap():
    rep = verify_covering(Space.torus(2), [[0.5, 0.5]], 0.1, 5000, 3, epsilon=0.02)
    w = math.pi * 0.01
    assert abs(rep.covered_fraction_at_r - w) < 0.02
    assert rep.covering_radius_observed > 0.1
    assert rep.bound_comparisons["lower_holds"] is None or not rep.bound_comparisons["lower_holds"]
    assert "theorem1_upper" in rep.bound_comparisons


def test_verify_finite_uses_all_points():
    sp = validate_finite_space(np.ones((3, 3)) - np.eye(3), [0.5, 0.25, 0.25])
    rep = verify_covering(sp, [[0]], 0.5, 1, 0)
    assert rep.covered_fraction_at_r == 0.5 and rep.net_size == 3 and rep.density is None
    with pytest.raises(ValueError):
        verify_covering(sp, np.empty((0, 1)), 0.5, 1, 0)


def test_execute_pipeline():
    res = execute(RunConfig(Space.torus(2), 0.2, mu=2.0, samples=2000, seed=4))
    assert res.ok, res.failures
    assert res.replay_fraction == 1.0
    assert res.certificate.total_mass == pytest.approx(res.run.iterations, abs=1e-9)
    assert res.verification.covered_fraction_at_r > 0.99


def test_large_epsilon_skips_certificate():
    sp = validate_finite_space(np.ones((4, 4)) - np.eye(4))
    with pytest.warns(UserWarning, match="skipping"):
        res = execute(RunConfig(sp, 1.0, epsilon=0.5))
    assert res.certificate is None and res.ok
    assert res.certificate_dict()["certificate_skipped"]


def test_artifacts_deterministic_and_replay(tmp_path):
    cfg = RunConfig(Space.sphere(2), 0.5, mu=2.0, samples=1500, seed=9)
    run_cover(cfg, tmp_path / "a")
    run_cover(cfg, tmp_path / "b")
    for name in ("run.json", "certificate.json", "verification.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert not (tmp_path / "a" / LOCK_NAME).exists()
    record, loaded = load_run(tmp_path / "a" / "run.json")
    assert loaded.resolved_epsilon == cfg.resolved_epsilon
    assert record["config"]["samples"] == 1500
    res = replay_run(tmp_path / "a" / "run.json")
    assert res.ok and res.run.chosen == record["chosen"]
    ver = json.loads((tmp_path / "a" / "verification.json").read_text())
    assert ver["replay_covered_fraction"] == 1.0


def test_lock_blocks_second_writer(tmp_path):
    with output_lock(tmp_path):
        assert (tmp_path / LOCK_NAME).exists()
        with pytest.raises(RuntimeError, match="locked"):
            with output_lock(tmp_path):
                pass
    assert not (tmp_path / LOCK_NAME).exists()


def test_density_curve_rows():
    template = RunConfig(Space.sphere(2), 0.6, mu=2.0, samples=1500, seed=1)
    rows = density_curve([2], template)
    assert len(rows) == 1
    row = rows[0]
    assert row["error"] == ""
    assert row["lower"] == 1.0 <= row["density"] <= row["corollary_run_mu"]
    assert row["corollary"] == pytest.approx(7.545177444479562, rel=1e-12)
    text = density_csv(rows)
    assert text.splitlines()[0] == ",".join(DENSITY_COLUMNS)


def test_density_curve_records_errors():
    template = RunConfig(Space.sphere(2), 0.6, mu=2.0, samples=500, seed=1)
    rows = density_curve([0, 2], template)
    assert rows[0]["error"] and rows[0]["centers"] == ""
    assert rows[1]["error"] == ""
    assert len(density_csv(rows).splitlines()) == 3
