import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greedy_cover.empirical import build_cloud
from greedy_cover.errors import UnsupportedOperation, ValidationError
from greedy_cover.greedy import greedy_cover
from greedy_cover.shapes import (
    ShapePair,
    UnionOfBalls,
    dumbbell,
    dumbbell_pair,
    greedy_shape_cover,
    load_shape_pair,
    outer_coverage,
    shape_mass,
    shape_membership,
    shape_report,
    shape_volume,
    validate_shape_pair,
)
from greedy_cover.spaces import Space
from oracles import torus_ball, torus_dist


def brute_member(shape_offsets, radius, translate, x):
    centres = [(np.asarray(translate) + o) % 1.0 for o in shape_offsets]
    return any(torus_dist(c, x) <= radius for c in centres)


def test_single_ball_membership():
    sp = Space.torus(2)
    ball = UnionOfBalls([[0.0, 0.0]], 0.1)
    assert shape_membership(sp, ball, [0.5, 0.5], [0.5, 0.5])
    assert shape_membership(sp, ball, [0.5, 0.5], [0.59, 0.5])
    assert not shape_membership(sp, ball, [0.5, 0.5], [0.61, 0.5])
    assert shape_membership(sp, ball, [0.98, 0.0], [0.05, 0.0])


@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 4))
@settings(max_examples=60)
def test_membership_matches_brute_force(seed, n, k):
    rng = np.random.default_rng(seed)
    radius = rng.uniform(0.02, 0.2)
    offsets = rng.uniform(-0.25, 0.25, size=(k, n))
    offsets *= min(1.0, (0.49 - radius) / np.abs(offsets).max())
    shape = UnionOfBalls(offsets, radius)
    sp = Space.torus(n)
    t = rng.random(n)
    for x in rng.random((30, n)):
        assert shape_membership(sp, shape, t, x) == brute_member(offsets, radius, t, x)


def test_shapes_need_torus():
    ball = UnionOfBalls([[0.0, 0.0, 0.0]], 0.1)
    with pytest.raises(UnsupportedOperation):
        shape_membership(Space.sphere(2), ball, [1, 0, 0], [1, 0, 0])
    cloud = build_cloud(Space.sphere(2), 50, 0)
    with pytest.raises(UnsupportedOperation):
        greedy_shape_cover(cloud, pair=ShapePair(ball, ball))
    with pytest.raises(ValidationError):
        shape_membership(Space.torus(2), ball, [0, 0], [0, 0])


def test_invalid_shapes():
    with pytest.raises(ValidationError):
        UnionOfBalls(np.empty((0, 2)), 0.1)
    with pytest.raises(ValidationError):
        UnionOfBalls([[0.0, 0.0]], 0.0)
    with pytest.raises(ValidationError):
        UnionOfBalls([[0.3, 0.0]], 0.25)
    with pytest.raises(ValidationError):
        ShapePair(UnionOfBalls.ball(2, 0.1), UnionOfBalls.ball(3, 0.2))
    with pytest.raises(ValidationError):
        dumbbell_pair(2, 0.16, 0.12, 0.3)


@pytest.mark.parametrize("seed", range(5))
def test_singleton_shapes_reduce_to_balls(seed):
    cloud = build_cloud(Space.torus(2), 2000, seed)
    pair = ShapePair(UnionOfBalls.ball(2, 0.16), UnionOfBalls.ball(2, 0.2))
    shaped = greedy_shape_cover(cloud, pair=pair)
    plain = greedy_cover(cloud, None, 0.16, 0.2)
    assert json.dumps(shaped.core_dict(), sort_keys=True) == json.dumps(plain.core_dict(), sort_keys=True)


def test_shape_engines_agree():
    cloud = build_cloud(Space.torus(2), 1500, 3)
    pair = dumbbell_pair(2, 0.16, 0.12, 0.04)
    lazy = greedy_shape_cover(cloud, pair=pair)
    full = greedy_shape_cover(cloud, pair=pair, engine="exhaustive")
    assert lazy.core_dict() == full.core_dict()


def test_shape_covering_whole_cloud_takes_one_iteration():
    # the union misses only a gap of width 2e-4 around the antipode of the translate
    shape = UnionOfBalls([[-0.2], [0.2]], 0.2999)
    for seed in range(5):
        cloud = build_cloud(Space.torus(1), 200, seed)
        run = greedy_shape_cover(cloud, pair=ShapePair(shape, shape))
        assert run.iterations == 1 and run.gains == [1.0]


def test_validate_pair_examples():
    assert validate_shape_pair(dumbbell_pair(2, 0.16, 0.12, 0.04))
    assert validate_shape_pair(ShapePair(UnionOfBalls.ball(3, 0.1), UnionOfBalls.ball(3, 0.1)))
    bad = ShapePair(UnionOfBalls.ball(2, 0.2), UnionOfBalls.ball(2, 0.1))
    assert not validate_shape_pair(bad)
    shifted = ShapePair(UnionOfBalls([[0.05, 0.0]], 0.1), UnionOfBalls.ball(2, 0.12))
    assert not validate_shape_pair(shifted)
    with pytest.raises(ValueError):
        validate_shape_pair(bad, samples=0)


def test_shape_mass_and_volume():
    cloud = build_cloud(Space.torus(2), 5000, 1)
    ball = UnionOfBalls.ball(2, 0.2)
    got = shape_mass(cloud, ball, [0.3, 0.7])
    w = torus_ball(2, 0.2)
    assert abs(got - w) <= 4 * math.sqrt(w * (1 - w) / 5000)
    vol = shape_volume(ball, 200_000, 0)
    assert abs(vol - w) <= 4 * math.sqrt(w * (1 - w) / 200_000)
    db = dumbbell(2, 0.5, 0.1)
    assert shape_volume(db, 200_000, 0) == pytest.approx(2 * torus_ball(2, 0.1), abs=0.004)


def test_dumbbell_cover_and_report():
    pair = dumbbell_pair(2, 0.16, 0.12, 0.04)
    cloud = build_cloud(Space.torus(2), 5000, 0)
    run = greedy_shape_cover(cloud, pair=pair)
    assert outer_coverage(run, pair) == 1.0
    rep = shape_report(run, pair, 0.04, 100_000, 0)
    assert rep.centers == run.iterations
    assert rep.inner_volume < rep.outer_volume
    assert rep.density == pytest.approx(run.iterations * rep.outer_volume)
    assert rep.improved_bound <= rep.original_bound
    assert rep.density <= rep.improved_bound * 1.1
    plain = shape_report(run, pair, None, 1000, 0)
    assert plain.improved_bound is None


def test_pair_json_roundtrip(tmp_path):
    pair = dumbbell_pair(3, 0.1, 0.1, 0.02)
    path = tmp_path / "pair.json"
    path.write_text(json.dumps(pair.to_dict()))
    back = load_shape_pair(path)
    np.testing.assert_array_equal(back.outer.offsets, pair.outer.offsets)
    assert back.inner.radius == pair.inner.radius
    (tmp_path / "inner.json").write_text(json.dumps(pair.inner.to_dict()))
    (tmp_path / "outer.json").write_text(json.dumps(pair.outer.to_dict()))
    (tmp_path / "split.json").write_text(json.dumps({"inner": "inner.json", "outer": "outer.json"}))
    split = load_shape_pair(tmp_path / "split.json")
    assert split.outer.radius == pair.outer.radius
