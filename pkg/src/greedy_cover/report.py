"""Run orchestration: configuration, the cover pipeline, verification and reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from greedy_cover import _kernels
from greedy_cover.bounds import bounds_report, corollary_density_bound, epsilon_from_mu, mu_from_epsilon
from greedy_cover.empirical import SCHEMA, EmpiricalMeasure, build_cloud
from greedy_cover.errors import ConfigError, DomainError
from greedy_cover.greedy import (
    ENGINES,
    CertificateReport,
    CoveringRun,
    TerminationReport,
    build_certificate,
    check_certificate,
    greedy_cover,
    termination_bound_check,
)
from greedy_cover.spaces import Kind, Space, ball_measure, sample

LOCK_NAME = ".greedy-cover.lock"
MASS_TOL = 1e-9


@dataclass(frozen=True)
class RunConfig:
    """One covering run.  Give ``epsilon`` or ``mu`` (eps = r / (mu n + 1)), not both.

    ``net`` defaults to ten times the cloud size.  ``candidates`` is an
    optional CSV of candidate centers; by default the cloud is used.
    """

    space: Space
    radius: float
    epsilon: float | None = None
    mu: float | None = None
    samples: int = 10_000
    net: int | None = None
    seed: int = 0
    candidates: str | None = None
    engine: str = "lazy"

    def __post_init__(self):
        sp = self.space
        r = self.radius
        if not (isinstance(r, (int, float)) and math.isfinite(r) and r > 0):
            raise ConfigError("radius", f"must be a positive number, got {r}")
        if sp.kind is Kind.TORUS and not r < 0.5:
            raise ConfigError("radius", f"torus radius must be < 1/2, got {r}")
        if sp.kind is Kind.SPHERE and r > math.pi:
            raise ConfigError("radius", f"sphere radius must be <= pi, got {r}")
        if (self.epsilon is None) == (self.mu is None):
            raise ConfigError("epsilon", "give exactly one of epsilon and mu")
        if self.mu is not None and not self.mu > 0:
            raise ConfigError("mu", f"must be positive, got {self.mu}")
        eps = self.resolved_epsilon
        if not 0 < eps < r:
            raise ConfigError("epsilon", f"need 0 < epsilon < radius, got epsilon={eps}, radius={r}")
        if self.samples < 1:
            raise ConfigError("samples", f"must be >= 1, got {self.samples}")
        if self.net is not None and self.net < self.cloud_size:
            raise ConfigError("net", f"net size {self.net} must be >= cloud size {self.cloud_size}")
        if self.engine not in ENGINES:
            raise ConfigError("engine", f"must be one of {ENGINES}, got {self.engine!r}")

    @property
    def resolved_epsilon(self) -> float:
        if self.epsilon is not None:
            return float(self.epsilon)
        return epsilon_from_mu(self.radius, self.mu, self.space.dim)

    @property
    def resolved_mu(self) -> float:
        if self.mu is not None:
            return float(self.mu)
        return mu_from_epsilon(self.radius, self.epsilon, self.space.dim)

    @property
    def cloud_size(self) -> int:
        return self.space.dim if self.space.kind is Kind.FINITE else self.samples

    @property
    def net_size(self) -> int:
        return self.net if self.net is not None else 10 * self.cloud_size

    def to_dict(self) -> dict:
        return {
            "space": self.space.to_dict(),
            "radius": self.radius,
            "epsilon": self.resolved_epsilon,
            "mu": self.resolved_mu,
            "samples": self.cloud_size,
            "net": self.net_size,
            "seed": self.seed,
            "candidates": self.candidates,
            "engine": self.engine,
        }


@dataclass
class VerificationReport:
    covering_radius_observed: float
    covered_fraction_at_r: float
    density: float | None
    centers: int
    radius: float
    net_size: int
    bound_comparisons: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, **self.__dict__}


def _nearest(space: Space, net: np.ndarray, centers: np.ndarray, chunk: int = 200_000) -> np.ndarray:
    out = np.empty(net.shape[0])
    for start in range(0, net.shape[0], chunk):
        out[start : start + chunk] = _kernels.nearest_distances(
            space.code, net[start : start + chunk], centers, space.kernel_matrix
        )
    return out


def _measure_or_none(space: Space, s: float) -> float | None:
    try:
        return ball_measure(space, min(s, math.pi) if space.kind is Kind.SPHERE else s)
    except DomainError:
        return None


def verify_covering(
    space: Space,
    centers,
    r: float,
    V: int,
    seed: int,
    net=None,
    epsilon: float | None = None,
) -> VerificationReport:
    """Re-check a covering on a net independent of the construction cloud.

    The net is drawn from a separate random stream of ``seed`` unless given.
    On finite spaces every point of the space is checked.
    """
    centers = space.as_points(centers)
    if centers.shape[0] == 0:
        raise ValueError("centers must be nonempty")
    if space.kind is Kind.FINITE:
        pts = np.arange(space.dim, dtype=np.float64).reshape(-1, 1)
    elif net is not None:
        pts = space.as_points(net)
    else:
        if V < 1:
            raise ValueError(f"net size must be >= 1, got {V}")
        pts = sample(space, seed, V, stream=1)
    d = _nearest(space, pts, centers)
    if space.kind is Kind.FINITE:
        w = space.weights
        covered = float(math.fsum(w[d <= r]))
    else:
        covered = float(np.count_nonzero(d <= r)) / pts.shape[0]
    observed = float(d.max())
    k = centers.shape[0]
    comparisons: dict = {}
    density = None
    if space.kind is not Kind.FINITE:
        w_r = ball_measure(space, r)
        density = k * w_r
        slack = max(0.0, observed - r) / r
        w_slack = _measure_or_none(space, r * (1.0 + slack))
        comparisons["lower"] = 1.0 / w_r
        comparisons["lower_slack_radius"] = r * (1.0 + slack)
        comparisons["lower_holds"] = None if w_slack is None else bool(k >= 1.0 / w_slack * (1 - 1e-12))
        if epsilon is not None:
            rep = bounds_report(space, r, epsilon=epsilon)
            comparisons["theorem1_upper"] = rep.upper
            comparisons["theorem1_upper_density"] = rep.upper * w_r
            comparisons["corollary"] = rep.corollary_value
            comparisons["mu"] = rep.mu
    return VerificationReport(
        covering_radius_observed=observed,
        covered_fraction_at_r=covered,
        density=density,
        centers=k,
        radius=float(r),
        net_size=int(pts.shape[0]),
        bound_comparisons=comparisons,
    )


@dataclass
class RunResult:
    config: RunConfig
    cloud: EmpiricalMeasure
    run: CoveringRun
    certificate: CertificateReport | None
    termination: TerminationReport
    verification: VerificationReport
    replay_fraction: float
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def run_dict(self) -> dict:
        out = self.run.to_dict(include_regions=True)
        out["config"] = self.config.to_dict()
        return out

    def certificate_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "certificate_skipped": (
                None if self.certificate is not None else "epsilon >= r - epsilon: the certificate needs eps < r/2"
            ),
            "termination": self.termination.to_dict(),
            "failures": list(self.failures),
        }

    def verification_dict(self) -> dict:
        out = self.verification.to_dict()
        out["replay_covered_fraction"] = self.replay_fraction
        return out


def _load_candidates(config: RunConfig):
    if config.candidates is None:
        return None
    pts = np.loadtxt(config.candidates, delimiter=",", ndmin=2)
    return config.space.as_points(pts)


def execute(config: RunConfig) -> RunResult:
    """Cloud, greedy run, certificate, termination check and verification, in memory."""
    space = config.space
    cloud = build_cloud(space, config.samples, config.seed)
    r = config.radius
    eps = config.resolved_epsilon
    run = greedy_cover(cloud, _load_candidates(config), r - eps, r, engine=config.engine)
    # the run's own eps (cover - select) reuses the eps-ball counts of the greedy pass
    cert = None
    if run.epsilon < run.select_radius:
        cert = check_certificate(build_certificate(run), cloud, run.epsilon)
    else:
        warnings.warn(f"epsilon {eps} >= r/2 = {r / 2}; skipping the certificate check", stacklevel=2)
    term = termination_bound_check(run, cloud, run.epsilon)
    ver = verify_covering(space, run.centers, r, config.net_size, config.seed, epsilon=eps)
    replay = verify_covering(space, run.centers, r, cloud.size, config.seed, net=cloud.points)

    failures = []
    if cert is not None:
        if abs(cert.total_mass - cert.centers) > MASS_TOL * max(1, cert.centers):
            failures.append(f"certificate mass {cert.total_mass} != {cert.centers} centers")
        if not cert.regions_disjoint:
            failures.append("removed regions overlap")
        if not cert.harmonic_holds:
            failures.append(f"max load {cert.max_load} exceeds harmonic bound {cert.harmonic_bound}")
    if not term.passed:
        failures.append(f"termination bound failed: {term.iterations} iterations, bound {term.bound}")
    if replay.covered_fraction_at_r != 1.0:
        failures.append(f"construction cloud not fully covered ({replay.covered_fraction_at_r})")
    return RunResult(config, cloud, run, cert, term, ver, replay.covered_fraction_at_r, failures)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


@contextmanager
def output_lock(out_dir: Path):
    """Exclusive lock file so two runs never write into one directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(f"{out_dir} is locked by another run (remove {lock} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def write_artifacts(result: RunResult, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {
        "run": out_dir / "run.json",
        "certificate": out_dir / "certificate.json",
        "verification": out_dir / "verification.json",
    }
    paths["run"].write_text(_dump(result.run_dict()))
    paths["certificate"].write_text(_dump(result.certificate_dict()))
    paths["verification"].write_text(_dump(result.verification_dict()))
    return paths


def run_cover(config: RunConfig, out_dir) -> RunResult:
    """Execute ``config`` and write run.json, certificate.json and verification.json."""
    out_dir = Path(out_dir)
    with output_lock(out_dir):
        result = execute(config)
        write_artifacts(result, out_dir)
    return result


def load_run(path) -> tuple[dict, RunConfig]:
    record = json.loads(Path(path).read_text())
    cfg = record["config"]
    config = RunConfig(
        space=Space.from_dict(cfg["space"]),
        radius=cfg["radius"],
        epsilon=cfg["epsilon"],
        samples=cfg["samples"],
        net=cfg["net"],
        seed=cfg["seed"],
        candidates=cfg["candidates"],
        engine=cfg["engine"],
    )
    return record, config


def replay_run(path) -> RunResult:
    """Re-execute a recorded run and check that the same centers come out."""
    record, config = load_run(path)
    result = execute(config)
    if result.run.chosen != record["chosen"]:
        result.failures.append("replayed run chose different centers than the record")
    return result


DENSITY_COLUMNS = [
    "n",
    "centers",
    "density",
    "theorem1_upper_density",
    "corollary",
    "corollary_run_mu",
    "lower",
    "covered_fraction",
    "observed_radius",
    "error",
]


def _curve_mu(n: int) -> float:
    return math.log(n) if n >= 3 else 2.0


def density_curve(dims, template: RunConfig) -> list[dict]:
    """One row per dimension; a failing dimension yields an error row."""
    rows = []
    for n in dims:
        row = {c: "" for c in DENSITY_COLUMNS}
        row["n"] = n
        try:
            space = Space.sphere(n) if template.space.kind is Kind.SPHERE else Space.torus(n)
            config = replace(template, space=space)
            res = execute(config)
            ver = res.verification
            row.update(
                centers=ver.centers,
                density=ver.density,
                theorem1_upper_density=ver.bound_comparisons["theorem1_upper_density"],
                corollary=corollary_density_bound(n, _curve_mu(n)),
                corollary_run_mu=ver.bound_comparisons["corollary"],
                lower=1.0,
                covered_fraction=ver.covered_fraction_at_r,
                observed_radius=ver.covering_radius_observed,
            )
            if res.failures:
                row["error"] = "; ".join(res.failures)
        except Exception as exc:  # recorded per row, the curve continues
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def density_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=DENSITY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row[k] is None else row[k]) for k in DENSITY_COLUMNS})
    return buf.getvalue()
