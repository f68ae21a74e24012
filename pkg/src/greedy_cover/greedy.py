"""Greedy covering over an empirical measure and its dual certificate.

Each iteration picks the candidate whose selection footprint (a ball of
radius r - eps, or a union of such balls) contains the most not-yet-removed
cloud mass, removes that mass, and marks everything inside the candidate's
covering footprint (radius r) as covered.  The loop ends once every cloud
point is covered.

The removed pieces are pairwise disjoint, so pricing each removed point at
1/gain of its iteration gives a function whose total mass is the number of
centers.  ``check_certificate`` evaluates how much of that price any single
footprint can collect, which is the Chvatal-style dual-fitting bound.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from greedy_cover import _kernels
from greedy_cover.empirical import SCHEMA, EmpiricalMeasure
from greedy_cover.errors import InfeasibleDiscretization
from greedy_cover.spaces import Kind, Space

logger = logging.getLogger(__name__)

#: Stored neighbour lists above this many entries are computed on the fly instead.
CSR_BUDGET = 30_000_000
ENGINES = ("lazy", "exhaustive")


@dataclass(frozen=True, eq=False)
class Footprint:
    """Union of closed balls of a common radius placed at ``offsets`` from a translate.

    A plain ball is a footprint with the single offset 0.  Offsets are only
    meaningful on the torus, where translation is coordinate addition mod 1.
    """

    offsets: np.ndarray
    radius: float

    @classmethod
    def ball(cls, space: Space, radius: float) -> "Footprint":
        return cls(np.zeros((1, space.coord_dim)), float(radius))

    @property
    def is_ball(self) -> bool:
        return self.offsets.shape[0] == 1 and not np.any(self.offsets)

    def translates(self, space: Space, centers: np.ndarray) -> np.ndarray:
        """Ball centers of every translate, shape (K, Q, d)."""
        if self.is_ball:
            return np.ascontiguousarray(centers[:, None, :])
        if space.kind is not Kind.TORUS:
            raise ValueError("offset footprints are only defined on the torus")
        return np.mod(centers[:, None, :] + self.offsets[None, :, :], 1.0)


@dataclass(eq=False)
class CoveringRun:
    """Record of one greedy run.

    ``gains`` are the empirical masses of the removed pieces, ``regions`` the
    pieces themselves (sorted cloud indices).  Iterations taken by the
    zero-gain fallback are flagged in ``fallback``.
    """

    space: Space
    cloud: EmpiricalMeasure = field(repr=False)
    select: Footprint = field(repr=False)
    cover: Footprint = field(repr=False)
    candidates: np.ndarray = field(repr=False)
    candidates_cover_cloud: bool
    engine: str
    chosen: list[int] = field(default_factory=list)
    gains: list[float] = field(default_factory=list)
    gain_counts: list[int] = field(default_factory=list)
    regions: list[np.ndarray] = field(default_factory=list, repr=False)
    uncovered_after: list[int] = field(default_factory=list)
    fallback: list[bool] = field(default_factory=list)
    max_select_count: int = 0
    shape: dict | None = None

    @property
    def select_radius(self) -> float:
        return self.select.radius

    @property
    def cover_radius(self) -> float:
        return self.cover.radius

    @property
    def epsilon(self) -> float:
        return self.cover.radius - self.select.radius

    @property
    def iterations(self) -> int:
        return len(self.chosen)

    @property
    def centers(self) -> np.ndarray:
        return self.candidates[np.asarray(self.chosen, dtype=np.int64)]

    def point_iteration(self) -> np.ndarray:
        """Iteration (1-based) that removed each cloud point, 0 if never removed."""
        out = np.zeros(self.cloud.size, dtype=np.int64)
        for i, reg in enumerate(self.regions, start=1):
            out[reg] = i
        return out

    def core_dict(self) -> dict:
        """The selection record alone, independent of how the footprints were described."""
        return {
            "chosen": [int(c) for c in self.chosen],
            "centers": self.centers.tolist(),
            "gains": [float(g) for g in self.gains],
            "gain_counts": [int(c) for c in self.gain_counts],
            "regions": [reg.tolist() for reg in self.regions],
            "uncovered_after": [int(u) for u in self.uncovered_after],
            "fallback": [bool(f) for f in self.fallback],
        }

    def to_dict(self, include_regions: bool = False) -> dict:
        core = self.core_dict()
        if not include_regions:
            core.pop("regions")
        params = {
            "select_radius": self.select_radius,
            "cover_radius": self.cover_radius,
            "epsilon": self.epsilon,
            "engine": self.engine,
            "candidates_cover_cloud": self.candidates_cover_cloud,
        }
        if self.shape is not None:
            params["shape"] = self.shape
        return {
            "schema": SCHEMA,
            "space": self.space.to_dict(),
            "cloud": {"M": self.cloud.size, "seed": self.cloud.seed},
            "params": params,
            "iterations": self.iterations,
            "flags": {"fallback_iterations": int(sum(self.fallback))},
            **core,
        }

    def to_json(self, include_regions: bool = False) -> str:
        return json.dumps(self.to_dict(include_regions), indent=2, sort_keys=True) + "\n"


class _Gains:
    """Current gain evaluation for candidates, from stored neighbour lists or on the fly."""

    def __init__(self, cloud: EmpiricalMeasure, translates: np.ndarray, radius: float, initial=None):
        self.cloud = cloud
        self.space = cloud.space
        self.translates = translates
        self.radius = radius
        self.indptr = self.indices = None
        k = translates.shape[0]
        if cloud.weights is not None or self._fits_budget(initial):
            self.indptr, self.indices = _kernels.translate_csr(
                self.space.code, translates, cloud.points_t, radius, self.space.kernel_matrix
            )
            self.initial = np.diff(self.indptr)
        elif initial is not None:
            self.initial = initial
        else:
            self.initial = _kernels.translate_counts(
                self.space.code, translates, cloud.points_t, radius, self.space.kernel_matrix
            )
        self.k = k
        self._active_stamp = None
        self._active_points = None

    def _fits_budget(self, initial) -> bool:
        k = self.translates.shape[0]
        if initial is not None:
            return int(initial.sum()) <= CSR_BUDGET
        probe = np.unique(np.linspace(0, k - 1, min(k, 256)).astype(np.int64))
        counts = _kernels.translate_counts(
            self.space.code, self.translates[probe], self.cloud.points_t, self.radius, self.space.kernel_matrix
        )
        return counts.mean() * k <= 0.5 * CSR_BUDGET

    @property
    def stored(self) -> bool:
        return self.indptr is not None

    def members(self, c: int) -> np.ndarray:
        if self.stored:
            return self.indices[self.indptr[c] : self.indptr[c + 1]].astype(np.int64)
        return _kernels.translate_members(
            self.space.code, self.translates[c], self.cloud.points_t, self.radius, self.space.kernel_matrix
        )

    def evaluate(self, rows: np.ndarray, removed: np.ndarray, stamp: int):
        """Mass (count, or weighted mass) of unremoved points in each candidate footprint."""
        rows = np.asarray(rows, dtype=np.int64)
        if self.cloud.weights is not None:
            w = self.cloud.weights
            out = []
            for r in rows:
                mem = self.indices[self.indptr[r] : self.indptr[r + 1]]
                out.append(math.fsum(w[mem[~removed[mem]]]))
            return np.array(out)
        if self.stored:
            return _kernels.csr_active_counts(self.indptr, self.indices, rows, removed)
        if self._active_stamp != stamp:
            self._active_points = _kernels.transpose(self.cloud.points[~removed])
            self._active_stamp = stamp
        return _kernels.translate_counts(
            self.space.code, self.translates[rows], self._active_points, self.radius, self.space.kernel_matrix
        )


def _same_rows(a: np.ndarray, b: np.ndarray) -> bool:
    if a.shape != b.shape:
        return False
    return bool(np.array_equal(a, b))


def _covers_cloud(cloud: EmpiricalMeasure, candidates: np.ndarray) -> bool:
    if _same_rows(candidates, cloud.points):
        return True
    have = {row.tobytes() for row in np.ascontiguousarray(candidates)}
    return all(row.tobytes() in have for row in np.ascontiguousarray(cloud.points))


def run_greedy(
    cloud: EmpiricalMeasure,
    candidates,
    select: Footprint,
    cover: Footprint,
    engine: str = "lazy",
    shape: dict | None = None,
) -> CoveringRun:
    """Greedy covering with arbitrary selection/covering footprints.

    ``candidates=None`` uses the cloud itself.  Ties between equal gains go
    to the lowest candidate index, for both engines.
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    space = cloud.space
    if candidates is None:
        cand = cloud.points
        cover_cloud = True
    else:
        cand = space.as_points(candidates)
        cover_cloud = _covers_cloud(cloud, cand)
    if cand.shape[0] == 0:
        raise ValueError("candidates must be nonempty")
    m = cloud.size
    k = cand.shape[0]
    _kernels.configure_threads()

    sel_translates = select.translates(space, cand)
    cov_translates = cover.translates(space, cand)
    initial = None
    if candidates is None and select.is_ball and cloud.uniform:
        # the eps-ball counts needed by the certificate come from the same distance pass
        radii = [select.radius]
        if cover.is_ball and cover.radius > select.radius:
            radii.append(cover.radius - select.radius)
        initial = cloud.ball_counts(radii)[:, 0]
    gains_eval = _Gains(cloud, sel_translates, select.radius, initial)

    run = CoveringRun(
        space=space,
        cloud=cloud,
        select=select,
        cover=cover,
        candidates=cand,
        candidates_cover_cloud=cover_cloud,
        engine=engine,
        max_select_count=int(gains_eval.initial.max()),
        shape=shape,
    )
    removed = np.zeros(m, dtype=bool)
    covered = np.zeros(m, dtype=bool)

    if cloud.weights is not None:
        current = gains_eval.evaluate(np.arange(k), removed, 0)
    else:
        current = gains_eval.initial.astype(np.int64)
    heap = [(-current[c], c, 0) for c in range(k)]
    heapq.heapify(heap)

    it = 0
    while not covered.all():
        if engine == "exhaustive":
            gains = gains_eval.evaluate(np.arange(k), removed, it) if it else current
            best = int(np.argmax(gains))
            best_gain = gains[best]
        elif not heap:
            best, best_gain = -1, 0
        else:
            batch = 16
            while True:
                neg, c, stamp = heap[0]
                if stamp == it:
                    heapq.heappop(heap)
                    best, best_gain = c, -neg
                    break
                stale = []
                while heap and heap[0][2] != it and len(stale) < batch:
                    stale.append(heapq.heappop(heap)[1])
                fresh = gains_eval.evaluate(np.array(stale), removed, it)
                for c2, g2 in zip(stale, fresh):
                    heapq.heappush(heap, (-g2, c2, it))
                batch = min(batch * 2, 4096)

        fallback = best_gain <= 0
        if fallback:
            if engine == "lazy" and best >= 0:
                heapq.heappush(heap, (0, best, -1))
            best = _fallback_candidate(run, cov_translates, covered)
            region = np.empty(0, dtype=np.int64)
            gain_mass = 0.0
            count = 0
        else:
            mem = gains_eval.members(best)
            region = mem[~removed[mem]]
            count = int(region.size)
            gain_mass = cloud.mass(region)
        removed[region] = True
        cov = _kernels.translate_members(
            space.code, cov_translates[best], cloud.points_t, cover.radius, space.kernel_matrix
        )
        covered[cov] = True
        it += 1
        run.chosen.append(int(best))
        run.gains.append(float(gain_mass))
        run.gain_counts.append(count)
        run.regions.append(region)
        run.fallback.append(bool(fallback))
        run.uncovered_after.append(int(m - covered.sum()))
        logger.debug("iteration %d: candidate %d gain %d uncovered %d", it, best, count, run.uncovered_after[-1])
    return run


def _fallback_candidate(run: CoveringRun, cov_translates: np.ndarray, covered: np.ndarray) -> int:
    cloud = run.cloud
    space = cloud.space
    uncovered = np.nonzero(~covered)[0]
    reach = _kernels.translate_counts(
        space.code, cov_translates, _kernels.transpose(cloud.points[uncovered]), run.cover.radius, space.kernel_matrix
    )
    hit = np.nonzero(reach > 0)[0]
    if hit.size == 0:
        raise InfeasibleDiscretization(uncovered[0])
    return int(hit[0])


def greedy_cover(
    cloud: EmpiricalMeasure,
    candidates=None,
    select_radius: float = None,
    cover_radius: float = None,
    engine: str = "lazy",
) -> CoveringRun:
    """Greedy ball covering: select with radius r - eps, cover with radius r."""
    if select_radius is None or cover_radius is None:
        raise TypeError("select_radius and cover_radius are required")
    if not 0 < select_radius < cover_radius:
        raise ValueError(f"need 0 < select_radius < cover_radius, got {select_radius}, {cover_radius}")
    space = cloud.space
    return run_greedy(
        cloud, candidates, Footprint.ball(space, select_radius), Footprint.ball(space, cover_radius), engine
    )


def default_epsilon(r: float, n: int, mu: float | None = None) -> float:
    """eps = r / (mu n + 1) with mu defaulting to max(ln n, 1 + 1e-6)."""
    if mu is None:
        mu = max(math.log(n), 1.0 + 1e-6) if n > 1 else 1.0 + 1e-6
    return r / (mu * n + 1.0)


@dataclass(eq=False)
class DualCertificate:
    """Piecewise constant dual function: value ``weights[i]`` on ``regions[i]``."""

    regions: list[np.ndarray] = field(repr=False)
    weights: list[float]
    flagged: list[bool]
    select: Footprint = field(repr=False)
    epsilon: float
    gains: list[float]
    max_select_count: int
    candidates_cover_cloud: bool

    @property
    def select_radius(self) -> float:
        return self.select.radius

    def point_values(self, cloud: EmpiricalMeasure) -> np.ndarray:
        """Per-point dual value times point weight (the price each point carries)."""
        vals = np.zeros(cloud.size)
        w = cloud.point_weights
        for reg, wt in zip(self.regions, self.weights):
            vals[reg] = wt * w[reg]
        return vals


def build_certificate(run: CoveringRun) -> DualCertificate:
    """Dual function g = 1/gain_i on the i-th removed piece, 0 elsewhere."""
    weights, flagged = [], []
    for gain, fb in zip(run.gains, run.fallback):
        if fb or gain <= 0:
            weights.append(0.0)
            flagged.append(True)
        else:
            weights.append(1.0 / gain)
            flagged.append(False)
    return DualCertificate(
        regions=list(run.regions),
        weights=weights,
        flagged=flagged,
        select=run.select,
        epsilon=run.epsilon,
        gains=list(run.gains),
        max_select_count=run.max_select_count,
        candidates_cover_cloud=run.candidates_cover_cloud,
    )


def harmonic_number(k: int) -> float:
    return math.fsum(1.0 / i for i in range(1, k + 1))


@dataclass
class CertificateReport:
    total_mass: float
    centers: int
    max_load: float
    argmax_load: int
    harmonic_bound: float
    harmonic_holds: bool
    log_ratio_bound: float
    log_ratio_bound_holds: bool
    min_eps_mass: float
    max_select_mass: float
    min_select_mass: float
    dual_fitting_holds: bool | None
    b_split: dict
    regions_disjoint: bool

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, **{k: v for k, v in self.__dict__.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _footprint_masses(cloud: EmpiricalMeasure, fp: Footprint) -> np.ndarray:
    """Mass of every cloud point's footprint translate."""
    if fp.is_ball:
        return cloud.ball_masses(fp.radius)
    space = cloud.space
    counts = _kernels.translate_counts(
        space.code, fp.translates(space, cloud.points), cloud.points_t, fp.radius, space.kernel_matrix
    )
    return counts / cloud.size


def _b_split(cert: DualCertificate, cloud: EmpiricalMeasure, y: int, eps_mass: float) -> dict:
    """Head/tail decomposition of the load at cloud point ``y``."""
    space = cloud.space
    members = _kernels.translate_members(
        space.code, cert.select.translates(space, cloud.points[y : y + 1])[0], cloud.points_t,
        cert.select.radius, space.kernel_matrix,
    )
    it_of = np.zeros(cloud.size, dtype=np.int64)
    for i, reg in enumerate(cert.regions, start=1):
        it_of[reg] = i
    w = cloud.point_weights
    n_it = len(cert.regions)
    drops = np.zeros(n_it + 1)
    np.add.at(drops, it_of[members], w[members])
    u0 = math.fsum(w[members])
    remaining = u0 - np.concatenate(([0.0], np.cumsum(drops[1:])))
    # b: last iteration whose remaining mass is still at least the eps-ball mass
    ok = np.nonzero(remaining >= eps_mass - 1e-15)[0]
    b = int(ok[-1]) if ok.size else 0
    terms = [
        (remaining[i - 1] - remaining[i]) * cert.weights[i - 1] for i in range(1, n_it + 1)
    ]
    head = math.fsum(terms[:b])
    tail = math.fsum(terms[b:])
    riemann = math.fsum(
        (remaining[i - 1] - remaining[i]) / remaining[i - 1] for i in range(1, b + 1) if remaining[i - 1] > 0
    )
    return {
        "point": int(y),
        "b": b,
        "initial_mass": float(u0),
        "eps_mass": float(eps_mass),
        "head": float(head),
        "tail": float(tail),
        "head_riemann_sum": float(riemann),
        "log_ratio": float(math.log(u0 / eps_mass)) if eps_mass > 0 and u0 > 0 else None,
    }


def check_certificate(cert: DualCertificate, cloud: EmpiricalMeasure, epsilon: float) -> CertificateReport:
    """Evaluate total mass and per-footprint loads of a dual certificate."""
    # eps < r - eps is the same condition as eps < r/2, under which the logarithmic bound applies
    if epsilon >= cert.select_radius:
        raise ValueError(f"epsilon {epsilon} must be smaller than the select radius {cert.select_radius}")
    space = cloud.space
    total = math.fsum(cloud.mass(reg) * wt for reg, wt in zip(cert.regions, cert.weights))

    all_idx = np.concatenate(cert.regions) if cert.regions else np.empty(0, dtype=np.int64)
    disjoint = np.unique(all_idx).size == all_idx.size

    if cloud.uniform:
        # price of a point removed in iteration i is 1 / count_i
        vals = np.zeros(cloud.size)
        for reg, fl in zip(cert.regions, cert.flagged):
            if not fl and reg.size:
                vals[reg] = 1.0 / reg.size
    else:
        vals = cert.point_values(cloud)
    support = np.nonzero(vals > 0)[0]
    loads = _kernels.translate_weighted_sums(
        space.code,
        cert.select.translates(space, cloud.points),
        _kernels.transpose(cloud.points[support]),
        vals[support],
        cert.select.radius,
        space.kernel_matrix,
    )
    y_star = int(np.argmax(loads))
    max_load = float(loads[y_star])

    sel_masses = _footprint_masses(cloud, cert.select)
    eps_masses = cloud.ball_masses(epsilon)
    min_eps = float(eps_masses.min())
    if cloud.uniform:
        k = int(round(sel_masses.max() * cloud.size))
        bound = harmonic_number(k)
    else:
        w = cloud.point_weights
        bound = 1.0 + math.log(float(sel_masses.max()) / float(w[w > 0].min()))
    log_ratio = math.log(float(sel_masses.max()) / min_eps) + 1.0 if min_eps > 0 else math.inf
    dual_fit = None
    if cert.select.is_ball:
        dual_fit = bool(len(cert.regions) * float(sel_masses.min()) <= max_load + 1e-9)
    return CertificateReport(
        total_mass=float(total),
        centers=len(cert.regions),
        max_load=max_load,
        argmax_load=y_star,
        harmonic_bound=float(bound),
        harmonic_holds=bool(max_load <= bound + 1e-9),
        log_ratio_bound=float(log_ratio),
        log_ratio_bound_holds=bool(max_load <= log_ratio + 1e-9),
        min_eps_mass=min_eps,
        max_select_mass=float(sel_masses.max()),
        min_select_mass=float(sel_masses.min()),
        dual_fitting_holds=dual_fit,
        b_split=_b_split(cert, cloud, y_star, float(eps_masses[y_star])),
        regions_disjoint=bool(disjoint),
    )


@dataclass
class TerminationReport:
    applicable: bool
    iterations: int
    min_eps_mass: float
    bound: float
    passed: bool
    gain_sum: float
    gain_sum_ok: bool
    radius: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def termination_bound_check(run: CoveringRun, cloud: EmpiricalMeasure, epsilon: float) -> TerminationReport:
    """Check iterations <= 1 / (smallest empirical ball mass at radius s) and sum of gains <= 1.

    s = min(eps, r - eps) for ball runs.  An uncovered point z is farther than r
    from every earlier center, so B(z, s) misses every earlier select ball and
    lies inside the select ball of z; the usual form s = eps needs eps <= r - eps.
    """
    gain_sum = math.fsum(run.gains)
    gain_ok = gain_sum <= 1.0 + 1e-9
    s = min(epsilon, run.select.radius) if run.select.is_ball else epsilon
    if not run.candidates_cover_cloud:
        return TerminationReport(False, run.iterations, math.nan, math.nan, gain_ok, gain_sum, gain_ok, s)
    min_eps = float(cloud.ball_masses(s).min())
    bound = 1.0 / min_eps
    passed = run.iterations <= bound * (1 + 1e-12)
    return TerminationReport(True, run.iterations, min_eps, bound, bool(passed and gain_ok), gain_sum, gain_ok, s)
