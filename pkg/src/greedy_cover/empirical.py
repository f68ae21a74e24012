"""Empirical (point cloud) approximations of the homogeneous measure.

A cloud of M i.i.d. samples with weight 1/M each stands in for the base
measure; ball masses become point counts divided by M.  A uniform cell grid
prunes single ball queries; bulk counts use the compiled kernels directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from greedy_cover import _kernels
from greedy_cover.spaces import Kind, Space, sample

SCHEMA = "greedy-cover/1"


class CellGrid:
    """Uniform cell index over point coordinates.

    Torus cells have side 1/g with g = floor(1/h) cells per axis; sphere
    cells tile the cube [-1, 1]^(n+1) with side 1/ceil(M^(1/(n+1))).
    """

    def __init__(self, space: Space, points: np.ndarray, cell_size: float | None = None):
        self.space = space
        m = points.shape[0]
        d = space.coord_dim
        if space.kind is Kind.TORUS:
            h = cell_size if cell_size is not None else (1.0 / m) ** (1.0 / space.dim)
            self.per_axis = max(1, int(math.floor(1.0 / h)))
            self.side = 1.0 / self.per_axis
            self.origin = 0.0
        else:
            side = cell_size if cell_size is not None else 1.0 / math.ceil(m ** (1.0 / (space.dim + 1)))
            self.per_axis = max(1, int(math.ceil(2.0 / side)))
            self.side = side
            self.origin = -1.0
        self.dim = d
        self.enabled = self.per_axis**d < 2**62
        if not self.enabled:
            return
        cells = self._cell_coords(points)
        self._strides = self.per_axis ** np.arange(d, dtype=np.int64)
        ids = cells @ self._strides
        self.order = np.argsort(ids, kind="stable")
        sorted_ids = ids[self.order]
        self.cell_ids, self.starts, self.counts = np.unique(sorted_ids, return_index=True, return_counts=True)
        self.cell_coords = cells[self.order[self.starts]]

    def _cell_coords(self, pts: np.ndarray) -> np.ndarray:
        c = np.floor((pts - self.origin) / self.side).astype(np.int64)
        return np.clip(c, 0, self.per_axis - 1)

    def _axis_cells(self, x: np.ndarray, reach: float) -> list[np.ndarray] | None:
        g = self.per_axis
        ranges = []
        for j in range(self.dim):
            lo = int(math.floor((x[j] - reach - self.origin) / self.side)) - 1
            hi = int(math.floor((x[j] + reach - self.origin) / self.side)) + 1
            if self.space.kind is Kind.TORUS:
                if hi - lo + 1 >= g:
                    ranges.append(np.arange(g))
                else:
                    ranges.append(np.unique(np.arange(lo, hi + 1) % g))
            else:
                ranges.append(np.arange(max(lo, 0), min(hi, g - 1) + 1))
        return ranges

    def candidates(self, x: np.ndarray, s: float) -> np.ndarray | None:
        """Indices of points in cells that may meet the closed ball; None means all."""
        if not self.enabled:
            return None
        if self.space.kind is Kind.TORUS:
            reach = s
        else:
            if s >= math.pi:
                return None
            reach = 2.0 * math.sin(s / 2.0)
        ranges = self._axis_cells(x, reach)
        n_box = math.prod(len(r) for r in ranges)
        if n_box <= len(self.cell_ids):
            grids = np.meshgrid(*ranges, indexing="ij")
            box_ids = sum(gr.reshape(-1).astype(np.int64) * int(st) for gr, st in zip(grids, self._strides))
            pos = np.minimum(np.searchsorted(self.cell_ids, box_ids), len(self.cell_ids) - 1)
            hit = pos[self.cell_ids[pos] == box_ids]
        else:
            mask = np.ones(len(self.cell_ids), dtype=bool)
            for j, r in enumerate(ranges):
                table = np.zeros(self.per_axis, dtype=bool)
                table[r] = True
                mask &= table[self.cell_coords[:, j]]
            hit = np.nonzero(mask)[0]
        if hit.size == 0:
            return np.empty(0, dtype=np.int64)
        starts = self.starts[hit]
        counts = self.counts[hit]
        total = int(counts.sum())
        offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
        return self.order[offsets + np.arange(total)]


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniform-weight point cloud standing in for the base measure.

    For finite spaces the cloud is the point set itself and ``weights`` holds
    the space's weight vector when it is not uniform.
    """

    space: Space
    points: np.ndarray = field(repr=False)
    seed: int
    weights: np.ndarray | None = field(default=None, repr=False)
    grid: CellGrid | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def points_t(self) -> np.ndarray:
        """Coordinate-major copy of the points for the bulk kernels."""
        if "points_t" not in self._cache:
            self._cache["points_t"] = _kernels.transpose(self.points)
        return self._cache["points_t"]

    @property
    def uniform(self) -> bool:
        return self.weights is None

    @property
    def weight(self) -> float:
        return 1.0 / self.size

    @property
    def point_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.size, 1.0 / self.size)
        return self.weights

    @property
    def total_mass(self) -> float:
        return self.mass(np.arange(self.size))

    def mass(self, idx) -> float:
        idx = np.asarray(idx, dtype=np.int64)
        if self.weights is None:
            return idx.size / self.size
        return math.fsum(self.weights[idx])

    def ball_masses(self, s: float) -> np.ndarray:
        """Empirical mass of B(p, s) for every cloud point p (cached per radius)."""
        key = ("mass", float(s))
        if key not in self._cache:
            if self.weights is None:
                self._cache[key] = self.ball_counts([s])[:, 0] / self.size
            else:
                inside = self.space.distance_matrix <= s
                self._cache[key] = np.array([math.fsum(self.weights[row]) for row in inside])
        return self._cache[key]

    def ball_counts(self, radii) -> np.ndarray:
        """Point counts of B(p, s) for every cloud point p, shape (M, len(radii))."""
        radii = [float(s) for s in radii]
        missing = [s for s in radii if ("count", s) not in self._cache]
        if missing:
            counts = _kernels.ball_counts(
                self.space.code, self.points, self.points_t, np.array(missing), self.space.kernel_matrix
            )
            for j, s in enumerate(missing):
                self._cache[("count", s)] = counts[:, j]
        return np.stack([self._cache[("count", s)] for s in radii], axis=1)


def build_cloud(space: Space, m: int, seed: int, cell_size: float | None = None) -> EmpiricalMeasure:
    """Sample a cloud of ``m`` points and index it.

    For finite spaces ``m`` is ignored: every point of the space enters once
    with its own weight.
    """
    if m < 1:
        raise ValueError(f"cloud size must be >= 1, got {m}")
    if space.kind is Kind.FINITE:
        pts = np.arange(space.dim, dtype=np.float64).reshape(-1, 1)
        w = space.weights
        weights = None if np.all(w == w[0]) else w
        return EmpiricalMeasure(space, pts, int(seed), weights, None)
    pts = sample(space, seed, m)
    pts.setflags(write=False)
    return EmpiricalMeasure(space, pts, int(seed), None, CellGrid(space, pts, cell_size))


def ball_indices(cloud: EmpiricalMeasure, center, s: float, use_grid: bool = True) -> np.ndarray:
    """Sorted indices of cloud points within distance ``s`` (closed ball)."""
    if s < 0:
        raise ValueError(f"radius must be nonnegative, got {s}")
    space = cloud.space
    x = space.as_points(center)[0]
    cand = None
    if use_grid and cloud.grid is not None:
        cand = cloud.grid.candidates(x, s)
    if cand is None:
        d = _kernels.distances_from(space.code, x, cloud.points, space.kernel_matrix)
        return np.nonzero(d <= s)[0]
    d = _kernels.subset_distances(space.code, x, cloud.points, cand, space.kernel_matrix)
    return np.sort(cand[d <= s])


def empirical_ball_extremes(cloud: EmpiricalMeasure, s: float, centers) -> tuple[float, float]:
    """Smallest and largest empirical ball mass over ``centers``."""
    pts = cloud.space.as_points(centers)
    if pts.shape[0] == 0:
        raise ValueError("centers must be nonempty")
    if cloud.uniform:
        counts = _kernels.ball_counts(
            cloud.space.code, pts, cloud.points_t, np.array([float(s)]), cloud.space.kernel_matrix
        )[:, 0]
        return counts.min() / cloud.size, counts.max() / cloud.size
    masses = [cloud.mass(ball_indices(cloud, p, s)) for p in pts]
    return min(masses), max(masses)


def save_cloud(cloud: EmpiricalMeasure, csv_path) -> Path:
    """Write points as CSV (one row per point) plus a JSON sidecar."""
    csv_path = Path(csv_path)
    np.savetxt(csv_path, cloud.points, delimiter=",", fmt="%.17g")
    sidecar = csv_path.with_suffix(".json")
    meta = {"schema": SCHEMA, "space": cloud.space.to_dict(), "seed": cloud.seed, "M": cloud.size}
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return sidecar


def load_cloud(csv_path) -> EmpiricalMeasure:
    csv_path = Path(csv_path)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    space = Space.from_dict(meta["space"])
    pts = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    pts = space.as_points(pts)
    if pts.shape[0] != meta["M"]:
        raise ValueError(f"sidecar says M={meta['M']} but CSV holds {pts.shape[0]} points")
    if space.kind is Kind.FINITE:
        w = space.weights
        return EmpiricalMeasure(space, pts, int(meta["seed"]), None if np.all(w == w[0]) else w, None)
    pts.setflags(write=False)
    return EmpiricalMeasure(space, pts, int(meta["seed"]), None, CellGrid(space, pts))
