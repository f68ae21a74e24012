"""Greedy covering of the torus by translates of finite unions of balls.

A shape pair plays the role of the (r - eps, r) ball pair: translates of the
inner shape are scored by uncovered mass, translates of the outer shape do
the covering.  Only translations are supported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from greedy_cover import _kernels
from greedy_cover.bounds import naszodi_bound
from greedy_cover.empirical import SCHEMA, EmpiricalMeasure
from greedy_cover.errors import UnsupportedOperation, ValidationError
from greedy_cover.greedy import CoveringRun, Footprint, run_greedy
from greedy_cover.spaces import Kind, Space, ball_measure, make_rng, sample


@dataclass(frozen=True, eq=False)
class UnionOfBalls:
    """Closed balls of common radius ``radius`` centred at ``offsets`` (rows)."""

    offsets: np.ndarray
    radius: float

    def __post_init__(self):
        off = np.array(self.offsets, dtype=np.float64)
        if off.ndim == 1:
            off = off[None, :]
        if off.ndim != 2 or off.shape[0] == 0 or off.shape[1] == 0:
            raise ValidationError(f"offsets must be a nonempty list of vectors, got shape {off.shape}")
        if not self.radius > 0:
            raise ValidationError(f"radius must be positive, got {self.radius}")
        reach = float(self.radius) + float(np.abs(off).max())
        if not reach < 0.5:
            raise ValidationError(f"radius + max offset coordinate = {reach} must be < 1/2")
        off.setflags(write=False)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.offsets.shape[1]

    @property
    def footprint(self) -> Footprint:
        return Footprint(self.offsets, self.radius)

    def to_dict(self) -> dict:
        return {"offsets": self.offsets.tolist(), "radius": self.radius}

    @classmethod
    def from_dict(cls, data: dict) -> "UnionOfBalls":
        return cls(np.asarray(data["offsets"], dtype=np.float64), float(data["radius"]))

    @classmethod
    def ball(cls, n: int, radius: float) -> "UnionOfBalls":
        return cls(np.zeros((1, n)), radius)


@dataclass(frozen=True, eq=False)
class ShapePair:
    inner: UnionOfBalls
    outer: UnionOfBalls

    def __post_init__(self):
        if self.inner.dim != self.outer.dim:
            raise ValidationError(f"inner and outer dimensions differ: {self.inner.dim} vs {self.outer.dim}")

    @property
    def dim(self) -> int:
        return self.outer.dim

    def to_dict(self) -> dict:
        return {"inner": self.inner.to_dict(), "outer": self.outer.to_dict()}

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ShapePair":
        parts = {}
        for key in ("inner", "outer"):
            item = data[key]
            if isinstance(item, str):
                path = Path(item)
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                item = json.loads(path.read_text())
            parts[key] = UnionOfBalls.from_dict(item)
        return cls(**parts)


def load_shape_pair(path) -> ShapePair:
    """Read a pair file; ``inner``/``outer`` may be inline shapes or paths to shape files."""
    path = Path(path)
    return ShapePair.from_dict(json.loads(path.read_text()), base_dir=path.parent)


def _require_torus(space: Space, shape: UnionOfBalls):
    if space.kind is not Kind.TORUS:
        raise UnsupportedOperation(f"shapes are only defined on the torus, got {space.kind.value}")
    if shape.dim != space.dim:
        raise ValidationError(f"shape dimension {shape.dim} does not match torus dimension {space.dim}")


def _min_offset_distance(shape: UnionOfBalls, translate: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Distance from each of ``pts`` to the nearest ball centre of the translate."""
    centres = np.mod(translate[None, :] + shape.offsets, 1.0)
    return _kernels.nearest_distances(_kernels.TORUS, np.ascontiguousarray(pts), centres, _kernels._DUMMY_MATRIX)


def shape_membership(space: Space, shape: UnionOfBalls, translate, x) -> bool:
    """True iff some ball of ``translate + shape`` contains ``x``."""
    _require_torus(space, shape)
    t = space.as_points(translate)[0]
    p = space.as_points(x)
    return bool(_min_offset_distance(shape, t, p)[0] <= shape.radius)


def greedy_shape_cover(
    cloud: EmpiricalMeasure, candidates=None, pair: ShapePair = None, engine: str = "lazy"
) -> CoveringRun:
    """Greedy covering that selects with inner-shape translates and covers with outer ones."""
    if pair is None:
        raise TypeError("pair is required")
    _require_torus(cloud.space, pair.inner)
    _require_torus(cloud.space, pair.outer)
    return run_greedy(
        cloud, candidates, pair.inner.footprint, pair.outer.footprint, engine, shape=pair.to_dict()
    )


def _sample_in_shape(shape: UnionOfBalls, m: int, rng: np.random.Generator) -> np.ndarray:
    """Points of the translate at 0: a random ball of the union, then a uniform point in it."""
    n = shape.dim
    which = rng.integers(shape.offsets.shape[0], size=m)
    direction = rng.standard_normal((m, n))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radial = shape.radius * rng.random(m) ** (1.0 / n)
    return np.mod(shape.offsets[which] + direction * radial[:, None], 1.0)


def validate_shape_pair(pair: ShapePair, samples: int = 10_000, seed: int = 0) -> bool:
    """Sampled check that the inner shape lies inside the outer shape."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    pts = _sample_in_shape(pair.inner, samples, make_rng(seed, 2))
    d = _min_offset_distance(pair.outer, np.zeros(pair.dim), pts)
    return bool(np.all(d <= pair.outer.radius))


def shape_mass(cloud: EmpiricalMeasure, shape: UnionOfBalls, translate=None) -> float:
    """Empirical mass of one translate of ``shape`` (the translate at 0 by default)."""
    _require_torus(cloud.space, shape)
    t = np.zeros(shape.dim) if translate is None else cloud.space.as_points(translate)[0]
    tr = shape.footprint.translates(cloud.space, t[None, :])
    count = _kernels.translate_counts(
        _kernels.TORUS, tr, cloud.points_t, shape.radius, _kernels._DUMMY_MATRIX
    )[0]
    return int(count) / cloud.size


def shape_volume(shape: UnionOfBalls, samples: int, seed: int) -> float:
    """Monte Carlo volume of ``shape`` from a fresh uniform sample of the torus."""
    space = Space.torus(shape.dim)
    pts = sample(space, seed, samples, stream=3)
    d = _min_offset_distance(shape, np.zeros(shape.dim), pts)
    return float(np.count_nonzero(d <= shape.radius)) / samples


def dumbbell(n: int, separation: float, radius: float) -> UnionOfBalls:
    """Two balls centred at +-separation/2 along the first axis."""
    off = np.zeros((2, n))
    off[0, 0] = -separation / 2.0
    off[1, 0] = separation / 2.0
    return UnionOfBalls(off, radius)


def dumbbell_pair(n: int, separation: float, radius: float, delta: float) -> ShapePair:
    """Outer dumbbell K and inner approximant with balls shrunk by delta/2."""
    if not 0 < delta / 2 < radius:
        raise ValidationError(f"need 0 < delta/2 < radius, got delta={delta}, radius={radius}")
    return ShapePair(dumbbell(n, separation, radius - delta / 2.0), dumbbell(n, separation, radius))


def outer_coverage(run: CoveringRun, pair: ShapePair, points=None) -> float:
    """Fraction of ``points`` (the cloud by default) inside some chosen outer translate, by a direct scan."""
    space = run.cloud.space
    pts = run.cloud.points if points is None else space.as_points(points)
    centres = pair.outer.footprint.translates(space, run.centers).reshape(-1, pair.dim)
    d = _kernels.nearest_distances(_kernels.TORUS, pts, np.ascontiguousarray(centres), _kernels._DUMMY_MATRIX)
    return float(np.count_nonzero(d <= pair.outer.radius)) / pts.shape[0]


@dataclass
class ShapeReport:
    centers: int
    outer_coverage: float
    outer_volume: float
    inner_volume: float
    density: float
    delta: float | None
    improved_bound: float | None
    original_bound: float | None
    volume_samples: int

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, **self.__dict__}


def shape_report(run: CoveringRun, pair: ShapePair, delta: float | None, samples: int, seed: int) -> ShapeReport:
    """Coverage scan, density from Monte Carlo volumes and the translative covering bounds.

    The bounds need ``delta``: the inner shape stands in for K_{-delta/2} and
    the outer balls shrunk by delta for K_{-delta}.
    """
    vol_k = shape_volume(pair.outer, samples, seed)
    vol_in = shape_volume(pair.inner, samples, seed)
    improved = original = None
    if delta is not None:
        space = Space.torus(pair.dim)
        shrunk = pair.outer.radius - delta
        vol_minus = shape_volume(UnionOfBalls(pair.outer.offsets, shrunk), samples, seed) if shrunk > 0 else 0.0
        nb = naszodi_bound(vol_k, min(vol_minus, vol_in), vol_in, ball_measure(space, delta / 2.0))
        improved, original = nb.improved, nb.original
    return ShapeReport(
        centers=run.iterations,
        outer_coverage=outer_coverage(run, pair),
        outer_volume=vol_k,
        inner_volume=vol_in,
        density=run.iterations * vol_k,
        delta=delta,
        improved_bound=improved,
        original_bound=original,
        volume_samples=samples,
    )
