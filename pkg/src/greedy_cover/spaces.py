"""Compact metric spaces: spheres, flat tori and finite metric spaces.

Each space knows its exact distance, the normalized measure of a ball as a
function of the radius (where that is center independent), and how to draw
uniform samples from its probability measure.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, special

from greedy_cover import _kernels
from greedy_cover.errors import DomainError, UnsupportedOperation, ValidationError

METRIC_TOL = 1e-9


class Kind(str, enum.Enum):
    SPHERE = "sphere"
    TORUS = "torus"
    FINITE = "finite"


_KIND_CODE = {Kind.SPHERE: _kernels.SPHERE, Kind.TORUS: _kernels.TORUS, Kind.FINITE: _kernels.FINITE}


@dataclass(frozen=True, eq=False)
class Space:
    """A compact metric space with a homogeneous probability measure.

    ``dim`` is the manifold dimension n for spheres (S^n in R^(n+1)) and
    tori (R^n / Z^n); for finite spaces it is the number of points.
    """

    kind: Kind
    dim: int
    distance_matrix: np.ndarray | None = field(default=None, repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is not Kind.FINITE and self.dim < 1:
            raise ValidationError(f"dimension must be >= 1, got {self.dim}")

    @classmethod
    def sphere(cls, n: int) -> "Space":
        return cls(Kind.SPHERE, int(n))

    @classmethod
    def torus(cls, n: int) -> "Space":
        return cls(Kind.TORUS, int(n))

    @classmethod
    def finite(cls, distance_matrix, weights=None) -> "Space":
        return validate_finite_space(distance_matrix, weights)

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    @property
    def coord_dim(self) -> int:
        """Length of a point's coordinate row."""
        if self.kind is Kind.SPHERE:
            return self.dim + 1
        if self.kind is Kind.TORUS:
            return self.dim
        return 1

    @property
    def kernel_matrix(self) -> np.ndarray:
        if self.kind is Kind.FINITE:
            return self.distance_matrix
        return _kernels._DUMMY_MATRIX

    @property
    def diameter(self) -> float:
        if self.kind is Kind.SPHERE:
            return math.pi
        if self.kind is Kind.TORUS:
            return 0.5 * math.sqrt(self.dim)
        return float(self.distance_matrix.max())

    def as_points(self, x) -> np.ndarray:
        """Coerce one point or a batch of points to a float64 2-D array."""
        arr = np.asarray(x, dtype=np.float64)
        if self.kind is Kind.FINITE:
            arr = arr.reshape(-1, 1)
            if arr.size and (arr.min() < 0 or arr.max() >= self.dim or np.any(arr != np.floor(arr))):
                raise ValueError(f"finite-space points must be integer indices in [0, {self.dim})")
            return arr
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.coord_dim:
            raise ValueError(
                f"expected points with {self.coord_dim} coordinates for {self.kind.value} "
                f"of dimension {self.dim}, got shape {np.shape(x)}"
            )
        return np.ascontiguousarray(arr)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "dim": self.dim}
        if self.kind is Kind.FINITE:
            out["distance_matrix"] = self.distance_matrix.tolist()
            out["weights"] = self.weights.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "Space":
        kind = Kind(data["kind"])
        if kind is not Kind.FINITE:
            return cls(kind, int(data["dim"]))
        if "distance_csv" in data:
            path = Path(data["distance_csv"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            dmat = read_distance_csv(path)
        else:
            dmat = np.asarray(data["distance_matrix"], dtype=np.float64)
        return validate_finite_space(dmat, data.get("weights"))


def read_distance_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.asarray(rows, dtype=np.float64)


def validate_finite_space(distance_matrix, weights=None) -> Space:
    """Check the metric axioms and weight normalization of a finite space.

    Raises ValidationError naming the offending entry or triple.
    """
    dmat = np.array(distance_matrix, dtype=np.float64)
    if dmat.ndim != 2 or dmat.shape[0] != dmat.shape[1] or dmat.shape[0] == 0:
        raise ValidationError(f"distance matrix must be square and nonempty, got shape {dmat.shape}")
    m = dmat.shape[0]
    if not np.all(np.isfinite(dmat)):
        raise ValidationError("distance matrix has non-finite entries")
    if np.any(np.abs(np.diag(dmat)) > METRIC_TOL):
        i = int(np.argmax(np.abs(np.diag(dmat))))
        raise ValidationError(f"nonzero diagonal entry D[{i}][{i}] = {dmat[i, i]}")
    if np.any(dmat < -METRIC_TOL):
        i, j = np.argwhere(dmat < -METRIC_TOL)[0]
        raise ValidationError(f"negative distance D[{i}][{j}] = {dmat[i, j]}")
    asym = np.abs(dmat - dmat.T)
    if np.any(asym > METRIC_TOL):
        i, j = np.argwhere(asym > METRIC_TOL)[0]
        raise ValidationError(f"asymmetric distances D[{i}][{j}] != D[{j}][{i}]")
    # slack[i, k, j] = D[i, k] + D[k, j] - D[i, j]
    for k in range(m):
        slack = dmat[:, k][:, None] + dmat[k, :][None, :] - dmat
        if np.any(slack < -METRIC_TOL):
            i, j = np.argwhere(slack < -METRIC_TOL)[0]
            raise ValidationError(
                f"triangle inequality violated for triple ({i}, {k}, {j}): "
                f"D[{i}][{j}] = {dmat[i, j]} > D[{i}][{k}] + D[{k}][{j}] = {dmat[i, k] + dmat[k, j]}"
            )

    if weights is None:
        w = np.full(m, 1.0 / m)
    else:
        w = np.array(weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != m:
            raise ValidationError(f"expected {m} weights, got {w.shape[0]}")
        if np.any(w < 0):
            raise ValidationError("weights must be nonnegative")
        if abs(math.fsum(w) - 1.0) > METRIC_TOL:
            raise ValidationError(f"weights must sum to 1, got {math.fsum(w)}")
    dmat = 0.5 * (dmat + dmat.T)
    np.fill_diagonal(dmat, 0.0)
    dmat.setflags(write=False)
    w.setflags(write=False)
    return Space(Kind.FINITE, m, dmat, w)


def distance(space: Space, x, y) -> float:
    """Metric distance between two points of ``space``."""
    a = space.as_points(x)
    b = space.as_points(y)
    if a.shape[0] != 1 or b.shape[0] != 1:
        raise ValueError("distance takes single points; use pairwise_distances for batches")
    return float(_kernels.pair_distance(space.code, a[0], b[0], space.kernel_matrix))


def distances_from(space: Space, x, points) -> np.ndarray:
    a = space.as_points(x)[0]
    return _kernels.distances_from(space.code, a, space.as_points(points), space.kernel_matrix)


def pairwise_distances(space: Space, xs, ys) -> np.ndarray:
    a = space.as_points(xs)
    b = space.as_points(ys)
    return np.stack([_kernels.distances_from(space.code, row, b, space.kernel_matrix) for row in a])


def unit_ball_volume(n: int) -> float:
    """Lebesgue volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _sphere_cap_measure(n: int, s: float) -> float:
    if s == 0.0:
        return 0.0
    if s >= math.pi:
        return 1.0
    if n == 1:
        return s / math.pi
    full = special.beta(n / 2, 0.5)
    # integrate the shorter side; the complement keeps relative accuracy near pi
    if s <= math.pi / 2:
        part, _ = integrate.quad(lambda t: math.sin(t) ** (n - 1), 0.0, s, epsabs=0.0, epsrel=1e-13, limit=200)
        return float(min(1.0, part / full))
    part, _ = integrate.quad(lambda t: math.sin(t) ** (n - 1), s, math.pi, epsabs=0.0, epsrel=1e-13, limit=200)
    return float(max(0.0, 1.0 - part / full))


def ball_measure(space: Space, s: float) -> float:
    """Normalized measure omega_s of a closed ball of radius ``s``."""
    s = float(s)
    if space.kind is Kind.FINITE:
        raise UnsupportedOperation("ball measures of finite spaces depend on the center; use the empirical cloud")
    if not s >= 0:
        raise DomainError(f"radius must be nonnegative, got {s}")
    if space.kind is Kind.SPHERE:
        if s > math.pi:
            raise DomainError(f"sphere radius must lie in [0, pi], got {s}")
        return _sphere_cap_measure(space.dim, s)
    if s >= 0.5:
        raise DomainError(f"torus radius must be < 1/2, got {s}")
    return unit_ball_volume(space.dim) * s**space.dim


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator; ``stream`` selects an independent substream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


def sample(space: Space, seed: int, m: int, stream: int = 0) -> np.ndarray:
    """Draw ``m`` i.i.d. uniform points; rows follow the space's point layout."""
    if m < 1:
        raise ValueError(f"sample size must be >= 1, got {m}")
    rng = make_rng(seed, stream)
    if space.kind is Kind.SPHERE:
        pts = rng.standard_normal((m, space.dim + 1))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        return pts
    if space.kind is Kind.TORUS:
        return rng.random((m, space.dim))
    idx = rng.choice(space.dim, size=m, p=space.weights)
    return idx.astype(np.float64).reshape(-1, 1)
