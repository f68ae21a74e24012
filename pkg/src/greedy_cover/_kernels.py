"""Compiled distance kernels.

Every ball-membership decision is ``pair_distance(a, b) <= radius``.  The
bulk kernels reach the same decision faster: they accumulate the dot product
(sphere) or squared min-image distance (torus) in the same order as
``pair_distance`` and only call acos/sqrt for pairs within a relative 1e-12
band of the boundary.  Grid queries, brute-force scans and bulk counts
therefore agree bit-for-bit.

Points are float64 rows: unit vectors on the sphere, coordinates in [0, 1)
on the torus, and a single float holding the point index for finite spaces.
Bulk kernels take points transposed, shape (d, M), so inner loops run over
contiguous memory.
"""

import math
import os

# try OpenMP before TBB; an outdated TBB otherwise triggers a warning on every run
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp tbb workqueue")

import numpy as np  # noqa: E402
from numba import config, njit, prange, set_num_threads  # noqa: E402

SPHERE = 0
TORUS = 1
FINITE = 2

_DUMMY_MATRIX = np.zeros((1, 1))
_BAND = 1e-12


def configure_threads():
    """Cap numba workers by ``GREEDY_COVER_THREADS`` if set."""
    cap = os.environ.get("GREEDY_COVER_THREADS")
    if cap:
        set_num_threads(max(1, min(int(cap), config.NUMBA_NUM_THREADS)))


@njit(cache=True)
def pair_distance(kind, a, b, dmat):
    if kind == SPHERE:
        acc = 0.0
        for j in range(a.shape[0]):
            acc += a[j] * b[j]
        if acc > 1.0:
            acc = 1.0
        elif acc < -1.0:
            acc = -1.0
        return math.acos(acc)
    elif kind == TORUS:
        acc = 0.0
        for j in range(a.shape[0]):
            d = abs(a[j] - b[j])
            if d > 0.5:
                d = 1.0 - d
            acc += d * d
        return math.sqrt(acc)
    return dmat[int(a[0]), int(b[0])]


@njit(cache=True)
def distances_from(kind, x, points, dmat):
    out = np.empty(points.shape[0])
    for i in range(points.shape[0]):
        out[i] = pair_distance(kind, x, points[i], dmat)
    return out


@njit(cache=True)
def subset_distances(kind, x, points, idx, dmat):
    out = np.empty(idx.shape[0])
    for k in range(idx.shape[0]):
        out[k] = pair_distance(kind, x, points[idx[k]], dmat)
    return out


@njit(cache=True)
def thresholds(kind, radius):
    """Bounds on the accumulated key outside of which no exact call is needed."""
    if kind == SPHERE:
        c = math.cos(min(radius, math.pi))
        return c - _BAND, c + _BAND
    if kind == TORUS:
        sq = radius * radius
        return sq * (1.0 - _BAND), sq * (1.0 + _BAND)
    return radius, radius


@njit(inline="always")
def _fill_keys(kind, x, pts_t, keys):
    m = pts_t.shape[1]
    for i in range(m):
        keys[i] = 0.0
    for j in range(pts_t.shape[0]):
        xj = x[j]
        row = pts_t[j]
        if kind == SPHERE:
            for i in range(m):
                keys[i] += xj * row[i]
        else:
            for i in range(m):
                t = abs(xj - row[i])
                t = min(t, 1.0 - t)
                keys[i] += t * t


@njit(inline="always")
def _key_within(kind, key, radius, lo, hi):
    if kind == SPHERE:
        if key >= hi:
            return True
        if key <= lo:
            return False
        if key > 1.0:
            key = 1.0
        elif key < -1.0:
            key = -1.0
        return math.acos(key) <= radius
    if key <= lo:
        return True
    if key > hi:
        return False
    return math.sqrt(key) <= radius


@njit(inline="always")
def _count_within(kind, keys, radius, lo, hi):
    """Number of keys inside the closed ball; exact calls only inside the band."""
    m = keys.shape[0]
    sure = 0
    band = 0
    if kind == SPHERE:
        for i in range(m):
            sure += keys[i] >= hi
            band += (keys[i] > lo) & (keys[i] < hi)
    else:
        for i in range(m):
            sure += keys[i] <= lo
            band += (keys[i] > lo) & (keys[i] <= hi)
    if band:
        for i in range(m):
            k = keys[i]
            if kind == SPHERE:
                if k > lo and k < hi:
                    sure += _key_within(kind, k, radius, lo, hi)
            elif k > lo and k <= hi:
                sure += _key_within(kind, k, radius, lo, hi)
    return sure


@njit(inline="always")
def _sum_within(kind, keys, values, radius, lo, hi):
    """Sum of ``values`` over keys inside the closed ball, in index order."""
    m = keys.shape[0]
    acc = 0.0
    band = 0
    if kind == SPHERE:
        for i in range(m):
            inside = keys[i] >= hi
            band += (keys[i] > lo) & (keys[i] < hi)
            acc += values[i] * inside
    else:
        for i in range(m):
            inside = keys[i] <= lo
            band += (keys[i] > lo) & (keys[i] <= hi)
            acc += values[i] * inside
    if band:
        acc = 0.0
        for i in range(m):
            if _key_within(kind, keys[i], radius, lo, hi):
                acc += values[i]
    return acc


@njit(inline="always")
def _member_mask(kind, translates, pts_t, dmat, radius, lo, hi, keys, mask):
    """mask[i] = point i lies in the union of balls around ``translates`` (Q, d)."""
    m = pts_t.shape[1]
    for i in range(m):
        mask[i] = False
    if kind == FINITE:
        for q in range(translates.shape[0]):
            row = int(translates[q, 0])
            for i in range(m):
                if dmat[row, int(pts_t[0, i])] <= radius:
                    mask[i] = True
        return
    for q in range(translates.shape[0]):
        _fill_keys(kind, translates[q], pts_t, keys)
        for i in range(m):
            if not mask[i] and _key_within(kind, keys[i], radius, lo, hi):
                mask[i] = True


@njit(parallel=True, cache=True)
def ball_counts(kind, centers, pts_t, radii, dmat):
    """Counts of points within each radius of each center, shape (K, R)."""
    k = centers.shape[0]
    nr = radii.shape[0]
    m = pts_t.shape[1]
    los = np.empty(nr)
    his = np.empty(nr)
    for r in range(nr):
        los[r], his[r] = thresholds(kind, radii[r])
    out = np.zeros((k, nr), dtype=np.int64)
    for c in prange(k):
        if kind == FINITE:
            row = int(centers[c, 0])
            for i in range(m):
                d = dmat[row, int(pts_t[0, i])]
                for r in range(nr):
                    if d <= radii[r]:
                        out[c, r] += 1
            continue
        keys = np.empty(m)
        _fill_keys(kind, centers[c], pts_t, keys)
        for r in range(nr):
            out[c, r] = _count_within(kind, keys, radii[r], los[r], his[r])
    return out


@njit(parallel=True, cache=True)
def translate_counts(kind, translates, pts_t, radius, dmat):
    """Counts of points inside each union-of-balls translate.

    ``translates`` has shape (K, Q, d): K shapes, each with Q ball centers.
    """
    k = translates.shape[0]
    m = pts_t.shape[1]
    lo, hi = thresholds(kind, radius)
    out = np.zeros(k, dtype=np.int64)
    single = translates.shape[1] == 1 and kind != FINITE
    for c in prange(k):
        keys = np.empty(m)
        if single:
            _fill_keys(kind, translates[c, 0], pts_t, keys)
            out[c] = _count_within(kind, keys, radius, lo, hi)
            continue
        mask = np.empty(m, dtype=np.bool_)
        _member_mask(kind, translates[c], pts_t, dmat, radius, lo, hi, keys, mask)
        out[c] = mask.sum()
    return out


@njit(cache=True)
def translate_members(kind, translates, pts_t, radius, dmat):
    """Sorted indices of points inside one union-of-balls translate (Q, d)."""
    m = pts_t.shape[1]
    lo, hi = thresholds(kind, radius)
    keys = np.empty(m)
    mask = np.empty(m, dtype=np.bool_)
    _member_mask(kind, translates, pts_t, dmat, radius, lo, hi, keys, mask)
    return np.nonzero(mask)[0]


@njit(parallel=True, cache=True)
def translate_csr(kind, translates, pts_t, radius, dmat):
    k = translates.shape[0]
    m = pts_t.shape[1]
    lo, hi = thresholds(kind, radius)
    counts = np.zeros(k, dtype=np.int64)
    for c in prange(k):
        keys = np.empty(m)
        mask = np.empty(m, dtype=np.bool_)
        _member_mask(kind, translates[c], pts_t, dmat, radius, lo, hi, keys, mask)
        counts[c] = mask.sum()
    indptr = np.zeros(k + 1, dtype=np.int64)
    for c in range(k):
        indptr[c + 1] = indptr[c] + counts[c]
    indices = np.empty(indptr[k], dtype=np.int32)
    for c in prange(k):
        keys = np.empty(m)
        mask = np.empty(m, dtype=np.bool_)
        _member_mask(kind, translates[c], pts_t, dmat, radius, lo, hi, keys, mask)
        pos = indptr[c]
        for i in range(m):
            if mask[i]:
                indices[pos] = i
                pos += 1
    return indptr, indices


@njit(parallel=True, cache=True)
def translate_weighted_sums(kind, translates, pts_t, values, radius, dmat):
    """Per translate, the sum of ``values`` over points inside it (index order)."""
    k = translates.shape[0]
    m = pts_t.shape[1]
    lo, hi = thresholds(kind, radius)
    out = np.zeros(k)
    single = translates.shape[1] == 1 and kind != FINITE
    for c in prange(k):
        keys = np.empty(m)
        if single:
            _fill_keys(kind, translates[c, 0], pts_t, keys)
            out[c] = _sum_within(kind, keys, values, radius, lo, hi)
            continue
        mask = np.empty(m, dtype=np.bool_)
        _member_mask(kind, translates[c], pts_t, dmat, radius, lo, hi, keys, mask)
        acc = 0.0
        for i in range(m):
            if mask[i]:
                acc += values[i]
        out[c] = acc
    return out


@njit(parallel=True, cache=True)
def csr_active_counts(indptr, indices, rows, removed):
    out = np.zeros(rows.shape[0], dtype=np.int64)
    for k in prange(rows.shape[0]):
        r = rows[k]
        cnt = 0
        for j in range(indptr[r], indptr[r + 1]):
            if not removed[indices[j]]:
                cnt += 1
        out[k] = cnt
    return out


@njit(parallel=True, cache=True)
def nearest_distances(kind, queries, centers, dmat):
    out = np.empty(queries.shape[0])
    for i in prange(queries.shape[0]):
        best = np.inf
        for c in range(centers.shape[0]):
            d = pair_distance(kind, queries[i], centers[c], dmat)
            if d < best:
                best = d
        out[i] = best
    return out


def transpose(points: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(points.T)
