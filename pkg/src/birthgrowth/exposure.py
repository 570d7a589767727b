"""Which seeds are exposed.

Seed ``x`` is shaded if some seed ``y`` born earlier satisfies
``|x - y| <= v_y (t_x - t_y)``; shaded seeds still shade later ones.
Birth-time ties are broken by seed id (lower id is earlier).

``exposed_naive`` checks every earlier seed. ``exposed_indexed`` is the
same predicate over a uniform grid split into dyadic speed buckets; the
two must agree flag for flag, so both evaluate the distance with the same
float operations in the same order.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

MAX_CELLS_PER_SEED = 4


@dataclass(frozen=True)
class ExposureResult:
    flags: np.ndarray  # indexed like the realization's rows
    F: int
    algorithm: str
    wall_time: float


def _birth_order(realization):
    return np.lexsort((realization.ids, realization.birth_times))


def functional_F(realization, flags, spec=None):
    """Number of exposed seeds located in ``W`` and born by ``a``."""
    spec = spec if spec is not None else realization.spec
    if len(realization) == 0:
        return 0
    flags = np.asarray(flags, dtype=bool)
    if spec is None:
        return int(np.count_nonzero(flags))
    inside = spec.effective_window.distance(realization.locations) <= 0.0
    return int(np.count_nonzero(flags & inside & (realization.birth_times <= spec.horizon)))


def _naive_flags(X, T, V):
    n, d = X.shape
    flags = np.ones(n, dtype=bool)
    for j in range(1, n):
        d2 = np.zeros(j)
        for k in range(d):
            diff = X[:j, k] - X[j, k]
            d2 += diff * diff
        reach = V[:j] * (T[j] - T[:j])
        flags[j] = not np.any(np.sqrt(d2) <= reach)
    return flags


def exposed_naive(realization, spec=None):
    start = time.perf_counter()
    order = _birth_order(realization)
    flags_sorted = _naive_flags(
        realization.locations[order], realization.birth_times[order], realization.speeds[order]
    )
    flags = np.empty(len(order), dtype=bool)
    flags[order] = flags_sorted
    return ExposureResult(flags, functional_F(realization, flags, spec), "naive", time.perf_counter() - start)


# -- indexed ------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _indexed_flags(X, T, V, cell, lo, h, dims, bucket, n_buckets, key_start, entries, first_pos, t_first, vmax,
                   bucket_start, bucket_entries):
    n, d = X.shape
    ncells = 1
    for k in range(d):
        ncells *= dims[k]
    flags = np.ones(n, dtype=np.bool_)
    clo = np.empty(d, dtype=np.int64)
    chi = np.empty(d, dtype=np.int64)
    cur = np.empty(d, dtype=np.int64)
    for j in range(n):
        shaded = False
        for b in range(n_buckets):
            if first_pos[b] >= j:
                continue
            R = vmax[b] * (T[j] - t_first[b])
            span = 1
            for k in range(d):
                # clamp in floating point first: R / h may not fit in an int64
                top = dims[k] - 1.0
                fa = min(max((X[j, k] - R - lo[k]) / h - 1.0, 0.0), top)
                fz = min(max((X[j, k] + R - lo[k]) / h + 1.0, 0.0), top)
                a = int(math.floor(fa))
                z = int(math.floor(fz))
                clo[k] = a
                chi[k] = z
                span *= z - a + 1
            inserted = bucket_start[b + 1] - bucket_start[b]
            if span > inserted:
                # cheaper to walk the bucket in birth order
                for e in range(bucket_start[b], bucket_start[b + 1]):
                    i = bucket_entries[e]
                    if i >= j:
                        break
                    d2 = 0.0
                    for k in range(d):
                        diff = X[i, k] - X[j, k]
                        d2 += diff * diff
                    if math.sqrt(d2) <= V[i] * (T[j] - T[i]):
                        shaded = True
                        break
            else:
                for k in range(d):
                    cur[k] = clo[k]
                while True:
                    lin = 0
                    for k in range(d):
                        lin = lin * dims[k] + cur[k]
                    key = b * ncells + lin
                    for e in range(key_start[key], key_start[key + 1]):
                        i = entries[e]
                        if i >= j:
                            break
                        d2 = 0.0
                        for k in range(d):
                            diff = X[i, k] - X[j, k]
                            d2 += diff * diff
                        if math.sqrt(d2) <= V[i] * (T[j] - T[i]):
                            shaded = True
                            break
                    if shaded:
                        break
                    # odometer over the cell range
                    k = d - 1
                    while k >= 0:
                        cur[k] += 1
                        if cur[k] <= chi[k]:
                            break
                        cur[k] = clo[k]
                        k -= 1
                    if k < 0:
                        break
            if shaded:
                break
        flags[j] = not shaded
    return flags


def _cell_size(speeds, spec, horizon, extent, n, magnitude=0.0):
    if spec is not None:
        diam = spec.effective_window.diameter()
        h = float(np.median(speeds)) * horizon if len(speeds) else diam
        h = min(max(h, diam / 64.0), diam)
    else:
        h = float(np.max(extent)) / max(n, 1) ** (1.0 / len(extent))
    if not h > 0:
        h = 1.0
    # keep cells far above coordinate rounding and distance underflow, so the
    # one-cell padding covers any pair the float distance test could accept
    h = max(h, 1e-100, 1e-8 * magnitude)
    # cap the dense grid at a few cells per seed; correctness does not depend on h
    d = len(extent)
    cells = np.prod(np.maximum(np.ceil(extent / h), 1.0))
    cap = MAX_CELLS_PER_SEED * max(n, 16)
    if cells > cap:
        h *= (cells / cap) ** (1.0 / d) * 1.01
    return h


def speed_buckets(speeds):
    """Bucket 0 holds zero speeds; bucket ``k - k_min + 1`` holds ``[2^k, 2^(k+1))``."""
    speeds = np.asarray(speeds, dtype=float)
    out = np.zeros(len(speeds), dtype=np.int64)
    pos = speeds > 0
    if np.any(pos):
        k = np.floor(np.log2(speeds[pos])).astype(np.int64)
        out[pos] = k - k.min() + 1
    return out


def exposed_indexed(realization, spec=None):
    start = time.perf_counter()
    spec = spec if spec is not None else realization.spec
    n = len(realization)
    if n == 0:
        return ExposureResult(np.ones(0, dtype=bool), 0, "indexed", time.perf_counter() - start)
    order = _birth_order(realization)
    X = np.ascontiguousarray(realization.locations[order], dtype=np.float64)
    T = np.ascontiguousarray(realization.birth_times[order], dtype=np.float64)
    V = np.ascontiguousarray(realization.speeds[order], dtype=np.float64)
    d = X.shape[1]

    lo = X.min(axis=0)
    extent = X.max(axis=0) - lo
    horizon = spec.horizon if spec is not None else float(T.max()) if n else 1.0
    h = _cell_size(V, spec, horizon, np.maximum(extent, 1e-300), n, float(np.max(np.abs(X))))
    dims = np.maximum(np.floor(extent / h).astype(np.int64) + 1, 1)
    cell = np.minimum(np.floor((X - lo) / h).astype(np.int64), dims - 1)
    lin = np.ravel_multi_index(cell.T, dims) if d > 1 else cell[:, 0]
    ncells = int(np.prod(dims))

    bucket = speed_buckets(V)
    n_buckets = int(bucket.max()) + 1
    pos = np.arange(n, dtype=np.int64)

    key = bucket * ncells + lin
    entries = np.lexsort((pos, key)).astype(np.int64)
    key_start = np.searchsorted(key[entries], np.arange(n_buckets * ncells + 1)).astype(np.int64)

    bucket_entries = np.lexsort((pos, bucket)).astype(np.int64)
    bucket_start = np.searchsorted(bucket[bucket_entries], np.arange(n_buckets + 1)).astype(np.int64)

    first_pos = np.full(n_buckets, n, dtype=np.int64)
    np.minimum.at(first_pos, bucket, pos)
    t_first = np.where(first_pos < n, T[np.minimum(first_pos, n - 1)], 0.0)
    vmax = np.zeros(n_buckets)
    np.maximum.at(vmax, bucket, V)

    flags_sorted = _indexed_flags(
        X, T, V, cell, lo, h, dims, bucket, n_buckets, key_start, entries, first_pos, t_first, vmax,
        bucket_start, bucket_entries,
    )
    flags = np.empty(n, dtype=bool)
    flags[order] = flags_sorted
    return ExposureResult(flags, functional_F(realization, flags, spec), "indexed", time.perf_counter() - start)


ALGORITHMS = {"naive": exposed_naive, "indexed": exposed_indexed}
