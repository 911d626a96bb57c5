"""Hot resampling kernels, in numba and pure-numpy flavors.

These are the inner loops of the exact and Monte-Carlo randomization tests:
summing a statistic over all (or many sampled) label arrangements.  Each
kernel takes plain float64 arrays; random Monte-Carlo input arrives as a
pre-drawn uniform matrix so that results are a pure function of the seed,
independent of backend threading.

Conventions shared by both backends:

* sign-flip vectors are indexed in binary order: flip index ``b`` assigns
  ``+terms[i]`` when bit ``i`` of ``b`` is set, ``-terms[i]`` otherwise;
* Monte-Carlo sign flips map ``u >= 0.5`` to ``+1``;
* Monte-Carlo subset draws pick the indices of the ``m`` smallest uniforms
  in each row, which is a uniform random m-subset;
* exhaustive subsets are enumerated in lexicographic order.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ._backend import ACTIVE_BACKEND

# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def _np_signflip_sums_exhaustive(terms: np.ndarray) -> np.ndarray:
    out = np.array([-terms.sum()])
    for t in terms:
        out = np.concatenate([out, out + 2.0 * t])
    return out


def _np_signflip_sums_mc(terms: np.ndarray, u: np.ndarray) -> np.ndarray:
    signs = np.where(u >= 0.5, 1.0, -1.0)
    return (signs * terms).sum(axis=1)


def _np_subset_sums_exhaustive(values: np.ndarray, m: int, count: int) -> np.ndarray:
    n = values.shape[0]
    if m == 0:
        return np.zeros(1)
    flat = itertools.chain.from_iterable(itertools.combinations(range(n), m))
    combos = np.fromiter(flat, dtype=np.intp, count=count * m).reshape(count, m)
    return values[combos].sum(axis=1)


def _np_subset_sums_mc(values: np.ndarray, m: int, u: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    if m == 0:
        return np.zeros(u.shape[0])
    if m == n:
        return np.full(u.shape[0], values.sum())
    sel = np.argpartition(u, m, axis=1)[:, :m]
    return values[sel].sum(axis=1)


_NUMPY_IMPLS = {
    "signflip_sums_exhaustive": _np_signflip_sums_exhaustive,
    "signflip_sums_mc": _np_signflip_sums_mc,
    "subset_sums_exhaustive": _np_subset_sums_exhaustive,
    "subset_sums_mc": _np_subset_sums_mc,
}

# ---------------------------------------------------------------------------
# numba implementations (compiled lazily on first import with numba backend)
# ---------------------------------------------------------------------------

_NUMBA_IMPLS: dict | None = None


def _build_numba_impls() -> dict:
    from numba import njit, prange

    @njit(cache=True)
    def nb_signflip_sums_exhaustive(terms):
        n = terms.shape[0]
        out = np.empty(1 << n)
        s = 0.0
        for i in range(n):
            s += terms[i]
        out[0] = -s
        filled = 1
        for i in range(n):
            t2 = 2.0 * terms[i]
            for j in range(filled):
                out[filled + j] = out[j] + t2
            filled *= 2
        return out

    @njit(cache=True, parallel=True)
    def nb_signflip_sums_mc(terms, u):
        nb_b = u.shape[0]
        n = terms.shape[0]
        out = np.empty(nb_b)
        for b in prange(nb_b):
            s = 0.0
            for i in range(n):
                if u[b, i] >= 0.5:
                    s += terms[i]
                else:
                    s -= terms[i]
            out[b] = s
        return out

    @njit(cache=True)
    def nb_subset_sums_exhaustive(values, m, count):
        n = values.shape[0]
        out = np.empty(count)
        if m == 0:
            out[0] = 0.0
            return out
        idx = np.arange(m)
        for c in range(count):
            s = 0.0
            for k in range(m):
                s += values[idx[k]]
            out[c] = s
            j = m - 1
            while j >= 0 and idx[j] == n - m + j:
                j -= 1
            if j < 0:
                break
            idx[j] += 1
            for k in range(j + 1, m):
                idx[k] = idx[k - 1] + 1
        return out

    @njit(cache=True)
    def _sift_down(heap_u, heap_v, root, size):
        while True:
            child = 2 * root + 1
            if child >= size:
                return
            if child + 1 < size and heap_u[child + 1] > heap_u[child]:
                child += 1
            if heap_u[child] > heap_u[root]:
                heap_u[root], heap_u[child] = heap_u[child], heap_u[root]
                heap_v[root], heap_v[child] = heap_v[child], heap_v[root]
                root = child
            else:
                return

    @njit(cache=True, parallel=True)
    def nb_subset_sums_mc(values, m, u):
        nb_b = u.shape[0]
        n = values.shape[0]
        out = np.empty(nb_b)
        if m == 0:
            out[:] = 0.0
            return out
        for b in prange(nb_b):
            # max-heap of the m smallest uniforms seen so far
            heap_u = u[b, :m].copy()
            heap_v = values[:m].copy()
            for start in range(m // 2 - 1, -1, -1):
                _sift_down(heap_u, heap_v, start, m)
            for i in range(m, n):
                if u[b, i] < heap_u[0]:
                    heap_u[0] = u[b, i]
                    heap_v[0] = values[i]
                    _sift_down(heap_u, heap_v, 0, m)
            s = 0.0
            for k in range(m):
                s += heap_v[k]
            out[b] = s
        return out

    return {
        "signflip_sums_exhaustive": nb_signflip_sums_exhaustive,
        "signflip_sums_mc": nb_signflip_sums_mc,
        "subset_sums_exhaustive": nb_subset_sums_exhaustive,
        "subset_sums_mc": nb_subset_sums_mc,
    }


def numba_impls() -> dict | None:
    """Numba kernel table, or None when numba is unavailable."""
    global _NUMBA_IMPLS
    if _NUMBA_IMPLS is None:
        try:
            _NUMBA_IMPLS = _build_numba_impls()
        except ImportError:
            return None
    return _NUMBA_IMPLS


def numpy_impls() -> dict:
    """Pure-numpy kernel table."""
    return _NUMPY_IMPLS


if ACTIVE_BACKEND == "numba":
    _ACTIVE = numba_impls()
    if _ACTIVE is None:  # pragma: no cover - guarded by _backend
        _ACTIVE = _NUMPY_IMPLS
else:
    _ACTIVE = _NUMPY_IMPLS

# ---------------------------------------------------------------------------
# public dispatchers
# ---------------------------------------------------------------------------


def signflip_sums_exhaustive(terms: np.ndarray) -> np.ndarray:
    """Sums ``sum_i s_i * terms[i]`` over all 2**N sign vectors, binary order."""
    terms = np.ascontiguousarray(terms, dtype=np.float64)
    return _ACTIVE["signflip_sums_exhaustive"](terms)


def signflip_sums_mc(terms: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Sign-flip sums for one chunk of pre-drawn uniforms of shape (B, N)."""
    terms = np.ascontiguousarray(terms, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    return _ACTIVE["signflip_sums_mc"](terms, u)


def subset_sums_exhaustive(values: np.ndarray, m: int) -> np.ndarray:
    """Sums of every m-subset of ``values``, lexicographic subset order."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    count = math.comb(values.shape[0], m)
    return _ACTIVE["subset_sums_exhaustive"](values, m, count)


def subset_sums_mc(values: np.ndarray, m: int, u: np.ndarray) -> np.ndarray:
    """Uniform random m-subset sums, one per row of pre-drawn uniforms."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    return _ACTIVE["subset_sums_mc"](values, m, u)
