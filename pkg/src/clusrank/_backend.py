"""Kernel backend selection.

The resampling kernels in :mod:`clusrank._kernels` exist in two flavors: a
numba ``@njit`` implementation and a vectorized pure-numpy one.  Which flavor
runs is controlled by the ``CLUSRANK_BACKEND`` environment variable:

* ``auto`` (default) -- use numba when it is importable, numpy otherwise;
* ``numba``          -- require numba, raise if it is missing;
* ``numpy``          -- force the pure-numpy path.

``CLUSRANK_THREADS`` caps the numba threading layer (the numpy path is
single-threaded).  Both paths are deterministic for a given seed regardless
of thread count: all random draws are generated ahead of the kernels from
per-chunk substreams.
"""

from __future__ import annotations

import os

_VALID = ("auto", "numba", "numpy")


def _resolve() -> str:
    choice = os.environ.get("CLUSRANK_BACKEND", "auto").strip().lower()
    if choice not in _VALID:
        raise ValueError(
            f"CLUSRANK_BACKEND must be one of {_VALID}, got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba
    except ImportError:
        if choice == "numba":
            raise ImportError(
                "CLUSRANK_BACKEND=numba but numba is not installed; "
                "install clusrank[accel] or set CLUSRANK_BACKEND=numpy"
            ) from None
        return "numpy"

    threads = os.environ.get("CLUSRANK_THREADS")
    if threads:
        cap = max(1, int(threads))
        numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))
    return "numba"


ACTIVE_BACKEND: str = _resolve()


def active_backend() -> str:
    """Return the backend selected at import time ('numba' or 'numpy')."""
    return ACTIVE_BACKEND
