"""Optional numba acceleration for the numeric kernels.

Set ``BANGLADEP_NUMBA=0`` to force the pure-numpy path. The flag is read once,
at import time of :mod:`bangladep.kernels`.
"""
from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

ENV_FLAG = "BANGLADEP_NUMBA"


def numba_requested() -> bool:
    return os.environ.get(ENV_FLAG, "1").strip().lower() not in {"0", "false", "no", "off"}


def numba_available() -> bool:
    return numba is not None


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
