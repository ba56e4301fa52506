"""Kernel backend selection.

Set ``ISACFBL_BACKEND=numpy`` to force the pure-numpy kernels; the default
``numba`` silently falls back to numpy when numba cannot be imported.
"""

import os

BACKEND_ENV = "ISACFBL_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

_requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {_requested!r}")

USE_NUMBA = HAS_NUMBA and _requested == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"
