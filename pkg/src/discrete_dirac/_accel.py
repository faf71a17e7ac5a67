"""Backend selection for the hot numeric kernels.

Set ``DISCRETE_DIRAC_DISABLE_NUMBA=1`` before import to force the pure-numpy
code path (useful for debugging and for the benchmark comparison).
"""
import os

_FLAG = os.environ.get("DISCRETE_DIRAC_DISABLE_NUMBA", "0").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
