"""Kernel backend selection.

The truncated-polynomial product is the hot inner loop of the whole
package. It has two interchangeable implementations: a numba @njit
kernel and a pure-numpy gather/matmul fallback. Selection:

    CURVCHECK_BACKEND=numba   force numba (error if unavailable)
    CURVCHECK_BACKEND=numpy   force the numpy fallback
    CURVCHECK_BACKEND=auto    numba when importable (default)

Results agree to the last bits allowed by summation order; fixed
config and backend give bit-identical output.
"""

import os

BACKEND = os.environ.get("CURVCHECK_BACKEND", "auto").lower()
if BACKEND not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"CURVCHECK_BACKEND must be auto|numba|numpy, got {BACKEND!r}")

if BACKEND in ("auto", "numba"):
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        if BACKEND == "numba":
            raise
        HAS_NUMBA = False
else:
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and BACKEND != "numpy"

if not USE_NUMBA:

    def njit(*args, **kwargs):  # noqa: D103  (no-op decorator shim)
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
