"""Hot loops, compiled when the extension is built.

Set ``EQUICONV_PURE=1`` to force the numpy fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("EQUICONV_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py


def linear_scan(a, b):
    """Solve F[j+1] = a[j] F[j] + b[j], F[0] = 0, along the last axis."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError("a and b must be 2-d arrays of equal shape")
    return _impl.linear_scan(a, b)


def merge_stops(stops, gap=1e-12):
    """Sorted stops with near-duplicates (closer than ``gap``) collapsed."""
    out = []
    for s in sorted(float(v) for v in stops):
        if not out or s - out[-1] > gap * max(1.0, abs(s)):
            out.append(s)
    return out


def dp5_linear(lam, v0, x0, x1, stops, coeff, tol, forced=False, impl=None):
    """Adaptive integration of the companion system; see ``_kernels_py``."""
    from .errors import StepFailure

    mod = impl or _impl
    try:
        return mod.dp5_linear(np.asarray(lam, dtype=np.complex128), np.asarray(v0, dtype=np.complex128),
                              float(x0), float(x1), merge_stops(stops), coeff, float(tol), int(forced))
    except (FloatingPointError, RuntimeError) as exc:
        raise StepFailure(str(exc)) from exc
