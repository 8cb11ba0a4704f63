"""Selects the compiled trajectory kernels, falling back to pure NumPy.

The compiled extension (demokit._kernels, Cython) and the fallback
(demokit._kernels_py) share one contract; whichever imports first wins.
`BACKEND` names the active implementation, and `implementations()` exposes
both for the benchmark suite and cross-checking tests.
"""

from __future__ import annotations

import numpy as np

from demokit.errors import ValidationError
from demokit import _kernels_py

try:
    from demokit import _kernels  # compiled extension, optional
except ImportError:  # pragma: no cover - depends on build environment
    _kernels = None

_impl = _kernels if _kernels is not None else _kernels_py
BACKEND = "compiled" if _kernels is not None else "python"


def implementations() -> dict:
    """Mapping of backend name to kernel module; compiled absent if unbuilt."""
    out = {"python": _kernels_py}
    if _kernels is not None:
        out["compiled"] = _kernels
    return out


def _as_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError(f"points must have shape (N, 3), got {pts.shape}")
    return pts


def check_window_length(window_length: int) -> int:
    window_length = int(window_length)
    if window_length < 3 or window_length % 2 == 0:
        raise ValidationError(f"window_length must be odd and >= 3, got {window_length}")
    return window_length


def turning_angles(points, window_length: int):
    """(theta, degenerate) arrays over a centered window; see _kernels_py."""
    return _impl.turning_angles(_as_points(points), check_window_length(window_length))


def density_scores(points, window_length: int) -> np.ndarray:
    """Average pairwise window distance per index; see _kernels_py."""
    return _impl.density_scores(_as_points(points), check_window_length(window_length))
