"""Pure-NumPy implementations of the windowed trajectory kernels.

Fallback used when the compiled extension is unavailable. Semantics match
demokit._kernels; results may differ by a few ulps because the vectorized
reductions round differently than the scalar loops.
"""

from __future__ import annotations

import numpy as np


def turning_angles(pts: np.ndarray, window_length: int):
    """Turning angle at every index over a centered window.

    The turning angle is pi minus the interior angle at point i between the
    rays to its window's first and last points: 0 on straight-through
    motion, pi on a full reversal.

    Returns (theta, degenerate): float64[N] and uint8[N]. Indexes whose
    window does not fit inside the sequence, or where a ray to a window
    endpoint vanishes (coincident points), carry theta 0 and degenerate 1.
    """
    n = pts.shape[0]
    h = window_length // 2
    theta = np.zeros(n, dtype=np.float64)
    degen = np.ones(n, dtype=np.uint8)
    if n < window_length:
        return theta, degen
    c = pts[h : n - h]
    u = pts[: n - 2 * h] - c
    v = pts[2 * h :] - c
    nu = np.sqrt((u * u).sum(axis=1))
    nv = np.sqrt((v * v).sum(axis=1))
    ok = (nu > 0.0) & (nv > 0.0)
    denom = np.where(ok, nu * nv, 1.0)
    cosang = np.clip((u * v).sum(axis=1) / denom, -1.0, 1.0)
    theta[h : n - h] = np.where(ok, np.pi - np.arccos(cosang), 0.0)
    degen[h : n - h] = ~ok
    return theta, degen


def density_scores(pts: np.ndarray, window_length: int) -> np.ndarray:
    """Average pairwise distance inside a centered window, per index.

    Returns float64[N]; indexes without a full window carry +inf so that a
    "distance below threshold" test can never fire there.
    """
    n = pts.shape[0]
    w = window_length
    h = w // 2
    out = np.full(n, np.inf, dtype=np.float64)
    if n < w:
        return out
    m = n - w + 1
    acc = np.zeros(m, dtype=np.float64)
    for a in range(w - 1):
        for b in range(a + 1, w):
            d = pts[b : b + m] - pts[a : a + m]
            acc += np.sqrt((d * d).sum(axis=1))
    out[h : h + m] = acc / (w * (w - 1) / 2.0)
    return out
