"""Periodic tensor-product Lagrange interpolation at off-grid points.

``width=4`` is the bicubic kernel; wider even stencils raise the order.
"""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _denominators(m):
    inv = np.empty(m)
    for a in range(m):
        p = 1.0
        for b in range(m):
            if b != a:
                p *= (a - b)
        inv[a] = 1.0 / p
    return inv


@numba.njit(cache=True)
def _weights(xi, m, inv, w, pre, suf):
    lo = -(m // 2 - 1)
    pre[0] = 1.0
    for a in range(1, m):
        pre[a] = pre[a - 1] * (xi - (lo + a - 1))
    suf[m - 1] = 1.0
    for a in range(m - 2, -1, -1):
        suf[a] = suf[a + 1] * (xi - (lo + a + 1))
    for a in range(m):
        w[a] = pre[a] * suf[a] * inv[a]


@numba.njit(cache=True, fastmath=True)
def _interp(fields, x1, x2, h, m, out):
    # fields is (nf, n, n); stencil weights and indices are shared across components
    nf = fields.shape[0]
    n = fields.shape[1]
    lo = -(m // 2 - 1)
    w1 = np.empty(m)
    w2 = np.empty(m)
    pre = np.empty(m)
    suf = np.empty(m)
    inv = _denominators(m)
    i1 = np.empty(m, dtype=np.int64)
    i2 = np.empty(m, dtype=np.int64)
    for p in range(x1.size):
        s1 = x1[p] / h
        s2 = x2[p] / h
        f1 = np.floor(s1)
        f2 = np.floor(s2)
        _weights(s1 - f1, m, inv, w1, pre, suf)
        _weights(s2 - f2, m, inv, w2, pre, suf)
        b1 = int(f1) + lo
        b2 = int(f2) + lo
        for a in range(m):
            i1[a] = (b1 + a) % n
            i2[a] = (b2 + a) % n
        for c in range(nf):
            acc = 0.0
            for a in range(m):
                ia = i1[a]
                row = 0.0
                for b in range(m):
                    row += w2[b] * fields[c, ia, i2[b]]
                acc += w1[a] * row
            out[c, p] = acc


def interpolate(fields: np.ndarray, points: np.ndarray, h: float, width: int = 4) -> np.ndarray:
    """Evaluate periodic grid ``fields`` at ``points``.

    ``fields`` has shape ``(..., n, n)``; ``points`` has shape ``(2, ...)`` in
    physical coordinates (any real value, wrapped periodically).  Returns an
    array of shape ``fields.shape[:-2] + points.shape[1:]``.
    """
    if width < 2 or width % 2:
        raise ValueError(f"stencil width must be even and >= 2, got {width}")
    fields = np.asarray(fields, dtype=float)
    lead = fields.shape[:-2]
    flat = np.ascontiguousarray(fields.reshape(-1, *fields.shape[-2:]))
    x1 = np.ascontiguousarray(points[0], dtype=float).ravel()
    x2 = np.ascontiguousarray(points[1], dtype=float).ravel()
    out = np.empty((flat.shape[0], x1.size))
    _interp(flat, x1, x2, float(h), int(width), out)
    return out.reshape(lead + points.shape[1:])
