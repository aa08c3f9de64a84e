"""Small quadrature kernels shared by the entropy and body code."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import map_coordinates


def power_weights(r: np.ndarray, q: float) -> np.ndarray:
    """Weights ``w`` with ``sum(w * phi) = ∫ r^q phi(r) dr`` for piecewise-linear ``phi``.

    ``r`` is an increasing node array with ``r[0] >= 0``. The power is
    integrated exactly on each cell, so integrable singularities at ``r = 0``
    (``q > -1``) are handled.
    """
    r = np.asarray(r, dtype=float)
    a, b = r[:-1], r[1:]
    h = b - a
    m0 = _power_moment(a, b, q)
    m1 = _power_moment(a, b, q + 1.0)
    w = np.zeros_like(r)
    w[:-1] += (b * m0 - m1) / h
    w[1:] += (m1 - a * m0) / h
    return w


def _power_moment(a, b, q):
    if q == -1.0:
        return np.log(b / a)
    return (b ** (q + 1.0) - a ** (q + 1.0)) / (q + 1.0)


def abs_power_weights(t: np.ndarray, q: float) -> np.ndarray:
    """Weights for ``∫ |t|^q phi(t) dt`` over an increasing node array that may straddle 0."""
    t = np.asarray(t, dtype=float)
    if t[0] >= 0:
        return power_weights(t, q)
    if t[-1] <= 0:
        return power_weights(-t[::-1], q)[::-1]
    k = int(np.searchsorted(t, 0.0))
    if t[k] == 0.0:
        w = np.zeros_like(t)
        w[k:] += power_weights(t[k:], q)
        w[: k + 1] += power_weights(-t[k::-1], q)[::-1]
        return w
    # insert 0 as a node; its weight goes to the neighbours by linear interpolation
    w_ext = abs_power_weights(np.insert(t, k, 0.0), q)
    w0 = w_ext[k]
    w = np.delete(w_ext, k)
    lam = -t[k - 1] / (t[k] - t[k - 1])
    w[k - 1] += w0 * (1.0 - lam)
    w[k] += w0 * lam
    return w


def bilinear(values: np.ndarray, origin, spacing, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of grid ``values`` at ``points`` (..., dim); zero outside."""
    points = np.asarray(points, dtype=float)
    dim = values.ndim
    coords = [(points[..., k] - origin[k]) / spacing[k] for k in range(dim)]
    flat = [c.ravel() for c in coords]
    out = map_coordinates(values, flat, order=1, mode="constant", cval=0.0, prefilter=False)
    return out.reshape(points.shape[:-1])
