"""Integer-order Bessel functions J_0..J_n by Miller's backward recurrence."""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericalError

_RESCALE = 1e200


def _start_order(nmax: int, xmax: float) -> int:
    # enough headroom above both the requested order and the argument for the
    # neglected J_{m+1} to be far below double precision
    m = max(nmax, int(xmax)) + 30 + int(math.sqrt(60.0 * max(nmax, xmax, 1.0)))
    return m + (m % 2)


def bessel_j_orders(nmax: int, x) -> np.ndarray:
    """Array of shape (nmax + 1,) + x.shape with ``J_n(x)`` for n = 0..nmax (x >= 0).

    Backward recurrence ``J_{k-1} = (2k/x) J_k - J_{k+1}`` from a high starting
    order, normalized with ``J_0 + 2 sum_k J_{2k} = 1``. Running values are
    rescaled when they grow past 1e200 so nothing overflows.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("negative argument")
    shape = x.shape
    xf = x.ravel()
    out = np.zeros((nmax + 1, xf.size))
    tiny = xf == 0.0
    out[0, tiny] = 1.0
    xs = xf[~tiny]
    if xs.size == 0:
        return out.reshape((nmax + 1,) + shape)
    m = _start_order(nmax, float(xs.max()))
    res = np.zeros((nmax + 1, xs.size))
    jp1 = np.zeros_like(xs)
    j = np.full_like(xs, 1e-300)
    norm = np.zeros_like(xs)
    inv = 2.0 / xs
    for k in range(m, 0, -1):
        # j holds J_k (unnormalized), jp1 holds J_{k+1}
        if k <= nmax:
            res[k] = j
        if k % 2 == 0:
            norm += 2.0 * j
        jm1 = k * inv * j - jp1
        jp1, j = j, jm1
        big = np.abs(j) > _RESCALE
        if np.any(big):
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            j *= s
            jp1 *= s
            norm *= s
            res[:, big] /= _RESCALE
    res[0] = j
    norm += j
    if not np.all(np.isfinite(norm)) or np.any(norm == 0):
        raise NumericalError("Bessel recurrence lost its normalization")
    res /= norm
    out[:, ~tiny] = res
    return out.reshape((nmax + 1,) + shape)


def bessel_j0(x) -> np.ndarray:
    return bessel_j_orders(0, x)[0]


def bessel_series(n: int, x, terms: int = 60) -> np.ndarray:
    """Ascending series ``sum_s (-1)^s (x/2)^{2s+n} / (s! (s+n)!)`` (small arguments)."""
    x = np.asarray(x, dtype=float)
    half = x / 2.0
    total = np.zeros_like(x)
    term = half ** n / math.factorial(n)
    for s in range(terms):
        total += term
        term = -term * half * half / ((s + 1) * (s + 1 + n))
    return total
