"""Husimi densities, Bargmann functions and the stellar (zero-set) representation.

With ``g(u) = exp(-pi N u^2)`` and the periodized coherent states of
:mod:`toruslab.torus`, every overlap reduces to the sum

    S(x, y) = sum_m psi_{m mod N} g(m/N - x) exp(2 pi i m y),

namely ``<phi_{x,p}, psi> = S(x, -p) / |phi~_{x,p}|`` where ``phi~`` is the
unnormalized periodized Gaussian. The Bargmann function is the entire function

    B(z) = sum_m psi_{m mod N} exp(-pi N (m/N - z)^2),   z = x + i y,

related to S by ``B(z) = exp(pi N y^2 - 2 pi i N x y) S(x, y)``. It satisfies
``B(z + 1) = B(z)`` and ``B(z + i) = exp(pi N - 2 pi i N z) B(z)`` and has
exactly N zeros per cell of ``Z + iZ``. A point z corresponds to the phase
space point ``(x, p) = (Re z, -Im z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .torus import NU_MAX, TorusState

# Half-width (in units of the period) of the m-window used for Gaussian sums.
WINDOW = NU_MAX + 0.5


# ---------------------------------------------------------------------------
# Gaussian sums


def _m_range(N: int, xmin: float, xmax: float, multiple: int = 1) -> np.ndarray:
    lo = math.floor(N * (xmin - WINDOW))
    hi = math.ceil(N * (xmax + WINDOW))
    lo = multiple * (lo // multiple)
    length = multiple * -(-(hi - lo + 1) // multiple)
    return np.arange(lo, lo + length)


def _weights(N: int, xs: np.ndarray, m: np.ndarray) -> np.ndarray:
    return np.exp(-np.pi * N * (m[None, :] / N - xs[:, None]) ** 2)


def s_grid(amps: np.ndarray, xs: np.ndarray, y0: float, G: int) -> np.ndarray:
    """``S(xs[i], y0 + j/G)`` for j = 0..G-1, via folding and one FFT per row."""
    N = len(amps)
    xs = np.asarray(xs, dtype=float)
    m = _m_range(N, float(xs.min()), float(xs.max()), multiple=G)
    A = _weights(N, xs, m) * (amps[m % N] * np.exp(2j * np.pi * ((m * y0) % 1.0)))[None, :]
    folded = A.reshape(len(xs), -1, G).sum(axis=1)
    # sum_r folded[r] exp(2 pi i r j / G)
    return np.fft.ifft(folded, axis=1) * G


def coherent_norm2(N: int, xs: np.ndarray, ps: np.ndarray) -> np.ndarray:
    """Squared norms of the unnormalized coherent states on the grid xs x ps."""
    xs = np.asarray(xs, dtype=float) % 1.0
    ps = np.asarray(ps, dtype=float) % 1.0
    nu = np.arange(-NU_MAX, NU_MAX + 1)
    ell = np.arange(N) / N
    g = np.exp(-np.pi * N * (ell[None, :, None] - xs[:, None, None] - nu[None, None, :]) ** 2)
    gram = np.einsum("iln,ilm->inm", g, g)
    d = nu[:, None] - nu[None, :]
    lags = np.arange(-2 * NU_MAX, 2 * NU_MAX + 1)
    R = np.stack([gram[:, d == lag].sum(axis=1) for lag in lags], axis=1)
    phase = np.cos(2 * np.pi * ((N * np.outer(lags, ps)) % 1.0))
    return R @ phase


# ---------------------------------------------------------------------------
# Husimi


@dataclass(frozen=True)
class HusimiGrid:
    """Husimi density on the M x M grid ``(i/M, j/M)``; ``values[i, j]`` at x=i/M, p=j/M.

    ``values`` has unit grid mean. ``raw_mean`` is the grid mean of the
    unrenormalized density ``N |<phi_x, psi>|^2 / |psi|^2``, which tends to
    one as M grows.
    """

    N: int
    M: int
    values: np.ndarray = field(repr=False)
    raw_mean: float
    description: str = ""

    def raw(self) -> np.ndarray:
        return self.values * self.raw_mean

    def argmax(self) -> tuple[int, int]:
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return int(i), int(j)

    def disk_mass(self, x0: float, p0: float, r: float) -> float:
        """Fraction of the (grid-normalized) mass within distance r of (x0, p0) on the torus."""
        u = np.arange(self.M) / self.M
        dx = (u - x0 + 0.5) % 1.0 - 0.5
        dp = (u - p0 + 0.5) % 1.0 - 0.5
        mask = dx[:, None] ** 2 + dp[None, :] ** 2 <= r * r
        return float(self.values[mask].sum() / self.M ** 2)


def husimi_grid(state: TorusState, M: int) -> HusimiGrid:
    if M < 8:
        raise DomainError(f"grid size must be >= 8, got {M}")
    N = state.N
    nrm2 = float(np.vdot(state.amps, state.amps).real)
    if nrm2 == 0.0:
        raise DomainError("Husimi density of the zero vector")
    u = np.arange(M) / M
    S = s_grid(state.amps, u, 0.0, M)
    S = S[:, (-np.arange(M)) % M]  # y = -p
    raw = N * np.abs(S) ** 2 / coherent_norm2(N, u, u) / nrm2
    mean = float(raw.mean())
    return HusimiGrid(N, M, raw / mean, mean, state.description)


def husimi_value(state: TorusState, x, p) -> np.ndarray:
    """Unrenormalized Husimi density ``N |<phi_{x,p}, psi>|^2 / |psi|^2`` via the Bargmann function."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    logB = bargmann_log(state, x - 1j * p)
    xs, ps = np.broadcast_arrays(x, p)
    n2 = np.array([coherent_norm2(state.N, [a], [b])[0, 0] for a, b in zip(xs.ravel(), ps.ravel())])
    nrm2 = float(np.vdot(state.amps, state.amps).real)
    val = state.N * np.exp(2 * logB.real - 2 * np.pi * state.N * p ** 2)
    return val / n2.reshape(xs.shape) / nrm2


# ---------------------------------------------------------------------------
# Bargmann function


def _bargmann_sums(amps: np.ndarray, z: np.ndarray, derivative: bool = False):
    """Scaled sums: returns (S, S1) with ``B = exp(pi N y^2 - 2 pi i N x y) S`` and
    ``B' = exp(...) S1``; the scale factor is shared so ratios are overflow-free."""
    N = len(amps)
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    x, y = flat.real, flat.imag
    base = np.floor(x)
    m = _m_range(N, 0.0, 1.0)
    mm = m[None, :] + N * base[:, None].astype(np.int64)
    u = mm / N - x[:, None]
    terms = amps[mm % N] * np.exp(-np.pi * N * u ** 2 + 2j * np.pi * ((mm * y[:, None]) % 1.0))
    S = terms.sum(axis=1).reshape(z.shape)
    if not derivative:
        return S, None
    S1 = (terms * (2 * np.pi * N) * (u - 1j * y[:, None])).sum(axis=1).reshape(z.shape)
    return S, S1


def bargmann_log(state: TorusState, z) -> np.ndarray:
    """``log B(z)`` (principal branch of the scaled sum plus the exact exponent)."""
    z = np.asarray(z, dtype=complex)
    S, _ = _bargmann_sums(state.amps, z)
    N = state.N
    return np.log(S) + np.pi * N * z.imag ** 2 - 2j * np.pi * N * z.real * z.imag


def bargmann_eval(state: TorusState, z):
    """The Bargmann function ``B(z) = sum_m psi_m exp(-pi N (m/N - z)^2)``."""
    z = np.asarray(z, dtype=complex)
    S, _ = _bargmann_sums(state.amps, z)
    N = state.N
    # exp(i*theta) with theta reduced mod 2 pi, exp(pi N y^2) kept separate
    phase = np.exp(-2j * np.pi * ((N * z.real * z.imag) % 1.0))
    out = S * np.exp(np.pi * N * z.imag ** 2) * phase
    return out if out.ndim else complex(out)


def quasi_period_factor(N: int, z, shift: tuple[int, int]) -> np.ndarray:
    """Factor F with ``B(z + s1 + i s2) = F B(z)``."""
    s1, s2 = shift
    z = np.asarray(z, dtype=complex)
    # B(z + i s2) = exp(pi N s2^2 - 2 pi i N s2 z) B(z), B is 1-periodic
    return np.exp(np.pi * N * s2 ** 2 - 2j * np.pi * N * s2 * (z + s1))


# ---------------------------------------------------------------------------
# Zeros


@dataclass(frozen=True)
class StellarSet:
    """Zeros of the Bargmann function in the unit cell, as (x, p) with multiplicities.

    ``z`` holds the representatives ``x + i y`` (y = -p) actually located,
    which are needed by the theta-product reconstruction.
    """

    N: int
    points: np.ndarray = field(repr=False)  # shape (n, 2): x, p in [0, 1)
    multiplicity: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    winding_total: int = 0

    @property
    def total(self) -> int:
        return int(self.multiplicity.sum())

    def expanded_z(self) -> np.ndarray:
        return np.repeat(self.z, self.multiplicity)


EDGE_STEP_MAX = np.pi / 3
EDGE_DEPTH = 40
NEWTON_TOL = 1e-12
MAX_DEPTH = 12


class _ZeroOnEdge(Exception):
    pass


def _gauge(N, X, Y, xc, yc):
    # nonvanishing factor removing most of the phase rotation of S; windings
    # of S * gauge around cells equal those of B
    return np.exp(-1j * np.pi * N * (X - xc) * (Y - yc))


def _w_eval(amps, N, z, xc, yc):
    S, _ = _bargmann_sums(amps, z)
    return S * _gauge(N, z.real, z.imag, xc, yc)


def _edge_increment(amps, N, za, zb, wa, wb, xc, yc, depth=0) -> float:
    """Phase change of W along the segment za -> zb, bisecting until resolved."""
    step = float(np.angle(wb / wa))
    if abs(step) <= EDGE_STEP_MAX:
        return step
    if depth >= EDGE_DEPTH:
        raise _ZeroOnEdge
    zm = 0.5 * (za + zb)
    wm = complex(_w_eval(amps, N, np.array([zm]), xc, yc)[0])
    if wm == 0:
        raise _ZeroOnEdge
    return (_edge_increment(amps, N, za, zm, wa, wm, xc, yc, depth + 1)
            + _edge_increment(amps, N, zm, zb, wm, wb, xc, yc, depth + 1))


def _windings(amps, N, X, Y, W, xc, yc) -> np.ndarray:
    """Winding numbers of the cells of the node grid X x Y (W sampled at the nodes)."""
    scale = np.abs(W).max()
    if np.any(np.abs(W) <= 1e-14 * scale):
        raise _ZeroOnEdge
    dx = np.angle(W[1:, :] / W[:-1, :])
    dy = np.angle(W[:, 1:] / W[:, :-1])
    for i, j in zip(*np.nonzero(np.abs(dx) > EDGE_STEP_MAX)):
        dx[i, j] = _edge_increment(amps, N, complex(X[i], Y[j]), complex(X[i + 1], Y[j]),
                                   W[i, j], W[i + 1, j], xc, yc)
    for i, j in zip(*np.nonzero(np.abs(dy) > EDGE_STEP_MAX)):
        dy[i, j] = _edge_increment(amps, N, complex(X[i], Y[j]), complex(X[i], Y[j + 1]),
                                   W[i, j], W[i, j + 1], xc, yc)
    circ = dx[:, :-1] + dy[1:, :] - dx[:, 1:] - dy[:-1, :]
    return np.rint(circ / (2 * np.pi)).astype(int)


def _newton(amps, z0: complex, lo: complex, hi: complex) -> complex | None:
    """Newton iteration for B started at z0; None if it leaves [lo, hi] or stalls."""
    z = z0
    step = np.inf
    for _ in range(60):
        S, S1 = _bargmann_sums(amps, np.array([z]), derivative=True)
        if S1[0] == 0:
            return None
        step = S[0] / S1[0]
        z = z - step
        if not (lo.real <= z.real <= hi.real and lo.imag <= z.imag <= hi.imag):
            return None
        if abs(step) < NEWTON_TOL:
            return z
    return z if abs(step) < 1e-9 else None


def _resolve_cell(amps, N, lo: complex, hi: complex, w: int, xc, yc, depth: int, out: list) -> None:
    """Locate the zeros (total multiplicity w) inside the rectangle [lo, hi]."""
    if w == 1:
        z = _newton(amps, 0.5 * (lo + hi), lo, hi)
        if z is not None:
            out.append((z, 1))
            return
    if depth >= MAX_DEPTH:
        # unresolved cluster at this scale: report one zero of multiplicity w
        out.append((0.5 * (lo + hi), w))
        return
    n = 4
    X = np.linspace(lo.real, hi.real, n + 1)
    Y = np.linspace(lo.imag, hi.imag, n + 1)
    XX, YY = np.meshgrid(X, Y, indexing="ij")
    W = _w_eval(amps, N, XX + 1j * YY, xc, yc)
    wind = _windings(amps, N, X, Y, W, xc, yc)
    if wind.sum() != w or np.any(wind < 0):
        raise NumericalError(f"inconsistent sub-cell windings ({wind.sum()} vs {w})")
    for i, j in zip(*np.nonzero(wind)):
        _resolve_cell(amps, N, complex(X[i], Y[j]), complex(X[i + 1], Y[j + 1]), int(wind[i, j]),
                      xc, yc, depth + 1, out)


def stellar_zeros(state: TorusState, grid: int | None = None) -> StellarSet:
    """All N zeros of the Bargmann function in one cell, certified by winding numbers.

    The cell ``[x0, x0+1) x [y0, y0+1)`` is covered by a G x G grid and the
    winding of B around every grid cell is accumulated from phase increments
    of B times a nonvanishing gauge factor; edges with large increments are
    bisected until resolved. Cells with nonzero winding are resolved by Newton
    iteration, subdividing when Newton leaves the cell or the winding exceeds
    one. A zero on a grid edge shifts the whole grid by an irrational offset.
    The total winding must equal N.
    """
    N = state.N
    amps = np.asarray(state.amps, dtype=complex)
    if not np.any(amps):
        raise DomainError("the zero vector has no stellar representation")
    G = grid if grid is not None else max(16, 4 * N)
    golden = (math.sqrt(5) - 1) / 2
    for attempt in range(4):
        x0 = -0.5 + ((attempt * golden) % 1.0) / G
        y0 = -0.5 + ((attempt * math.sqrt(2)) % 1.0) / G
        xc, yc = x0 + 0.5, y0 + 0.5
        X = x0 + np.arange(G + 1) / G
        Y = y0 + np.arange(G + 1) / G
        S = s_grid(amps, X, y0, G)
        S = np.concatenate([S, S[:, :1]], axis=1)  # S is 1-periodic in y
        XX, YY = np.meshgrid(X, Y, indexing="ij")
        W = S * _gauge(N, XX, YY, xc, yc)
        try:
            wind = _windings(amps, N, X, Y, W, xc, yc)
        except _ZeroOnEdge:
            continue
        total = int(wind.sum())
        if total != N or np.any(wind < 0):
            continue
        found: list[tuple[complex, int]] = []
        try:
            for i, j in zip(*np.nonzero(wind)):
                _resolve_cell(amps, N, complex(X[i], Y[j]), complex(X[i + 1], Y[j + 1]), int(wind[i, j]),
                              xc, yc, 0, found)
        except _ZeroOnEdge:
            continue
        zs = np.array([z for z, _ in found])
        mult = np.array([m for _, m in found], dtype=int)
        pts = np.column_stack([zs.real % 1.0, (-zs.imag) % 1.0])
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        return StellarSet(N, pts[order], mult[order], zs[order], total)
    raise NumericalError(f"zero count not certified (expected {N}) after shifted retries")


# ---------------------------------------------------------------------------
# Theta-product reconstruction

_Q = math.exp(-math.pi)
_THETA_TERMS = 12


def theta1(z) -> np.ndarray:
    """Odd Jacobi theta function vanishing exactly on Z + iZ.

    ``theta(z) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) pi z)``, q = e^{-pi};
    ``theta(z+1) = -theta(z)``, ``theta(z+i) = -e^{pi} e^{-2 pi i z} theta(z)``.
    Accurate to ~1e-15 relative for |Im z| <= 2.
    """
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for n in range(_THETA_TERMS):
        out = out + (-1) ** n * _Q ** ((n + 0.5) ** 2) * np.sin((2 * n + 1) * np.pi * z)
    return 2 * out


def _reduce_near(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Lattice representatives of z - w with real and imaginary parts in [-1/2, 1/2)."""
    d = z - w
    return d - np.floor(d.real + 0.5) - 1j * np.floor(d.imag + 0.5)


def _log_theta(d: np.ndarray) -> np.ndarray:
    """log theta(d) for arbitrary d, through the quasi-periodicity of theta."""
    r = _reduce_near(d, 0)
    a = np.rint((d - r).real)
    b = np.rint((d - r).imag)
    # theta(r + a + i b) = (-1)^{a+b} exp(pi b^2 - 2 pi i b r) theta(r) (b integer)
    return np.log(theta1(r)) + 1j * np.pi * (a + b) + np.pi * b ** 2 - 2j * np.pi * b * r


def reconstruct_check(state: TorusState, zeros: StellarSet, probes, min_distance: float = 1e-3) -> float:
    """Largest relative deviation between B and ``e^{gamma + alpha z} prod theta(z - z_i)``.

    ``alpha = -2 pi i Im(sum z_i)`` is forced by the quasi-periodicity of B
    given the chosen zero representatives; only gamma is fitted.
    """
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    zi = zeros.expanded_z()
    if len(zi) != state.N:
        raise DomainError("zero set does not carry N zeros")
    dist = np.abs(_reduce_near(probes[:, None], zi[None, :]))
    if dist.min() < min_distance:
        raise DomainError(f"probe within {dist.min():.2e} of a zero")
    alpha = -2j * np.pi * zi.sum().imag
    L = bargmann_log(state, probes) - _log_theta(probes[:, None] - zi[None, :]).sum(axis=1) - alpha * probes
    r = np.exp(L - L[0])
    c = r.mean()
    return float(np.max(np.abs(r / c - 1)))


# ---------------------------------------------------------------------------
# Statistics of zero sets


def stellar_fourier(zeros: StellarSet, k: tuple[int, int]) -> complex:
    """``(1/N) sum_i m_i exp(2 pi i (k1 x_i + k2 p_i))``."""
    k1, k2 = int(k[0]), int(k[1])
    if (k1, k2) == (0, 0):
        raise DomainError("k = (0, 0) gives 1 identically")
    x, p = zeros.points[:, 0], zeros.points[:, 1]
    return complex(np.sum(zeros.multiplicity * np.exp(2j * np.pi * (k1 * x + k2 * p))) / zeros.N)


def rectangle_discrepancy(points: np.ndarray, rects, weights=None) -> float:
    """max over rectangles [x0,x1) x [p0,p1) of |empirical fraction - area|."""
    points = np.asarray(points, dtype=float)
    w = np.ones(len(points)) if weights is None else np.asarray(weights, dtype=float)
    total = w.sum()
    worst = 0.0
    for x0, x1, p0, p1 in rects:
        inside = (points[:, 0] >= x0) & (points[:, 0] < x1) & (points[:, 1] >= p0) & (points[:, 1] < p1)
        worst = max(worst, abs(w[inside].sum() / total - (x1 - x0) * (p1 - p0)))
    return worst


def quadrant_rectangles(n: int = 4) -> list[tuple[float, float, float, float]]:
    """The n^2 axis-aligned cells of an n x n partition of the unit square."""
    e = np.linspace(0, 1, n + 1)
    return [(e[i], e[i + 1], e[j], e[j + 1]) for i in range(n) for j in range(n)]
