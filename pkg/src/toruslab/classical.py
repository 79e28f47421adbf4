"""Classical maps on the 2-torus: cat maps, the baker's map and kicked cat maps.

Map handles (:class:`CatMap`, :class:`BakerMap`, :class:`KickedCatMap`) carry
vectorized ``apply``/``apply_inverse`` methods and are what the quantum side
uses to push observables forward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import DomainError
from .rng import substream
from .torus import TorusObservable

Number = Union[float, Fraction, int]


def mod1(a):
    """Reduce into [0, 1), with floor semantics (never returns 1.0)."""
    if isinstance(a, np.ndarray):
        r = a - np.floor(a)
        r[r >= 1.0] = 0.0
        return r
    r = a - math.floor(a)
    if r >= 1:
        r = r - 1
    return r


@dataclass(frozen=True)
class PhasePoint:
    x: Number
    p: Number

    def __post_init__(self):
        object.__setattr__(self, "x", mod1(self.x))
        object.__setattr__(self, "p", mod1(self.p))

    def as_tuple(self) -> tuple:
        return (self.x, self.p)


@dataclass(frozen=True)
class SymplecticMatrix:
    """Integer matrix [[a, b], [c, d]] with unit determinant."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.det != 1:
            raise DomainError(f"ad - bc = {self.det}, expected 1")

    @classmethod
    def from_array(cls, A) -> "SymplecticMatrix":
        A = np.asarray(A)
        return cls(int(A[0, 0]), int(A[0, 1]), int(A[1, 0]), int(A[1, 1]))

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def hyperbolic(self) -> bool:
        return abs(self.trace) > 2

    @property
    def parity_ok(self) -> bool:
        """Checkerboard condition: a*b and c*d both even."""
        return (self.a * self.b) % 2 == 0 and (self.c * self.d) % 2 == 0

    def array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.int64)

    def inverse(self) -> "SymplecticMatrix":
        return SymplecticMatrix(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return SymplecticMatrix(
            self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d,
        )

    def power(self, n: int) -> "SymplecticMatrix":
        base = self if n >= 0 else self.inverse()
        out = SymplecticMatrix(1, 0, 0, 1)
        for _ in range(abs(n)):
            out = out @ base
        return out

    def __str__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"


S_CAT = SymplecticMatrix(1, 1, 1, 2)
S_DEGI = SymplecticMatrix(2, 1, 3, 2)


def cat_apply(S: SymplecticMatrix, pt: PhasePoint) -> PhasePoint:
    x, p = pt.x, pt.p
    return PhasePoint(S.a * x + S.b * p, S.c * x + S.d * p)


def baker_apply(pt: PhasePoint) -> PhasePoint:
    x, p = pt.x, pt.p
    if 2 * x < 1:
        return PhasePoint(2 * x, p / 2)
    return PhasePoint(2 * x - 1, (p + 1) / 2)


def lyapunov(S: SymplecticMatrix) -> float:
    """Positive Lyapunov exponent ``log((|tr S| + sqrt(tr^2 - 4))/2)``."""
    tr = S.trace
    if abs(tr) <= 2:
        raise DomainError(f"{S} is not hyperbolic (|trace| = {abs(tr)})")
    return math.log((abs(tr) + math.sqrt(tr * tr - 4)) / 2)


def fixed_points(S: SymplecticMatrix, n: int = 1) -> tuple[list[PhasePoint], int]:
    """All points with ``kappa_S^n(x) = x``, as exact fractions, and their count.

    Solutions of ``(S^n - I) x in Z^2`` have denominators dividing
    ``D = |det(S^n - I)|``; for each numerator u of x the congruence for the
    numerator v of p is solved directly.
    """
    Sn = S.power(n)
    m11, m12, m21, m22 = Sn.a - 1, Sn.b, Sn.c, Sn.d - 1
    D = abs(m11 * m22 - m12 * m21)
    if D == 0:
        raise DomainError(f"S^{n} has eigenvalue 1; periodic points are not isolated")
    points = []
    g = math.gcd(m12, D)
    Dg = D // g
    inv = pow(m12 // g, -1, Dg) if Dg > 1 else 0
    for u in range(D):
        rhs = (-m11 * u) % D
        if rhs % g:
            continue
        v0 = (rhs // g) * inv % Dg if Dg > 1 else 0
        for v in range(v0, D, Dg):
            if (m21 * u + m22 * v) % D == 0:
                points.append(PhasePoint(Fraction(u, D), Fraction(v, D)))
    return points, D


# ---------------------------------------------------------------------------
# Map handles


class CatMap:
    """Linear automorphism ``(x, p) -> (a x + b p, c x + d p) mod 1``."""

    kind = "cat"

    def __init__(self, S: SymplecticMatrix):
        self.S = S

    def apply(self, x, p, n: int = 1):
        M = self.S.power(n)
        return mod1(M.a * x + M.b * p), mod1(M.c * x + M.d * p)

    def apply_inverse(self, x, p):
        return self.apply(x, p, -1)

    def pushforward(self, f: TorusObservable, n: int = 1, **_) -> TorusObservable:
        return f.pushforward_linear(self.S.array(), n)

    def __repr__(self) -> str:
        return f"CatMap({self.S})"


class BakerMap:
    """The 2-baker's map; x in [0, 1/2) selects the first branch."""

    kind = "baker"

    def apply(self, x, p, n: int = 1):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        if n < 0:
            for _ in range(-n):
                x, p = self.apply_inverse(x, p)
            return x, p
        for _ in range(n):
            right = x >= 0.5
            x = np.where(right, 2 * x - 1, 2 * x)
            p = np.where(right, (p + 1) / 2, p / 2)
        return x, p

    def apply_inverse(self, x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        top = p >= 0.5
        return np.where(top, (x + 1) / 2, x / 2), np.where(top, 2 * p - 1, 2 * p)

    def pushforward(self, f: TorusObservable, n: int = 1, cutoff: int = 8, grid: int | None = None):
        return grid_pushforward(self, f, n, cutoff, grid)

    def __repr__(self) -> str:
        return "BakerMap()"


def _vector_field_terms(H: TorusObservable):
    """Real coefficient arrays for ``H = sum a_k cos(theta_k) + b_k sin(theta_k)``,
    one entry per pair {k, -k}."""
    ks, a, b = [], [], []
    for (k1, k2), c in H.coeffs.items():
        if (k1, k2) == (0, 0):
            continue
        if (-k1, -k2) in H.coeffs and (k1 < 0 or (k1 == 0 and k2 < 0)):
            continue
        # c e^{i theta} + conj(c) e^{-i theta} = 2 Re c cos - 2 Im c sin
        ks.append((k1, k2))
        a.append(2 * c.real)
        b.append(-2 * c.imag)
    return np.array(ks, dtype=float).reshape(-1, 2), np.array(a), np.array(b)


def hamiltonian_vector_field(H: TorusObservable, x, p, terms=None):
    """``(dH/dp, -dH/dx)`` for a real trigonometric polynomial H."""
    ks, a, b = terms if terms is not None else _vector_field_terms(H)
    dx = np.zeros_like(x)
    dp = np.zeros_like(x)
    for (k1, k2), ai, bi in zip(ks, a, b):
        theta = 2 * np.pi * (k1 * x + k2 * p)
        # d/dtheta of (a cos + b sin) = b cos - a sin
        g = bi * np.cos(theta) - ai * np.sin(theta)
        if k2:
            dx += (2 * np.pi * k2) * g
        if k1:
            dp -= (2 * np.pi * k1) * g
    return dx, dp


def hamiltonian_flow(H: TorusObservable, x, p, time: float, steps: int | None = None):
    """Time-``time`` flow of H by classical RK4 with a fixed step count."""
    if steps is None:
        steps = max(16, int(math.ceil(abs(time) * 200)))
    h = time / steps
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)
    t = _vector_field_terms(H)
    for _ in range(steps):
        k1x, k1p = hamiltonian_vector_field(H, x, p, t)
        k2x, k2p = hamiltonian_vector_field(H, x + h / 2 * k1x, p + h / 2 * k1p, t)
        k3x, k3p = hamiltonian_vector_field(H, x + h / 2 * k2x, p + h / 2 * k2p, t)
        k4x, k4p = hamiltonian_vector_field(H, x + h * k3x, p + h * k3p, t)
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        p = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return mod1(x), mod1(p)


class KickedCatMap:
    """``Phi_H^eps o kappa_S``: cat map followed by the time-eps flow of H."""

    kind = "kicked-cat"

    def __init__(self, S: SymplecticMatrix, eps: float, H: TorusObservable):
        if not H.real:
            raise DomainError("kick Hamiltonian must be real")
        self.S = S
        self.eps = float(eps)
        self.H = H
        self._cat = CatMap(S)

    def apply(self, x, p, n: int = 1):
        if n < 0:
            for _ in range(-n):
                x, p = self.apply_inverse(x, p)
            return x, p
        for _ in range(n):
            x, p = self._cat.apply(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
            if self.eps:
                x, p = hamiltonian_flow(self.H, x, p, self.eps)
        return x, p

    def apply_inverse(self, x, p):
        if self.eps:
            x, p = hamiltonian_flow(self.H, x, p, -self.eps)
        return self._cat.apply(np.asarray(x, dtype=float), np.asarray(p, dtype=float), -1)

    def pushforward(self, f: TorusObservable, n: int = 1, cutoff: int = 8, grid: int | None = None):
        if self.eps == 0:
            return self._cat.pushforward(f, n)
        return grid_pushforward(self, f, n, cutoff, grid)

    def __repr__(self) -> str:
        return f"KickedCatMap({self.S}, eps={self.eps})"


def grid_pushforward(kappa, f: TorusObservable, n: int, cutoff: int, grid: int | None = None) -> TorusObservable:
    """Fourier data of ``f o kappa^n`` sampled on a grid, truncated at ``cutoff``."""
    G = grid or max(64, 8 * cutoff)
    if G <= 2 * cutoff:
        raise DomainError(f"grid {G} too coarse for cutoff {cutoff}")
    # cell centres keep samples off the lines where baker-type maps jump
    s = (np.arange(G) + 0.5) / G
    X, P = np.meshgrid(s, s, indexing="ij")
    Xn, Pn = kappa.apply(X, P, n)
    vals = f(Xn, Pn)
    coef = np.fft.fft2(vals) / G**2
    k = np.arange(-cutoff, cutoff + 1)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    # undo the half-cell sampling offset
    c = coef[K1 % G, K2 % G] * np.exp(-1j * np.pi * (K1 + K2) / G)
    if f.real:
        c = 0.5 * (c + np.conj(c[::-1, ::-1]))
    coeffs = {(int(a), int(b)): v for a, b, v in zip(K1.ravel(), K2.ravel(), c.ravel()) if abs(v) > 1e-15}
    return TorusObservable(coeffs, real=f.real)


def orbit(kappa, pt: PhasePoint, T: int) -> np.ndarray:
    """Array of shape (T+1, 2) with the orbit of ``pt``."""
    out = np.empty((T + 1, 2))
    x, p = np.array([float(pt.x)]), np.array([float(pt.p)])
    out[0] = x[0], p[0]
    for t in range(1, T + 1):
        x, p = kappa.apply(x, p)
        out[t] = x[0], p[0]
    return out


# ---------------------------------------------------------------------------
# Correlations


@dataclass(frozen=True)
class CorrelationValue:
    value: float
    stderr: float = 0.0
    converged: bool = True


@dataclass(frozen=True)
class CorrelationSeries:
    values: np.ndarray
    stderr: np.ndarray
    map_label: str
    observable_label: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values))


def _exact_cat_correlation(S: SymplecticMatrix, f: TorusObservable, g: TorusObservable, t: int) -> complex:
    ft = f.centered().pushforward_linear(S.array(), t)
    gc = g.centered().coeffs
    return complex(sum(c * gc.get((-k[0], -k[1]), 0j) for k, c in ft.coeffs.items()))


def _mc_orbit(kappa, x, p, t, rng):
    """Advance Monte Carlo points t steps; baker points get fresh low-order bits."""
    for _ in range(abs(t)):
        if isinstance(kappa, BakerMap) and t > 0:
            x, p = kappa.apply(x, p)
            x = x + rng.integers(0, 2, size=x.shape) * 2.0**-53
        elif t > 0:
            x, p = kappa.apply(x, p)
        else:
            x, p = kappa.apply_inverse(x, p)
    return x, p


def correlation(kappa, f: TorusObservable, g: TorusObservable, t: int, *, n_points: int = 200_000,
                seed: int = 0, target_stderr: float | None = None, max_points: int = 3_200_000) -> CorrelationValue:
    """Mean-subtracted correlation ``int g (f o kappa^t) - <f><g>``.

    Exact Fourier bookkeeping for cat maps; Monte Carlo with a standard error
    otherwise. When ``target_stderr`` is set the sample is doubled until it is
    met or ``max_points`` is reached (then ``converged`` is False).
    """
    if isinstance(kappa, CatMap) or (isinstance(kappa, KickedCatMap) and kappa.eps == 0):
        S = kappa.S
        return CorrelationValue(float(np.real(_exact_cat_correlation(S, f, g, t))))
    fm, gm = f.mean, g.mean
    n = n_points
    index = 0
    sums = []
    while True:
        rng = substream(seed, f"correlation/{t}", index)
        x = rng.random(n)
        p = rng.random(n)
        g0 = g(x, p)
        xt, pt = _mc_orbit(kappa, x, p, t, rng)
        sums.append(np.real(g0 * f(xt, pt)))
        samples = np.concatenate(sums)
        value = float(samples.mean() - np.real(fm * gm))
        stderr = float(samples.std(ddof=1) / np.sqrt(samples.size))
        if target_stderr is None or stderr <= target_stderr:
            return CorrelationValue(value, stderr, True)
        if samples.size >= max_points:
            return CorrelationValue(value, stderr, False)
        index += 1
        n = samples.size


def correlation_series(kappa, f: TorusObservable, g: TorusObservable, T_max: int, *,
                       n_points: int = 200_000, seed: int = 0) -> CorrelationSeries:
    """C(t) for t = 0..T_max. Monte Carlo series reuse one set of orbits."""
    values = np.zeros(T_max + 1)
    errs = np.zeros(T_max + 1)
    if isinstance(kappa, CatMap):
        for t in range(T_max + 1):
            values[t] = correlation(kappa, f, g, t).value
        return CorrelationSeries(values, errs, repr(kappa), f.label)
    rng = substream(seed, "correlation-series", 0)
    x = rng.random(n_points)
    p = rng.random(n_points)
    g0 = np.real(g(x, p))
    fg = np.real(f.mean * g.mean)
    for t in range(T_max + 1):
        s = np.real(g0 * f(x, p))
        values[t] = s.mean() - fg
        errs[t] = s.std(ddof=1) / np.sqrt(n_points)
        x, p = _mc_orbit(kappa, x, p, 1, rng)
    return CorrelationSeries(values, errs, repr(kappa), f.label)


@dataclass(frozen=True)
class ClassicalVariance:
    value: float
    remainder_bound: float
    stderr: float
    T_max: int


def _cat_tail_vanishes(S: SymplecticMatrix, f: TorusObservable, T: int) -> bool:
    """True if no mode of f returns to the support of f after more than T steps."""
    K = f.kmax
    if K == 0:
        return True
    lam = math.exp(lyapunov(S))
    for sign in (1, -1):
        M = S.array() if sign > 0 else S.inverse().array()
        w, V = np.linalg.eig(M.T.astype(float))
        iu = int(np.argmax(np.abs(w)))
        # left eigenvector picks the unstable component of k
        L = np.linalg.inv(V)
        for k in f.centered().coeffs:
            kv = np.array(k, dtype=float)
            alpha = abs(L[iu] @ kv) * np.linalg.norm(V[:, iu])
            beta = abs(L[1 - iu] @ kv) * np.linalg.norm(V[:, 1 - iu])
            t = T + 1
            if alpha * lam**t - beta * lam**(-t) <= math.sqrt(2) * K + 1e-9:
                return False
    return True


def classical_variance(kappa, f: TorusObservable, T_max: int, **mc) -> ClassicalVariance:
    """Two-sided sum ``sum_{t=-T}^{T} C_ff(t) = C(0) + 2 sum_{t=1}^{T} C(t)``."""
    series = correlation_series(kappa, f, f, T_max, **mc)
    value = float(series.values[0] + 2 * series.values[1:].sum())
    stderr = float(math.sqrt(series.stderr[0] ** 2 + 4 * (series.stderr[1:] ** 2).sum()))
    if isinstance(kappa, CatMap):
        bound = 0.0 if _cat_tail_vanishes(kappa.S, f, T_max) else 2 * f.variance
    else:
        bound = float(2 * abs(series.values[-1]) + 2 * series.stderr[-1])
    return ClassicalVariance(value, bound, stderr, T_max)
