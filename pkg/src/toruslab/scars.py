"""Wavepacket autocorrelations, local densities of states and scarred eigenstates of cat maps."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .classical import PhasePoint, SymplecticMatrix, fixed_points, lyapunov
from .errors import DomainError, NumericalError
from .maps import SpectralData, UnitaryPropagator, _scalar_defect, cat_period, propagator_period, quantize_cat
from .phase_space import husimi_grid
from .torus import TorusState, coherent_state

DISK_RADIUS = 0.1
CANDIDATE_FACTOR = 4.0


def ehrenfest_time(N: int, lam: float) -> float:
    """``log(2 pi N) / lam``, the log of the inverse Planck constant over the Lyapunov exponent."""
    if lam <= 0:
        raise DomainError(f"Lyapunov exponent must be positive, got {lam}")
    return math.log(2 * math.pi * N) / lam


def _anchor_state(N: int, anchor) -> TorusState:
    if isinstance(anchor, TorusState):
        if anchor.N != N:
            raise DomainError(f"anchor state has N={anchor.N}, expected {N}")
        return anchor.normalized()
    if isinstance(anchor, PhasePoint):
        return coherent_state(N, float(anchor.x), float(anchor.p))
    x0, p0 = anchor
    return coherent_state(N, float(x0), float(p0))


def autocorrelation(U: UnitaryPropagator, x0, t_range) -> np.ndarray:
    """``a(t) = <phi, U^t phi>`` by repeated application of U (t >= 0)."""
    ts = np.asarray(list(t_range), dtype=int)
    if ts.size and ts.min() < 0:
        raise DomainError("autocorrelation times must be nonnegative")
    phi = _anchor_state(U.N, x0).amps
    out = np.empty(ts.size, dtype=complex)
    want = {int(t): i for i, t in enumerate(ts)}
    v = phi.copy()
    for t in range(int(ts.max()) + 1 if ts.size else 0):
        if t in want:
            out[[i for i, s in enumerate(ts) if s == t]] = np.vdot(phi, v)
        v = U.matrix @ v
    return out


def autocorrelation_spectral(spec: SpectralData, x0, t_range) -> np.ndarray:
    """Same series from the spectral decomposition ``sum_j |c_j|^2 e^{i t theta_j}``."""
    ts = np.asarray(list(t_range), dtype=float)
    w = np.abs(spec.eigenvectors.conj().T @ _anchor_state(spec.N, x0).amps) ** 2
    return np.exp(1j * np.outer(ts, spec.eigenphases)) @ w


@dataclass(frozen=True)
class LdosCurve:
    theta: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    width: float = 0.0
    anchor: str = ""
    resolved: bool = True

    def mass(self) -> float:
        """``int S dtheta / 2 pi`` by the (spectrally accurate) periodic trapezoid rule."""
        return float(self.weights.mean())


def wrapped_gaussian(theta: np.ndarray, width: float) -> np.ndarray:
    """Gaussian of standard deviation ``width`` wrapped on the circle, unit mean over [0, 2 pi)."""
    theta = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    n_wrap = int(math.ceil(8 * width / (2 * np.pi))) + 1
    out = np.zeros_like(theta)
    for n in range(-n_wrap, n_wrap + 1):
        out += np.exp(-0.5 * ((theta + 2 * np.pi * n) / width) ** 2)
    return out * math.sqrt(2 * np.pi) / width


def default_ldos_width(N: int, lam: float) -> float:
    """``2 pi / (2 T_E)``: smoothing that keeps only times up to the Ehrenfest time."""
    return 2 * np.pi / (2 * ehrenfest_time(N, lam))


def smoothed_ldos(spec: SpectralData, x0, width: float, n_grid: int | None = None) -> LdosCurve:
    """Weights ``|<phi, psi_j>|^2`` smoothed by a wrapped Gaussian of the given width.

    ``x0`` is a phase-space point (coherent anchor) or any state. A width
    below the mean spacing 2 pi / N is allowed but flagged as unresolved.
    """
    if width <= 0:
        raise DomainError("smoothing width must be positive")
    phi = _anchor_state(spec.N, x0)
    w = np.abs(spec.eigenvectors.conj().T @ phi.amps) ** 2
    n = n_grid if n_grid is not None else max(1024, int(2 ** math.ceil(math.log2(40 * np.pi / width))))
    theta = 2 * np.pi * np.arange(n) / n
    S = wrapped_gaussian(theta[:, None] - spec.eigenphases[None, :], width) @ w
    return LdosCurve(theta, S, width, phi.description, width >= 2 * np.pi / spec.N)


# ---------------------------------------------------------------------------
# Periods and scar candidates


@dataclass(frozen=True)
class PeriodRecord:
    N: int
    T_N: int | None
    T_E: float
    candidate: bool
    defect: float | None = None


def scan_short_periods(S: SymplecticMatrix, N_range, factor: float = CANDIDATE_FACTOR,
                       verify: bool = True) -> list[PeriodRecord]:
    """Periods of U_N(S) over N_range; flags N with ``T_N <= factor * T_E(N)``.

    The period comes from arithmetic (:func:`cat_period`); with ``verify`` it
    is certified on the propagator, including minimality.
    """
    lam = lyapunov(S)
    out = []
    for N in sorted(set(int(n) for n in N_range)):
        T = cat_period(S, N)
        defect = None
        if verify and T is not None:
            U = quantize_cat(S, N)
            T_cert = propagator_period(U, T, candidate=T)
            if T_cert != T:
                raise NumericalError(f"arithmetic period {T} not confirmed on U_N (got {T_cert}) for N={N}")
            defect = _scalar_defect(U.power(T))[0]
        TE = ehrenfest_time(N, lam)
        out.append(PeriodRecord(N, T, TE, T is not None and T <= factor * TE, defect))
    return out


@dataclass(frozen=True)
class ScarReport:
    N: int
    T_N: int
    T_E: float
    theta_star: float
    disk_mass: float
    baseline: float
    overlap: float
    residual: float
    x0: tuple = (0.0, 0.0)

    def to_dict(self) -> dict:
        return asdict(self)


def half_scarred_state(S: SymplecticMatrix, N: int, x0=(0.0, 0.0), *, radius: float = DISK_RADIUS,
                       M: int = 128, rank: int = 0) -> tuple[TorusState, ScarReport]:
    """Project the coherent state at the fixed point x0 onto an eigenspace of U_N(S).

    With ``U^T = e^{i phi0} I`` the eigenangles are ``(phi0 + 2 pi m) / T`` and
    the projector onto angle theta is ``(1/T) sum_{t<T} e^{-i theta t} U^t``.
    The eigenspace receiving the ``rank``-th largest share of the coherent
    state is used (rank 0: the largest).
    """
    x0 = (float(x0[0]) % 1.0, float(x0[1]) % 1.0)
    dx = S.a * x0[0] + S.b * x0[1] - x0[0]
    dp = S.c * x0[0] + S.d * x0[1] - x0[1]
    if abs(dx - round(dx)) > 1e-12 or abs(dp - round(dp)) > 1e-12:
        raise DomainError(f"{x0} is not a fixed point of {S}")
    U = quantize_cat(S, N)
    T = cat_period(S, N)
    if T is None:
        raise NumericalError(f"no period found for N={N}")
    phase0 = _scalar_defect(U.power(T))[1]
    phi0 = float(np.angle(phase0))
    phi = coherent_state(N, *x0).amps
    orbit = np.empty((T, N), dtype=complex)
    v = phi.copy()
    for t in range(T):
        orbit[t] = v
        v = U.matrix @ v
    # P_m = (1/T) sum_t exp(-i (phi0 + 2 pi m) t / T) U^t phi
    twisted = orbit * np.exp(-1j * phi0 * np.arange(T) / T)[:, None]
    proj = np.fft.fft(twisted, axis=0) / T
    norms = np.linalg.norm(proj, axis=1)
    order = np.argsort(-norms, kind="stable")
    usable = [m for m in order if norms[m] >= 1e-8]
    if rank >= len(usable):
        raise NumericalError("coherent state has no usable projection onto the requested eigenspace")
    m = int(usable[rank])
    theta = float(np.mod((phi0 + 2 * np.pi * m) / T, 2 * np.pi))
    psi = proj[m] / norms[m]
    residual = float(np.linalg.norm(U.matrix @ psi - np.exp(1j * theta) * psi))
    state = TorusState(N, psi, f"half-scar N={N} theta={theta:.6f}")
    mass = husimi_grid(state, M).disk_mass(x0[0], x0[1], radius)
    report = ScarReport(N, T, ehrenfest_time(N, lyapunov(S)), theta, mass, math.pi * radius ** 2,
                        float(norms[m] ** 2), residual, x0)
    return state, report


def best_scar_candidate(S: SymplecticMatrix, n_max: int = 500, factor: float = CANDIDATE_FACTOR,
                        n_min: int = 8, **kw) -> tuple[TorusState, ScarReport, list[PeriodRecord]]:
    """Scan N in [n_min, n_max] and return the half-scarred state at the candidate with the
    smallest T_N / T_E (ties: larger N)."""
    records = scan_short_periods(S, range(n_min, n_max + 1), factor, verify=False)
    cands = [r for r in records if r.candidate]
    if not cands:
        raise NumericalError(f"no scar candidate with N <= {n_max}")
    best = min(cands, key=lambda r: (r.T_N / r.T_E, -r.N))
    state, report = half_scarred_state(S, best.N, **kw)
    return state, report, records


def fixed_point_anchors(S: SymplecticMatrix) -> list[tuple[float, float]]:
    pts, _ = fixed_points(S, 1)
    return [(float(p.x), float(p.p)) for p in pts]
