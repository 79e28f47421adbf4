"""Random-state ensembles and statistics of eigenstates on the torus."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.special
import scipy.stats

from .errors import DomainError, NumericalError
from .maps import SpectralData
from .phase_space import husimi_grid, stellar_fourier, stellar_zeros
from .rng import substream
from .torus import TorusObservable, TorusState, coherent_state, quantize_observable


@dataclass
class StatReport:
    """Summary statistics of a sample; serializes to the StatReport JSON layout."""

    descriptor: str
    n_samples: int
    mean: float
    var: float
    skew: float
    kurtosis: float
    hist_edges: list = field(default_factory=list)
    hist_counts: list = field(default_factory=list)
    stderr: dict = field(default_factory=dict)
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hist"] = {"edges": d.pop("hist_edges"), "counts": d.pop("hist_counts")}
        return d


def describe(values, descriptor: str = "", bins: int = 32, seed: int | None = None,
             hist_range: tuple[float, float] | None = None, **extra) -> StatReport:
    """Moments (kurtosis is non-excess, so 3 for a Gaussian) and a histogram."""
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n == 0:
        raise DomainError("empty sample")
    mean = float(v.mean())
    var = float(v.var())
    sd = math.sqrt(var)
    skew = float(np.mean((v - mean) ** 3) / sd ** 3) if sd > 0 else 0.0
    kurt = float(np.mean((v - mean) ** 4) / var ** 2) if sd > 0 else 0.0
    counts, edges = np.histogram(v, bins=bins, range=hist_range)
    stderr = {"mean": sd / math.sqrt(n)}
    if n > 1:
        # standard error of the variance from the fourth central moment
        stderr["var"] = math.sqrt(max(float(np.mean((v - mean) ** 4)) - var ** 2, 0.0) / n)
    return StatReport(descriptor, n, mean, var, skew, kurt, edges.tolist(), counts.tolist(),
                      stderr, seed, dict(extra))


# ---------------------------------------------------------------------------
# Random states


def random_state(N: int, seed: int, index: int = 0) -> TorusState:
    """Normalized vector with i.i.d. standard complex Gaussian amplitudes."""
    rng = substream(seed, "random_state", index)
    a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return TorusState(N, a / np.linalg.norm(a), f"random_state(seed={seed},index={index})", seed)


def random_real_state(N: int, seed: int, index: int = 0) -> TorusState:
    rng = substream(seed, "random_real_state", index)
    a = rng.standard_normal(N)
    return TorusState(N, a / np.linalg.norm(a), f"random_real_state(seed={seed},index={index})", seed)


# ---------------------------------------------------------------------------
# Quantum averages


def quantum_average(state: TorusState, f: TorusObservable):
    """``<psi, f_N psi>`` for a unit state; a float when f is real."""
    A = quantize_observable(f, state.N).matrix
    val = complex(np.vdot(state.amps, A @ state.amps))
    if f.real:
        if abs(val.imag) >= 1e-12:
            raise NumericalError(f"imaginary part {val.imag:.2e} for a real observable")
        return val.real
    return val


def eigen_averages(spec: SpectralData, f: TorusObservable) -> np.ndarray:
    """``<psi_j, f_N psi_j>`` for all eigenvectors."""
    A = quantize_observable(f, spec.N).matrix
    V = spec.eigenvectors
    vals = np.sum(V.conj() * (A @ V), axis=0)
    return vals.real if f.real else vals


def quantum_variance(spec: SpectralData, f: TorusObservable) -> float:
    """``(1/N) sum_j |<psi_j, (f_N - c0) psi_j>|^2``."""
    avg = eigen_averages(spec, f) - f.mean
    return float(np.mean(np.abs(avg) ** 2))


def qe_fraction(spec: SpectralData, f: TorusObservable, threshold: float = 0.1) -> float:
    """Fraction of eigenstates whose average deviates from the mean of f by more than threshold."""
    avg = eigen_averages(spec, f)
    return float(np.mean(np.abs(avg - f.mean) > threshold))


def variance_ratio(spec: SpectralData, f: TorusObservable, classical_var: float, g: float = 2.0) -> float:
    """``N Var_N(f) / (g Var_cl(f))``, which tends to 1 for chaotic maps (Heisenberg time N)."""
    return spec.N * quantum_variance(spec, f) / (g * classical_var)


def parity_matrix(N: int) -> np.ndarray:
    """``(R psi)(l) = psi(-l mod N)``, the quantization of (x, p) -> (-x, -p)."""
    R = np.zeros((N, N))
    R[(-np.arange(N)) % N, np.arange(N)] = 1.0
    return R


def parity_labels(spec: SpectralData, tol: float = 1e-6) -> np.ndarray:
    """Parity (+1 or -1) of every eigenvector; NumericalError if one is not a parity eigenstate."""
    V = spec.eigenvectors
    par = np.sum(V.conj() * (parity_matrix(spec.N) @ V), axis=0).real
    bad = np.abs(np.abs(par) - 1) > tol
    if np.any(bad):
        raise NumericalError(f"{int(bad.sum())} eigenvectors are not parity eigenstates "
                             f"(worst |<R>| = {np.abs(par[bad]).min():.3g})")
    return np.sign(par).astype(int)


def sector_variance_ratios(spec: SpectralData, f: TorusObservable, classical_var: float,
                           g: float = 2.0) -> dict[int, float]:
    """``N_s Var_s(f) / (g Var_cl(f))`` within each parity sector of a parity-symmetric map.

    A symmetry splits the spectrum into independent sectors; the variance law
    then holds per sector with N replaced by the sector dimension N_s, and
    the full-space ratio tends to the number of sectors instead of 1.
    """
    labels = parity_labels(spec)
    avg = eigen_averages(spec, f) - f.mean
    out = {}
    for s in (1, -1):
        a = avg[labels == s]
        if a.size:
            out[s] = float(a.size * np.mean(np.abs(a) ** 2) / (g * classical_var))
    return out


# ---------------------------------------------------------------------------
# Husimi statistics


def ks_exponential(values) -> float:
    """Kolmogorov-Smirnov distance between the sample and Exp(1)."""
    return float(scipy.stats.kstest(np.asarray(values).ravel(), "expon").statistic)


def husimi_value_stats(state: TorusState, M: int) -> StatReport:
    if M * M < 16 * state.N:
        raise DomainError(f"M^2 = {M * M} must be >= 16 N = {16 * state.N}")
    H = husimi_grid(state, M)
    vals = H.values.ravel()
    return describe(vals, f"husimi values of {state.description} (M={M})", bins=40,
                    hist_range=(0.0, 8.0), ks_exp=ks_exponential(vals), max=float(vals.max()))


def pooled_husimi_ks(N: int, M: int, n_samples: int, seed: int) -> float:
    """KS distance to Exp(1) of the Husimi values of n_samples random states pooled together."""
    vals = [husimi_grid(random_state(N, seed, i), M).values.ravel() for i in range(n_samples)]
    return ks_exponential(np.concatenate(vals))


def husimi_norms(state: TorusState, M: int, ps=(1, 2, np.inf)) -> dict:
    """Discrete L^p norms ``(mean(h^p))^{1/p}`` of the unit-mean Husimi density."""
    h = husimi_grid(state, M).values
    out = {}
    for p in ps:
        key = "inf" if np.isinf(p) else (int(p) if float(p).is_integer() else float(p))
        out[key] = float(h.max()) if np.isinf(p) else float(np.mean(h ** p) ** (1.0 / p))
    return out


def husimi_sup_scan(spec: SpectralData, M: int, x0: tuple[float, float] = (0.0, 0.0)):
    """Husimi sup-norms of all eigenstates next to their overlap with the coherent state at x0.

    Returns ``(sup, overlap2)``; states whose overlap exceeds ``2/N`` (twice
    the ensemble mean) are natural scar candidates.
    """
    phi = coherent_state(spec.N, *x0).amps
    sup = np.array([husimi_grid(spec.state(j), M).values.max() for j in range(spec.N)])
    overlap2 = np.abs(spec.eigenvectors.conj().T @ phi) ** 2
    return sup, overlap2


# ---------------------------------------------------------------------------
# Nodal counts on Z_N


def realify(amps: np.ndarray) -> tuple[np.ndarray, float]:
    """Rotate by the global phase minimizing the imaginary mass; returns (real part, residual)."""
    amps = np.asarray(amps, dtype=complex)
    alpha = 0.5 * np.angle(np.sum(amps ** 2))
    v = amps * np.exp(-1j * alpha)
    return v.real.copy(), float(np.linalg.norm(v.imag))


def sign_changes(values) -> int:
    """Number of cyclic sign changes, with exact zeros counted as positive."""
    s = np.asarray(values) >= 0
    return int(np.count_nonzero(s != np.roll(s, 1)))


def position_nodal_count(state, tol: float = 1e-9) -> int:
    """Number of maximal cyclic intervals of constant sign of the amplitudes."""
    amps = state.amps if isinstance(state, TorusState) else np.asarray(state)
    if np.iscomplexobj(amps):
        if np.max(np.abs(amps.imag)) >= tol:
            raise DomainError("nodal counts need real amplitudes")
        amps = amps.real
    if np.any(amps == 0):
        warnings.warn("exact zero amplitude treated as positive", RuntimeWarning, stacklevel=2)
    c = sign_changes(amps)
    return c if c > 0 else 1


def sign_change_law(N: int) -> np.ndarray:
    """Exact pmf of the cyclic sign-change count for i.i.d. symmetric signs.

    ``P(C = c) = binom(N, c) / 2^{N-1}`` for even c, zero for odd c.
    """
    c = np.arange(N + 1)
    pmf = np.array([math.comb(N, int(k)) for k in c], dtype=float) / 2.0 ** (N - 1)
    pmf[c % 2 == 1] = 0.0
    return pmf


def nodal_count_law(N: int) -> np.ndarray:
    """pmf of the nodal count nu (index = nu); nu = C for C > 0 and 1 for C = 0."""
    pmf = sign_change_law(N)
    out = pmf.copy()
    out[1] += out[0]
    out[0] = 0.0
    return out


def chi2_nodal_test(counts, N: int, min_expected: float = 5.0) -> tuple[float, float]:
    """Chi-square statistic and p-value of observed nodal counts against the exact law.

    Neighbouring support points are merged until each bin expects at least
    ``min_expected`` samples.
    """
    counts = np.asarray(counts, dtype=int)
    n = counts.size
    law = nodal_count_law(N)
    support = np.nonzero(law)[0]
    observed = np.array([np.count_nonzero(counts == s) for s in support], dtype=float)
    if np.count_nonzero(np.isin(counts, support)) != n:
        return math.inf, 0.0
    expected = law[support] * n
    obs_bins, exp_bins = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_bins:
            obs_bins[-1] += o_acc
            exp_bins[-1] += e_acc
        else:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
    if len(exp_bins) < 2:
        return 0.0, 1.0
    res = scipy.stats.chisquare(obs_bins, exp_bins)
    return float(res.statistic), float(res.pvalue)


def nodal_census_torus(N: int, n_samples: int, seed: int) -> np.ndarray:
    return np.array([position_nodal_count(random_real_state(N, seed, i)) for i in range(n_samples)])


# ---------------------------------------------------------------------------
# Zeros of random states


def zero_fourier_target(k: tuple[int, int]) -> float:
    """Large-N limit of ``N^3 E|c_k|^2`` for Gaussian random states: pi^2 zeta(3) |k|^4."""
    k2 = float(k[0] ** 2 + k[1] ** 2)
    return float(np.pi ** 2 * scipy.special.zeta(3) * k2 ** 2)


def zero_fourier_ensemble(N: int, k: tuple[int, int], n_samples: int, seed: int) -> StatReport:
    """``N^3 |c_k|^2`` over random states, c_k the Fourier coefficient of the zero measure."""
    vals = []
    for i in range(n_samples):
        z = stellar_zeros(random_state(N, seed, i))
        vals.append(N ** 3 * abs(stellar_fourier(z, k)) ** 2)
    return describe(vals, f"N^3 |c_k|^2 of stellar zeros, N={N}, k={tuple(k)}", bins=40, seed=seed,
                    N=N, k=list(k), target=zero_fourier_target(k))
