"""Random-wave ensembles on the unit square and their two-point and value statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage

from .bessel import bessel_j0, bessel_j_orders
from .errors import DomainError
from .rng import substream
from .stats import StatReport, describe

SAMPLES_PER_WAVELENGTH = 8


@dataclass(frozen=True)
class ScalarField2D:
    """Real field on the M x M grid ``(i/M, j/M)``; ``values[i, j]`` at x = i/M, y = j/M."""

    M: int
    values: np.ndarray = field(repr=False)
    k: float
    descriptor: str = ""
    seed: int | None = None
    periodic: bool = False

    @property
    def samples_per_wavelength(self) -> float:
        return self.M * 2 * np.pi / self.k if self.k > 0 else math.inf


def _check_resolution(k: float, M: int) -> None:
    if k > 0 and M * 2 * np.pi / k < SAMPLES_PER_WAVELENGTH:
        raise DomainError(f"M={M} gives {M * 2 * np.pi / k:.2f} samples per wavelength at k={k}; "
                          f"need >= {SAMPLES_PER_WAVELENGTH}")


def plane_wave_sum(wavevectors: np.ndarray, amplitudes: np.ndarray, M: int) -> np.ndarray:
    """``Re sum_j a_j exp(i kappa_j . x)`` on the grid, as a separable matrix product."""
    u = np.arange(M) / M
    kv = np.asarray(wavevectors, dtype=float)
    Ex = np.exp(1j * np.outer(u, kv[:, 0]))
    Ey = np.exp(1j * np.outer(u, kv[:, 1]))
    return ((Ex * np.asarray(amplitudes)[None, :]) @ Ey.T).real


def _normalize(values: np.ndarray) -> np.ndarray:
    sd = values.std()
    return values / sd if sd > 0 else values


def sample_plane_wave_field(k: float, J: int | None, seed: int, M: int, *, index: int = 0,
                            periodic: bool = False, normalize: bool = True) -> ScalarField2D:
    """Superposition of J plane waves with |kappa| = k, uniform random directions and
    i.i.d. standard complex Gaussian amplitudes, scaled to unit empirical variance.

    ``periodic`` rounds every wavevector to the nearest point of 2 pi Z^2, which
    makes the field periodic on the unit square (|kappa| then deviates from k
    by at most pi sqrt(2)).
    """
    _check_resolution(k, M)
    J = int(math.ceil(k)) if J is None else int(J)
    if J < 1:
        raise DomainError("need at least one direction")
    rng = substream(seed, "plane-wave-field", index)
    phi = rng.uniform(0, 2 * np.pi, J)
    a = rng.standard_normal(J) + 1j * rng.standard_normal(J)
    kv = k * np.column_stack([np.cos(phi), np.sin(phi)])
    if periodic:
        kv = 2 * np.pi * np.rint(kv / (2 * np.pi))
    vals = plane_wave_sum(kv, a, M)
    if normalize:
        vals = _normalize(vals)
    desc = f"plane-wave k={k:g} J={J}" + (" periodic" if periodic else "")
    return ScalarField2D(M, vals, float(k), desc, seed, periodic)


def single_plane_wave(k: float, direction: float, M: int, phase: float = 0.0) -> ScalarField2D:
    """Degenerate one-direction member ``cos(k n . x + phase)`` (not variance-normalized)."""
    kv = k * np.array([[math.cos(direction), math.sin(direction)]])
    vals = plane_wave_sum(kv, np.array([np.exp(1j * phase)]), M)
    return ScalarField2D(M, vals, float(k), f"single plane wave k={k:g}")


def sample_bessel_field(k: float, M_max: int | None, seed: int, M: int, *, index: int = 0,
                        normalize: bool = True) -> ScalarField2D:
    """``sum_{|m| <= M_max} b_m J_|m|(k r) e^{i m theta}`` about the centre of the square.

    ``b_{-m} = conj(b_m)`` makes the field real; b_0 is real Gaussian and the
    b_m (m > 0) standard complex Gaussians, so the covariance is J_0(k|x-y|)
    once M_max exceeds k times the largest radius.
    """
    _check_resolution(k, M)
    M_max = int(math.ceil(k)) if M_max is None else int(M_max)
    rng = substream(seed, "bessel-field", index)
    b0 = rng.standard_normal()
    b = (rng.standard_normal(M_max) + 1j * rng.standard_normal(M_max)) / math.sqrt(2)
    u = np.arange(M) / M - 0.5
    X, Y = np.meshgrid(u, u, indexing="ij")
    r = np.hypot(X, Y)
    th = np.arctan2(Y, X)
    J = bessel_j_orders(M_max, k * r)
    vals = b0 * J[0]
    # 2 Re(b_m e^{i m theta}) for m >= 1, by a rotating phasor
    rot = np.exp(1j * th)
    ph = np.ones_like(rot)
    for m in range(1, M_max + 1):
        ph = ph * rot
        vals = vals + 2.0 * (b[m - 1] * ph).real * J[m]
    if normalize:
        vals = _normalize(vals)
    return ScalarField2D(M, vals, float(k), f"bessel k={k:g} M_max={M_max}", seed)


# ---------------------------------------------------------------------------
# Two-point function


@dataclass(frozen=True)
class CorrelationCurve:
    r: np.ndarray
    C: np.ndarray
    stderr: np.ndarray
    k: float
    R: float

    def reference(self) -> np.ndarray:
        return bessel_j0(self.k * self.r)

    def rms_deviation(self) -> float:
        return float(np.sqrt(np.mean((self.C - self.reference()) ** 2)))


def _single_correlation(field_: ScalarField2D, R: float, r: np.ndarray, n_angles: int, centre) -> np.ndarray:
    M = field_.M
    u = np.arange(M) / M
    cx, cy = centre
    ix = np.nonzero(np.abs(u - cx) <= R)[0]
    iy = np.nonzero(np.abs(u - cy) <= R)[0]
    X, Y = np.meshgrid(u[ix], u[iy], indexing="ij")
    inside = (X - cx) ** 2 + (Y - cy) ** 2 <= R * R
    px, py = X[inside], Y[inside]
    base = field_.values[np.ix_(ix, iy)][inside]
    norm = np.mean(base * base)
    # full circle with an even count: the direction set is closed under e -> -e, so C(-r) = C(r)
    ang = 2 * np.pi * np.arange(n_angles) / n_angles
    mode = "grid-wrap" if field_.periodic else "mirror"
    coeffs = scipy.ndimage.spline_filter(field_.values, order=3, mode=mode)
    out = np.empty(len(r))
    for n, rr in enumerate(r):
        acc = 0.0
        for a in ang:
            qx = (px + rr * math.cos(a)) * M
            qy = (py + rr * math.sin(a)) * M
            vals = scipy.ndimage.map_coordinates(coeffs, [qx, qy], order=3, mode=mode, prefilter=False)
            acc += np.mean(base * vals)
        out[n] = acc / n_angles / norm
    return out


def correlation_estimate(fields, R: float, r, *, n_angles: int = 16, centre=(0.5, 0.5)) -> CorrelationCurve:
    """Isotropically averaged two-point function over the disk of radius R at ``centre``.

    Each field gives ``C(r) = <psi(x) psi(x + r e)>_{x in disk, e} / <psi^2>_disk``
    (so C(0) = 1); off-grid values use cubic spline interpolation. The curve
    is the mean over fields, with the standard error across fields.
    """
    fields = [fields] if isinstance(fields, ScalarField2D) else list(fields)
    if not fields:
        raise DomainError("no fields")
    if n_angles < 2 or n_angles % 2:
        raise DomainError(f"n_angles must be even and >= 2, got {n_angles}")
    k = fields[0].k
    if R > 0.3 or R < 10.0 / k:
        raise DomainError(f"averaging radius R={R} must lie in [10/k, 0.3] = [{10.0 / k:.4g}, 0.3]")
    r = np.asarray(r, dtype=float)
    curves = np.array([_single_correlation(f, R, r, n_angles, centre) for f in fields])
    mean = curves.mean(axis=0)
    err = curves.std(axis=0, ddof=1) / math.sqrt(len(fields)) if len(fields) > 1 else np.zeros_like(mean)
    return CorrelationCurve(r, mean, err, k, R)


def value_moments(fields) -> StatReport:
    """Moments of the pooled grid values (kurtosis 3 for a Gaussian)."""
    fields = [fields] if isinstance(fields, ScalarField2D) else list(fields)
    vals = np.concatenate([f.values.ravel() for f in fields])
    return describe(vals, f"values of {len(fields)} field(s): {fields[0].descriptor}", bins=60,
                    hist_range=(-6.0, 6.0))


# ---------------------------------------------------------------------------
# Sup norms


def sup_ratio(field_: ScalarField2D) -> float:
    """``max |psi| / rms(psi)`` over the grid."""
    v = field_.values
    return float(np.abs(v).max() / math.sqrt(np.mean(v * v)))


def sup_norm_scan(k_list, n_samples: int, seed: int, *, samples_per_wavelength: float = 16.0,
                  q: float = 90.0) -> StatReport:
    """Sup-norm ratios of plane-wave fields for each k, with their q-th percentiles and
    the least-squares slope of the percentile against sqrt(log k)."""
    ks = [float(k) for k in k_list]
    ratios = {}
    pct = []
    for k in ks:
        M = int(math.ceil(samples_per_wavelength * k / (2 * np.pi)))
        r = [sup_ratio(sample_plane_wave_field(k, None, seed, M, index=i)) for i in range(n_samples)]
        ratios[k] = r
        pct.append(float(np.percentile(r, q)))
    s = np.sqrt(np.log(ks))
    slope, intercept = np.polyfit(s, pct, 1) if len(ks) > 1 else (float("nan"), float("nan"))
    allr = np.concatenate([ratios[k] for k in ks])
    return describe(allr, f"sup-norm ratios k={ks}", bins=30, seed=seed, k=ks, percentile=q,
                    percentiles=pct, slope_sqrt_log_k=float(slope), intercept=float(intercept),
                    ratios={str(k): ratios[k] for k in ks})
