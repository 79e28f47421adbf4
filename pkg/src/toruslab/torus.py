"""Quantum kinematics on the 2-torus.

States live in the N-dimensional space spanned by the position Dirac combs
``e_l`` (l = 0..N-1), with Planck constant ``hbar = 1/(2 pi N)``.

Conventions used throughout the package:

* DFT kernel ``F[l', l] = exp(-2 pi i l l' / N) / sqrt(N)``.
* Translations: ``(T(n1, 0) psi)(l) = psi(l - n1)``,
  ``(T(0, n2) psi)(l) = exp(2 pi i n2 l / N) psi(l)`` and
  ``T(n) = exp(i pi n1 n2 / N) T(n1, 0) T(0, n2)``.
* The Fourier mode ``exp(2 pi i (k1 x + k2 p))`` quantizes to ``T(-k2, k1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import CutoffError, DomainError

# Periodization window for Gaussian wavepackets; terms with |nu| > 3 are
# below exp(-9 pi N) relative to the retained ones.
NU_MAX = 3


@dataclass(frozen=True)
class TorusState:
    """A vector of the torus Hilbert space in the position basis."""

    N: int
    amps: np.ndarray
    description: str = ""
    seed: int | None = None

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        if self.N < 1:
            raise DomainError(f"dimension must be >= 1, got {self.N}")
        if amps.shape != (self.N,):
            raise DomainError(f"expected {self.N} amplitudes, got {amps.shape[0]}")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @property
    def hbar(self) -> float:
        return 1.0 / (2 * np.pi * self.N)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "TorusState":
        nrm = self.norm
        if nrm == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return TorusState(self.N, self.amps / nrm, self.description, self.seed)

    def inner(self, other: "TorusState") -> complex:
        """Hermitian product <self, other>, antilinear in ``self``."""
        return complex(np.vdot(self.amps, other.amps))

    def evolve(self, matrix: np.ndarray, description: str | None = None) -> "TorusState":
        return TorusState(self.N, matrix @ self.amps,
                          self.description if description is None else description, self.seed)


def _check_index(N: int, index: int, name: str) -> None:
    if N < 1:
        raise DomainError(f"dimension must be >= 1, got {N}")
    if not 0 <= index < N:
        raise DomainError(f"{name}={index} out of range 0..{N - 1}")


def position_state(N: int, ell: int) -> TorusState:
    _check_index(N, ell, "position index")
    amps = np.zeros(N, dtype=np.complex128)
    amps[ell] = 1.0
    return TorusState(N, amps, f"position({ell})")


def momentum_state(N: int, m: int) -> TorusState:
    """Momentum eigenstate ``F_N^* e_m``, localized on the line p = m/N."""
    _check_index(N, m, "momentum index")
    ell = np.arange(N)
    amps = np.exp(2j * np.pi * m * ell / N) / np.sqrt(N)
    return TorusState(N, amps, f"momentum({m})")


def dft_matrix(N: int) -> np.ndarray:
    ell = np.arange(N)
    phase = np.outer(ell, ell) % N
    return np.exp(-2j * np.pi * phase / N) / np.sqrt(N)


def dft(state: TorusState) -> TorusState:
    return TorusState(state.N, np.fft.fft(state.amps, norm="ortho"), state.description, state.seed)


def idft(state: TorusState) -> TorusState:
    return TorusState(state.N, np.fft.ifft(state.amps, norm="ortho"), state.description, state.seed)


def _translation_entries(N: int, n1: int, n2: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row indices, column indices and values of the sparse matrix T(n1, n2)."""
    ell = np.arange(N)
    cols = (ell - n1) % N
    # phase exponent in units of pi/N, computed exactly in integers
    expo = (n1 * n2 + 2 * n2 * (ell - n1)) % (2 * N)
    return ell, cols, np.exp(1j * np.pi * expo / N)


def translation_matrix(N: int, n: tuple[int, int]) -> np.ndarray:
    rows, cols, vals = _translation_entries(N, int(n[0]), int(n[1]))
    T = np.zeros((N, N), dtype=np.complex128)
    T[rows, cols] = vals
    return T


def translation(state: TorusState, n: tuple[int, int]) -> TorusState:
    """Apply the Weyl translation T(n) to ``state``."""
    rows, cols, vals = _translation_entries(state.N, int(n[0]), int(n[1]))
    out = np.empty(state.N, dtype=np.complex128)
    out[rows] = vals * state.amps[cols]
    return TorusState(state.N, out, state.description, state.seed)


@dataclass(frozen=True)
class TorusObservable:
    """Trigonometric polynomial ``f(x, p) = sum_k c_k exp(2 pi i (k1 x + k2 p))``."""

    coeffs: Mapping[tuple[int, int], complex]
    real: bool = False
    label: str = ""

    def __post_init__(self):
        clean: dict[tuple[int, int], complex] = {}
        for k, c in dict(self.coeffs).items():
            k = (int(k[0]), int(k[1]))
            c = complex(c)
            if c != 0:
                clean[k] = clean.get(k, 0j) + c
        clean = {k: c for k, c in sorted(clean.items()) if c != 0}
        object.__setattr__(self, "coeffs", clean)
        if self.real and not self.is_real():
            raise DomainError("coefficients violate c_{-k} = conj(c_k) for a real observable")

    @property
    def kmax(self) -> int:
        return max((max(abs(k[0]), abs(k[1])) for k in self.coeffs), default=0)

    @property
    def mean(self) -> complex:
        return self.coeffs.get((0, 0), 0j)

    @property
    def variance(self) -> float:
        """Liouville variance ``sum_{k != 0} |c_k|^2``."""
        return float(sum(abs(c) ** 2 for k, c in self.coeffs.items() if k != (0, 0)))

    def is_real(self, tol: float = 1e-12) -> bool:
        for k, c in self.coeffs.items():
            partner = self.coeffs.get((-k[0], -k[1]), 0j)
            if abs(partner - np.conj(c)) > tol * max(1.0, abs(c)):
                return False
        return True

    def __call__(self, x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        out = np.zeros(np.broadcast(x, p).shape, dtype=np.complex128)
        for (k1, k2), c in self.coeffs.items():
            out += c * np.exp(2j * np.pi * (k1 * x + k2 * p))
        return out.real if self.real else out

    def __add__(self, other: "TorusObservable") -> "TorusObservable":
        coeffs = dict(self.coeffs)
        for k, c in other.coeffs.items():
            coeffs[k] = coeffs.get(k, 0j) + c
        return TorusObservable(coeffs, self.real and other.real)

    def scaled(self, s: complex) -> "TorusObservable":
        real = self.real and complex(s).imag == 0
        return TorusObservable({k: s * c for k, c in self.coeffs.items()}, real)

    def conj(self) -> "TorusObservable":
        return TorusObservable({(-k[0], -k[1]): np.conj(c) for k, c in self.coeffs.items()}, self.real)

    def centered(self) -> "TorusObservable":
        return TorusObservable({k: c for k, c in self.coeffs.items() if k != (0, 0)}, self.real)

    def pushforward_linear(self, S: np.ndarray, n: int = 1) -> "TorusObservable":
        """Fourier data of ``f o kappa_S^n``: mode k moves to (S^T)^n k."""
        M = np.linalg.matrix_power(np.asarray(S, dtype=object), abs(n)) if n else np.eye(2, dtype=int)
        M = np.array(M, dtype=object)
        if n < 0:
            a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
            M = np.array([[d, -b], [-c, a]], dtype=object)
        coeffs = {}
        for (k1, k2), c in self.coeffs.items():
            new = (int(M[0, 0] * k1 + M[1, 0] * k2), int(M[0, 1] * k1 + M[1, 1] * k2))
            coeffs[new] = c
        return TorusObservable(coeffs, self.real)


def constant(value: float = 1.0) -> TorusObservable:
    return TorusObservable({(0, 0): value}, real=True, label=f"{value}")


def cos_mode(k1: int, k2: int, amplitude: float = 1.0) -> TorusObservable:
    """``amplitude * cos(2 pi (k1 x + k2 p))``."""
    if (k1, k2) == (0, 0):
        return constant(amplitude)
    return TorusObservable({(k1, k2): amplitude / 2, (-k1, -k2): amplitude / 2}, real=True)


def sin_mode(k1: int, k2: int, amplitude: float = 1.0) -> TorusObservable:
    if (k1, k2) == (0, 0):
        return TorusObservable({}, real=True)
    return TorusObservable({(k1, k2): amplitude / 2j, (-k1, -k2): -amplitude / 2j}, real=True)


def observable_from_modes(modes: Iterable[tuple[tuple[int, int], complex]], real: bool = False) -> TorusObservable:
    return TorusObservable(dict(modes), real=real)


@dataclass(frozen=True)
class QuantumObservable:
    N: int
    matrix: np.ndarray = field(repr=False)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def quantize_observable(f: TorusObservable, N: int, check_cutoff: bool = True) -> QuantumObservable:
    """Weyl quantization ``sum_k c_k T(-k2, k1)`` as a dense N x N matrix.

    With ``check_cutoff`` the modes must satisfy ``|k_i| < N/2`` so that no
    two distinct modes alias onto the same operator.
    """
    if check_cutoff and 2 * f.kmax >= N:
        raise CutoffError(f"cutoff K_max={f.kmax} requires N > {2 * f.kmax}, got N={N}")
    A = np.zeros((N, N), dtype=np.complex128)
    ell = np.arange(N)
    for (k1, k2), c in f.coeffs.items():
        # T(-k2, k1) has entries exp(i pi (2 k1 l + k1 k2)/N) at (l, l + k2)
        expo = (2 * k1 * ell + k1 * k2) % (2 * N)
        A[ell, (ell + k2) % N] += c * np.exp(1j * np.pi * expo / N)
    if f.real:
        A = 0.5 * (A + A.conj().T)
    return QuantumObservable(N, A)


def coherent_amplitudes(N: int, x0: float, p0: float) -> np.ndarray:
    """Unnormalized periodized Gaussian centred at (x0, p0) (both taken mod 1)."""
    x0 = float(x0) % 1.0
    p0 = float(p0) % 1.0
    q = np.arange(N)[:, None] / N - np.arange(-NU_MAX, NU_MAX + 1)[None, :]
    terms = np.exp(-np.pi * N * (q - x0) ** 2) * np.exp(2j * np.pi * ((N * p0 * q) % 1.0))
    return terms.sum(axis=1)


def coherent_state(N: int, x0: float, p0: float) -> TorusState:
    if N < 1:
        raise DomainError(f"dimension must be >= 1, got {N}")
    amps = coherent_amplitudes(N, x0, p0)
    return TorusState(N, amps / np.linalg.norm(amps), f"coherent({x0 % 1.0:.6g},{p0 % 1.0:.6g})")
