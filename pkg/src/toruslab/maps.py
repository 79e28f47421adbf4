"""Quantized torus maps: cat maps, the baker's map and kicked cat maps.

Also the generic spectral machinery used on their propagators: a Schur-based
eigensolver with canonical bases on degenerate clusters, Egorov defects and
period detection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .classical import BakerMap, CatMap, KickedCatMap, SymplecticMatrix
from .errors import CutoffError, DomainError, NumericalError, ParityError
from .torus import TorusObservable, TorusState, dft_matrix, quantize_observable

UNITARITY_TOL = 1e-11


@dataclass(frozen=True)
class UnitaryPropagator:
    N: int
    matrix: np.ndarray = field(repr=False)
    label: str = ""
    classical: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (self.N, self.N):
            raise DomainError(f"propagator shape {m.shape} does not match N={self.N}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        defect = self.unitarity_defect()
        if defect >= UNITARITY_TOL:
            raise NumericalError(f"{self.label}: ||U^dag U - I||_max = {defect:.3e}")

    def unitarity_defect(self) -> float:
        U = self.matrix
        return float(np.max(np.abs(U.conj().T @ U - np.eye(self.N))))

    def power(self, t: int) -> np.ndarray:
        if t >= 0:
            return np.linalg.matrix_power(self.matrix, t)
        return np.linalg.matrix_power(self.matrix.conj().T, -t)


# ---------------------------------------------------------------------------
# Cat maps


def _direct_cat_kernel(S: SymplecticMatrix, N: int) -> np.ndarray:
    """Discretized metaplectic kernel for b != 0.

    ``U[l', l] ~ sum_{nu mod b} exp(i pi (a x^2 - 2 x l' + d l'^2) / (N b))``
    with ``x = l + nu N``; the phase numerator is reduced exactly modulo 2Nb.
    """
    a, b, d = S.a, S.b, S.d
    B = abs(b)
    lp = np.arange(N, dtype=np.int64)[:, None]
    ell = np.arange(N, dtype=np.int64)[None, :]
    mod = 2 * N * B
    K = np.zeros((N, N), dtype=np.complex128)
    for nu in range(B):
        x = ell + nu * N
        num = (a * x * x - 2 * x * lp + d * lp * lp) % mod
        if b < 0:
            num = (-num) % mod
        K += np.exp(1j * np.pi * num / (N * B))
    return K


def _generator_matrices(N: int):
    """Unitaries quantizing [[1,1],[0,1]], [[1,0],[1,1]] and -I.

    For odd N the quadratic phases are twisted by (-1)^l so they stay
    N-periodic; the result then quantizes the map up to a half-translation.
    """
    ell = np.arange(N, dtype=np.int64)
    shift = N if N % 2 else 0
    quad = np.exp(1j * np.pi * ((ell * (ell + shift)) % (2 * N)) / N)
    F = dft_matrix(N)
    UB = np.diag(quad)
    UA = F.conj().T @ np.diag(quad.conj()) @ F
    UP = np.zeros((N, N), dtype=np.complex128)
    UP[(-ell) % N, ell] = 1.0
    return UA, UB, UP


def _factor_generators(S: SymplecticMatrix) -> list[tuple[str, int]]:
    """Word in A=[[1,1],[0,1]], B=[[1,0],[1,1]] and P=-I whose product is S."""
    a, b, c, d = S.a, S.b, S.c, S.d
    ops: list[tuple[str, int]] = []  # right multiplications applied to S
    while b != 0:
        if a == 0:
            a, c = b, c + d  # S B
            ops.append(("B", 1))
        elif abs(a) <= abs(b):
            q = -(b // a)  # S A^q: column2 += q column1
            b, d = b + q * a, d + q * c
            ops.append(("A", q))
        else:
            q = -(a // b)  # S B^q: column1 += q column2
            a, c = a + q * b, c + q * d
            ops.append(("B", q))
    # now S' = [[a, 0], [c, a]] with a = +-1, i.e. S' = a * B^{a c}
    word: list[tuple[str, int]] = []
    if a == -1:
        word.append(("P", 1))
    word.append(("B", a * c))
    # S = S' W^{-1}, W = product of recorded right factors
    for g, k in reversed(ops):
        word.append((g, -k))
    return word


def _check_word(S: SymplecticMatrix, word) -> None:
    gens = {"A": SymplecticMatrix(1, 1, 0, 1), "B": SymplecticMatrix(1, 0, 1, 1), "P": SymplecticMatrix(-1, 0, 0, -1)}
    M = SymplecticMatrix(1, 0, 0, 1)
    for g, k in word:
        M = M @ gens[g].power(k)
    if M != S:
        raise NumericalError(f"generator factorization failed for {S}")


def quantize_cat(S: SymplecticMatrix, N: int, strict: bool = True) -> UnitaryPropagator:
    """Quantum cat map ``U_N(S)`` satisfying ``U^-1 T(n) U = T(S^-1 n)``.

    Matrices obeying the checkerboard condition use the discretized
    metaplectic kernel (exact Egorov). Others are rejected when ``strict``;
    otherwise they are built from generators and Egorov holds up to signs.
    """
    if N < 1:
        raise DomainError(f"dimension must be >= 1, got {N}")
    if not S.hyperbolic:
        warnings.warn(f"{S} is not hyperbolic; quantizing anyway", stacklevel=2)
    label = f"cat{S} N={N}"
    if S.parity_ok and S.b != 0:
        K = _direct_cat_kernel(S, N)
        scale = np.linalg.norm(K[:, 0])
        if scale == 0:
            raise NumericalError(f"degenerate kernel for {S}, N={N}")
        U = K / scale * np.exp(-1j * np.pi * np.sign(S.b) / 4)
        return UnitaryPropagator(N, U, label, CatMap(S))
    if strict and not S.parity_ok:
        raise ParityError(f"{S} violates the checkerboard condition (a*b and c*d must be even)")
    word = _factor_generators(S)
    _check_word(S, word)
    UA, UB, UP = _generator_matrices(N)
    mats = {"A": UA, "B": UB, "P": UP}
    U = np.eye(N, dtype=np.complex128)
    for g, k in word:
        base = mats[g] if k >= 0 else mats[g].conj().T
        U = U @ np.linalg.matrix_power(base, abs(k) if g != "P" else 1)
    return UnitaryPropagator(N, U, label + " (generators)", CatMap(S))


def quantize_baker(N: int) -> UnitaryPropagator:
    """Quantum baker ``F_N^* diag(F_{N/2}, F_{N/2})``."""
    if N < 2 or N % 2:
        raise DomainError(f"the quantum baker's map needs an even dimension, got N={N}")
    h = N // 2
    Fh = dft_matrix(h)
    blocks = np.zeros((N, N), dtype=np.complex128)
    blocks[:h, :h] = Fh
    blocks[h:, h:] = Fh
    U = dft_matrix(N).conj().T @ blocks
    return UnitaryPropagator(N, U, f"baker N={N}", BakerMap())


def kick_operator(H: TorusObservable, N: int, eps: float) -> np.ndarray:
    """``exp(-2 pi i N eps H_N)`` via the Hermitian eigendecomposition of H_N."""
    if not H.real:
        raise DomainError("kick Hamiltonian must be real")
    Hm = quantize_observable(H, N).matrix
    w, V = np.linalg.eigh(Hm)
    return (V * np.exp(-2j * np.pi * N * eps * w)) @ V.conj().T


def perturbed_cat(S: SymplecticMatrix, N: int, eps: float, H: TorusObservable, strict: bool = True) -> UnitaryPropagator:
    base = quantize_cat(S, N, strict=strict)
    label = f"kicked-cat{S} N={N} eps={eps:g}"
    if eps == 0:
        return UnitaryPropagator(N, base.matrix, label, KickedCatMap(S, 0.0, H))
    U = kick_operator(H, N, eps) @ base.matrix
    return UnitaryPropagator(N, U, label, KickedCatMap(S, eps, H))


# ---------------------------------------------------------------------------
# Egorov


def egorov_defect(U: UnitaryPropagator, kappa, f: TorusObservable, n: int, *, cutoff: int | None = None,
                  grid: int | None = None, norm: str = "max") -> float:
    """Size of ``U^-n f_N U^n - (f o kappa^n)_N``.

    Linear cat maps push Fourier modes exactly and the evolved modes are
    quantized as the corresponding Weyl translations without cutoff reduction
    (aliasing is exact there). Other maps push f forward on a grid and
    re-project onto ``|k_i| <= cutoff < N/2``.

    ``norm`` is ``"max"`` (largest entry), ``"op"`` (spectral norm) or
    ``"hs"`` (Hilbert-Schmidt norm divided by sqrt(N)). The last one is the
    meaningful choice when f o kappa^n is discontinuous, since Gibbs overshoot
    of the re-projected target keeps the other two from decaying.
    """
    if norm not in ("max", "op", "hs"):
        raise DomainError(f"unknown norm {norm!r}")
    N = U.N
    if n == 0:
        return 0.0
    kappa = kappa if kappa is not None else U.classical
    if isinstance(kappa, CatMap) or (isinstance(kappa, KickedCatMap) and kappa.eps == 0):
        fn = kappa.pushforward(f, n) if isinstance(kappa, CatMap) else CatMap(kappa.S).pushforward(f, n)
        target = quantize_observable(fn, N, check_cutoff=False).matrix
        fq = quantize_observable(f, N, check_cutoff=False).matrix
    else:
        K = (N - 1) // 2 if cutoff is None else cutoff
        if 2 * K >= N:
            raise CutoffError(f"push-forward cutoff {K} needs N > {2 * K}, got N={N}")
        fn = kappa.pushforward(f, n, cutoff=K, grid=grid)
        target = quantize_observable(fn, N).matrix
        fq = quantize_observable(f, N).matrix
    Un = U.power(n)
    evolved = Un.conj().T @ fq @ Un
    diff = evolved - target
    if norm == "op":
        return float(np.linalg.norm(diff, 2))
    if norm == "hs":
        return float(np.linalg.norm(diff) / np.sqrt(N))
    return float(np.max(np.abs(diff)))


# ---------------------------------------------------------------------------
# Spectra


CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class SpectralData:
    N: int
    eigenphases: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)  # columns
    residuals: np.ndarray = field(repr=False)
    label: str = ""

    def state(self, j: int) -> TorusState:
        return TorusState(self.N, self.eigenvectors[:, j], f"{self.label} eigenstate {j}")

    def states(self) -> list[TorusState]:
        return [self.state(j) for j in range(self.N)]

    def gram_defect(self) -> float:
        V = self.eigenvectors
        return float(np.max(np.abs(V.conj().T @ V - np.eye(self.N))))


def _circular_clusters(theta: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group sorted angles whose consecutive gaps (cyclically) are below tol."""
    n = len(theta)
    if n == 0:
        return []
    gaps = np.diff(theta, append=theta[0] + 2 * np.pi)
    breaks = np.nonzero(gaps >= tol)[0]
    if len(breaks) == 0:
        return [np.arange(n)]
    start = (breaks[-1] + 1) % n
    order = np.roll(np.arange(n), -start)
    clusters, current = [], []
    for idx in order:
        current.append(idx)
        if gaps[idx] >= tol:
            clusters.append(np.array(current))
            current = []
    if current:
        clusters.append(np.array(current))
    return clusters


def _canonical_basis(V: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(V) that does not depend on the basis V itself.

    QR with column pivoting on the projector ``V V^dag``; ties in the pivoting
    are resolved by column order.
    """
    d = V.shape[1]
    P = V @ V.conj().T
    Q, _, _ = scipy.linalg.qr(P, pivoting=True, mode="economic")
    return Q[:, :d]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate so that the first entry of largest modulus is real positive."""
    mags = np.abs(v)
    i = int(np.argmax(mags > mags.max() * (1 - 1e-9)))
    return v * (np.conj(v[i]) / mags[i])


def eigensystem(U: UnitaryPropagator) -> SpectralData:
    """Eigenphases in [0, 2 pi) (ascending) and orthonormal eigenvectors.

    A complex Schur form of a normal matrix is diagonal, so its Schur vectors
    are orthonormal eigenvectors. Clusters of eigenphases closer than 1e-8 get
    a canonical basis of their eigenspace.
    """
    N = U.N
    T, Z = scipy.linalg.schur(U.matrix, output="complex")
    lam = np.diag(T)
    offdiag = np.max(np.abs(np.triu(T, 1))) if N > 1 else 0.0
    if not np.all(np.isfinite(lam)) or offdiag > 1e-8:
        raise NumericalError(f"Schur form not diagonal (off-diagonal {offdiag:.2e}); matrix not normal?")
    theta = np.mod(np.angle(lam), 2 * np.pi)
    order = np.argsort(theta, kind="stable")
    theta = theta[order]
    Z = Z[:, order]
    vecs = np.empty_like(Z)
    phases = np.empty(N)
    for cl in _circular_clusters(theta, CLUSTER_TOL):
        block = Z[:, cl] if len(cl) == 1 else _canonical_basis(Z[:, cl])
        for col, idx in enumerate(cl):
            v = _fix_phase(block[:, col])
            vecs[:, idx] = v
            phases[idx] = np.mod(np.angle(np.vdot(v, U.matrix @ v)), 2 * np.pi)
    order = np.argsort(phases, kind="stable")
    phases, vecs = phases[order], vecs[:, order]
    residuals = np.linalg.norm(U.matrix @ vecs - vecs * np.exp(1j * phases), axis=0)
    if np.max(residuals) >= 1e-9:
        raise NumericalError(f"eigenvector residual {np.max(residuals):.2e} exceeds 1e-9")
    return SpectralData(N, phases, vecs, residuals, U.label)


def _scalar_defect(V: np.ndarray) -> tuple[float, complex]:
    N = V.shape[0]
    phase = np.mean(np.diag(V))
    phase = phase / abs(phase) if abs(phase) > 0 else 1.0
    return float(np.max(np.abs(V - phase * np.eye(N)))), phase


PERIOD_TOL = 1e-8


def _is_scalar(V: np.ndarray) -> bool:
    return _scalar_defect(V)[0] < PERIOD_TOL


def _prime_factors(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def propagator_period(U: UnitaryPropagator, T_max: int, candidate: int | None = None) -> int | None:
    """Smallest T <= T_max with ``U^T = e^{i phi} I`` (to 1e-8), or None.

    With a ``candidate`` multiple of the period (e.g. from :func:`cat_period`)
    the answer is certified by checking ``U^c`` and ``U^{c/q}`` for the prime
    divisors q of c, since the admissible T form the multiples of the period.
    Without one, powers are accumulated one by one.
    """
    if T_max < 1:
        raise DomainError("T_max must be >= 1")
    if candidate is not None and candidate <= T_max:
        if _is_scalar(U.power(candidate)):
            c = candidate
            reduced = True
            while reduced:
                reduced = False
                for q in _prime_factors(c):
                    if _is_scalar(U.power(c // q)):
                        c //= q
                        reduced = True
                        break
            return c
    V = U.matrix.copy()
    for T in range(1, T_max + 1):
        if _is_scalar(V):
            return T
        V = V @ U.matrix
    return None


def _translation_sign_ok(N: int, n: tuple[int, int], m: tuple[int, int]) -> bool:
    """Whether T(n + N m) = +T(n)."""
    return (n[1] * m[0] + n[0] * m[1] + N * m[0] * m[1]) % 2 == 0


def cat_period(S: SymplecticMatrix, N: int, T_max: int | None = None) -> int | None:
    """Period of ``U_N(S)`` predicted from arithmetic (checkerboard S only).

    U^T commutes with every translation, hence is scalar, exactly when
    ``T(S^T e_i) = T(e_i)`` for both unit vectors, i.e. S^T = I mod N with
    the sign of T(n + N m) trivial on both columns.
    """
    if not S.parity_ok:
        raise ParityError(f"{S} violates the checkerboard condition")
    T_max = T_max if T_max is not None else 6 * N + 6
    a, b, c, d = 1, 0, 0, 1
    for T in range(1, T_max + 1):
        a, b, c, d = a * S.a + b * S.c, a * S.b + b * S.d, c * S.a + d * S.c, c * S.b + d * S.d
        a, b, c, d = a % (2 * N), b % (2 * N), c % (2 * N), d % (2 * N)
        if (a - 1) % N == 0 and b % N == 0 and c % N == 0 and (d - 1) % N == 0:
            m1 = ((a - 1) // N % 2, c // N % 2)
            m2 = (b // N % 2, (d - 1) // N % 2)
            if _translation_sign_ok(N, (1, 0), m1) and _translation_sign_ok(N, (0, 1), m2):
                return T
    return None
