import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toruslab.errors import CutoffError, DomainError
from toruslab.phase_space import husimi_grid
from toruslab.torus import (TorusObservable, TorusState, coherent_state, constant, cos_mode, dft, dft_matrix,
                            idft, momentum_state, position_state, quantize_observable, sin_mode, translation,
                            translation_matrix)


def random_vec(N, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(N) + 1j * rng.standard_normal(N)


def shift_and_clock(N):
    """Independent construction of X (shift) and Z (clock) from the definitions."""
    X = np.roll(np.eye(N), 1, axis=0)  # (X psi)(l) = psi(l - 1)
    Z = np.diag(np.exp(2j * np.pi * np.arange(N) / N))
    return X, Z


def weyl_oracle(N, n1, n2):
    X, Z = shift_and_clock(N)
    return np.exp(1j * np.pi * n1 * n2 / N) * np.linalg.matrix_power(X, n1 % N) @ np.linalg.matrix_power(Z, n2 % N)


# ---------------------------------------------------------------------------
# states and DFT


def test_position_state_basis():
    assert np.array_equal(position_state(4, 2).amps, [0, 0, 1, 0])
    assert np.array_equal(position_state(1, 0).amps, [1])
    with pytest.raises(DomainError):
        position_state(4, 4)
    with pytest.raises(DomainError):
        position_state(4, -1)


def test_state_validation():
    with pytest.raises(DomainError):
        TorusState(0, [])
    with pytest.raises(DomainError):
        TorusState(3, [1, 2])
    with pytest.raises(DomainError):
        TorusState(2, [0, 0]).normalized()
    s = TorusState(2, [3, 4]).normalized()
    assert abs(s.norm - 1) < 1e-15
    assert s.hbar == pytest.approx(1 / (4 * np.pi))


def test_dft_of_delta_is_uniform():
    out = dft(position_state(4, 0)).amps
    assert np.allclose(out, 0.5 * np.ones(4), atol=1e-15)


def test_dft_n2_kernel():
    assert np.allclose(dft_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)


def test_dft_matches_matrix_and_inverse():
    v = random_vec(64, 1)
    st_ = TorusState(64, v)
    assert np.allclose(dft(st_).amps, dft_matrix(64) @ v, atol=1e-12)
    assert np.allclose(idft(dft(st_)).amps, v, atol=1e-12)
    assert abs(dft(st_).norm - st_.norm) < 1e-12


@pytest.mark.parametrize("N", [2, 3, 7, 64, 255, 512])
def test_dft_unitary(N):
    F = dft_matrix(N)
    assert np.max(np.abs(F.conj().T @ F - np.eye(N))) < 1e-12


def test_momentum_states():
    assert np.allclose(momentum_state(4, 0).amps, 0.5 * np.ones(4))
    G = np.array([[momentum_state(8, m).inner(momentum_state(8, n)) for n in range(8)] for m in range(8)])
    assert np.max(np.abs(G - np.eye(8))) < 1e-14
    assert np.allclose(momentum_state(8, 3).amps, dft_matrix(8).conj().T @ position_state(8, 3).amps)
    with pytest.raises(DomainError):
        momentum_state(8, 8)


def test_momentum_state_husimi_on_lagrangian_line():
    N, M = 64, 128
    H = husimi_grid(momentum_state(N, 16), M)
    p = np.arange(M) / M
    band = np.abs(p - 0.25) <= 3 / np.sqrt(N)
    assert H.values[:, band].sum() / H.values.sum() >= 0.9


# ---------------------------------------------------------------------------
# translations


def test_translation_identity_and_full_period():
    v = TorusState(8, random_vec(8, 2))
    assert np.allclose(translation(v, (0, 0)).amps, v.amps)
    assert np.allclose(translation(v, (8, 0)).amps, v.amps, atol=1e-14)


@pytest.mark.parametrize("N", [5, 8, 16])
def test_translation_matches_clock_shift_oracle(N):
    for n1 in range(-4, 5):
        for n2 in range(-4, 5):
            assert np.allclose(translation_matrix(N, (n1, n2)), weyl_oracle(N, n1, n2), atol=1e-12)


@pytest.mark.parametrize("N", [5, 8, 16])
def test_translation_commutation_phase(N):
    # With the operator definitions above, Z X = e^{2 pi i/N} X Z, which gives
    # T(m) T(n) = e^{i pi (m2 n1 - m1 n2)/N} T(m + n).
    for m1 in range(-4, 5):
        for m2 in range(-4, 5):
            Tm = translation_matrix(N, (m1, m2))
            for n1, n2 in [(1, 0), (0, 1), (2, -3), (-4, 4), (3, 1)]:
                lhs = Tm @ translation_matrix(N, (n1, n2)) @ translation_matrix(N, (m1 + n1, m2 + n2)).conj().T
                phase = np.exp(1j * np.pi * (m2 * n1 - m1 * n2) / N)
                assert np.max(np.abs(lhs - phase * np.eye(N))) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.tuples(st.integers(-50, 50), st.integers(-50, 50)),
       st.tuples(st.integers(-50, 50), st.integers(-50, 50)))
def test_translation_group_law_property(N, m, n):
    v = TorusState(N, random_vec(N, N))
    lhs = translation(translation(v, n), m).amps
    rhs = np.exp(1j * np.pi * (m[1] * n[0] - m[0] * n[1]) / N) * translation(v, (m[0] + n[0], m[1] + n[1])).amps
    assert np.allclose(lhs, rhs, atol=1e-11)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(-40, 40), st.integers(-40, 40), st.integers(-3, 3), st.integers(-3, 3))
def test_translation_periodicity_up_to_sign(N, n1, n2, a, b):
    T = translation_matrix(N, (n1, n2))
    T2 = translation_matrix(N, (n1 + a * N, n2 + b * N))
    ratio = T2[T != 0] / T[T != 0]
    assert np.allclose(ratio, ratio[0]) and abs(abs(ratio[0].real) - 1) < 1e-12


# ---------------------------------------------------------------------------
# observables


def test_observable_reality_check():
    with pytest.raises(DomainError):
        TorusObservable({(1, 0): 1.0}, real=True)
    f = TorusObservable({(1, 0): 0.5 + 0.1j, (-1, 0): 0.5 - 0.1j}, real=True)
    assert f.is_real() and f.kmax == 1
    assert f.variance == pytest.approx(2 * abs(0.5 + 0.1j) ** 2)


def test_observable_evaluation_oracle():
    f = cos_mode(1, 2, 0.7) + sin_mode(0, 1, -0.3) + constant(0.25)
    x, p = np.random.default_rng(3).uniform(size=(2, 50))
    expected = 0.7 * np.cos(2 * np.pi * (x + 2 * p)) - 0.3 * np.sin(2 * np.pi * p) + 0.25
    assert np.allclose(f(x, p), expected, atol=1e-14)


def test_quantize_constant_is_identity():
    assert np.allclose(quantize_observable(constant(1.0), 7).matrix, np.eye(7))


def test_quantize_cos_x_is_diagonal():
    A = quantize_observable(cos_mode(1, 0), 8).matrix
    assert np.allclose(A, np.diag(np.cos(2 * np.pi * np.arange(8) / 8)), atol=1e-14)


def test_quantize_cos_p_is_fourier_conjugate():
    F = dft_matrix(8)
    A = quantize_observable(cos_mode(0, 1), 8).matrix
    assert np.allclose(A, F.conj().T @ np.diag(np.cos(2 * np.pi * np.arange(8) / 8)) @ F, atol=1e-14)


def test_quantize_matches_weyl_oracle():
    N = 11
    f = TorusObservable({(1, 2): 0.3 - 0.2j, (-3, 1): 1.1j, (2, -2): 0.5})
    A = quantize_observable(f, N).matrix
    oracle = sum(c * weyl_oracle(N, -k2, k1) for (k1, k2), c in f.coeffs.items())
    assert np.allclose(A, oracle, atol=1e-12)


def test_quantize_cutoff_error():
    with pytest.raises(CutoffError):
        quantize_observable(cos_mode(4, 0), 8)
    quantize_observable(cos_mode(3, 0), 8)


def coeff_maps(max_k=3):
    key = st.tuples(st.integers(-max_k, max_k), st.integers(-max_k, max_k))
    val = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)
    return st.dictionaries(key, val, max_size=6)


@settings(max_examples=40, deadline=None)
@given(coeff_maps(), coeff_maps(), st.floats(-3, 3))
def test_quantization_linear_and_adjoint(c1, c2, s):
    N = 9
    f, g = TorusObservable(c1), TorusObservable(c2)
    Af, Ag = quantize_observable(f, N).matrix, quantize_observable(g, N).matrix
    assert np.allclose(quantize_observable(f + g.scaled(s), N).matrix, Af + s * Ag, atol=1e-11)
    assert np.allclose(quantize_observable(f.conj(), N).matrix, Af.conj().T, atol=1e-12)
    # trace / N is the mean c_0 when all |k_i| < N
    assert abs(np.trace(Af) / N - f.mean) < 1e-12


@settings(max_examples=30, deadline=None)
@given(coeff_maps())
def test_real_observable_quantizes_hermitian(c):
    f = TorusObservable(c)
    fr = (f + f.conj()).scaled(0.5)
    fr = TorusObservable(fr.coeffs, real=True)
    assert quantize_observable(fr, 8).hermiticity_defect() < 1e-12


# ---------------------------------------------------------------------------
# coherent states


def test_coherent_state_normalized_and_peaked():
    phi = coherent_state(64, 0.5, 0.5)
    assert abs(phi.norm - 1) < 1e-13
    H = husimi_grid(phi, 64)
    assert H.argmax() == (32, 32)


def test_coherent_overlap_bound_oracle():
    N = 32
    a = coherent_state(N, 0, 0)
    b = coherent_state(N, 0.5, 0)
    # brute-force periodization over a much wider window as the oracle
    ell = np.arange(N) / N
    nu = np.arange(-20, 21)

    def brute(x0):
        v = np.exp(-np.pi * N * (ell[:, None] - x0 - nu[None, :]) ** 2).sum(axis=1)
        return v / np.linalg.norm(v)

    assert np.allclose(a.amps, brute(0.0), atol=1e-14)
    assert np.allclose(b.amps, brute(0.5), atol=1e-14)
    ov = abs(a.inner(b))
    # the two nearest images at distance 1/2 each contribute e^{-pi N/8}: the
    # bound 2 e^{-pi N/8} is attained to leading order
    assert ov <= 2 * np.exp(-np.pi * N / 8) * (1 + 1e-9)
    assert ov == pytest.approx(2 * np.exp(-np.pi * N / 8), rel=1e-6)
    assert ov == pytest.approx(abs(np.vdot(brute(0.0), brute(0.5))), rel=1e-9)


def test_coherent_resolution_of_identity():
    N, M = 32, 128
    acc = np.zeros((N, N), dtype=complex)
    for i in range(M):
        for j in range(M):
            v = coherent_state(N, i / M, j / M).amps
            acc += np.outer(v, v.conj())
    acc *= N / M ** 2
    assert np.max(np.abs(acc - np.eye(N))) < 1e-3
