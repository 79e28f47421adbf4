import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toruslab.classical import (S_CAT, S_DEGI, BakerMap, CatMap, KickedCatMap, PhasePoint, SymplecticMatrix,
                                baker_apply, cat_apply, classical_variance, correlation, correlation_series,
                                fixed_points, grid_pushforward, hamiltonian_flow, hamiltonian_vector_field,
                                lyapunov, mod1, orbit)
from toruslab.errors import DomainError
from toruslab.io import read_table, write_correlation, write_orbit
from toruslab.torus import TorusObservable, constant, cos_mode, sin_mode


# ---------------------------------------------------------------------------
# matrices and points


def test_symplectic_validation():
    with pytest.raises(DomainError):
        SymplecticMatrix(1, 1, 1, 1)
    assert S_DEGI.hyperbolic and not SymplecticMatrix(1, 1, 0, 1).hyperbolic
    assert (S_DEGI @ S_DEGI.inverse()) == SymplecticMatrix(1, 0, 0, 1)
    assert S_CAT.power(2) == SymplecticMatrix(2, 3, 3, 5)


def test_mod1_range():
    assert mod1(-1e-18) < 1.0
    a = mod1(np.array([-1e-18, 1.0, 2.5, -0.25]))
    assert np.all((a >= 0) & (a < 1))
    assert a[2] == 0.5 and a[3] == 0.75


def test_cat_apply_examples():
    assert cat_apply(S_CAT, PhasePoint(0, 0)).as_tuple() == (0, 0)
    assert cat_apply(S_CAT, PhasePoint(0.5, 0.5)).as_tuple() == (0.0, 0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 60), st.integers(0, 59), st.integers(0, 59))
def test_cat_preserves_denominator(q, u, v):
    pt = PhasePoint(Fraction(u % q, q), Fraction(v % q, q))
    img = cat_apply(S_DEGI, pt)
    assert (img.x * q).denominator == 1 and (img.p * q).denominator == 1


def test_baker_apply_examples():
    assert baker_apply(PhasePoint(0.25, 0.5)).as_tuple() == (0.5, 0.25)
    assert baker_apply(PhasePoint(0.75, 0)).as_tuple() == (0.5, 0.5)
    assert baker_apply(PhasePoint(0, 0)).as_tuple() == (0, 0)
    # left-closed branches: x = 1/2 belongs to the second one
    assert baker_apply(PhasePoint(0.5, 0.0)).as_tuple() == (0.0, 0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_baker_inverse_property(x, p):
    b = BakerMap()
    x1, p1 = b.apply(np.array([x]), np.array([p]))
    x0, p0 = b.apply_inverse(x1, p1)
    assert abs(x0[0] - x) < 1e-15 and abs(p0[0] - p) < 1e-15


def test_lyapunov_values():
    assert lyapunov(S_CAT) == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-15)
    assert lyapunov(S_CAT) == pytest.approx(0.962424, abs=1e-6)
    assert lyapunov(S_DEGI) == pytest.approx(math.log(2 + math.sqrt(3)), abs=1e-15)
    assert lyapunov(S_DEGI.inverse()) == lyapunov(S_DEGI)
    with pytest.raises(DomainError):
        lyapunov(SymplecticMatrix(1, 1, 0, 1))


def test_fixed_points_examples():
    pts, D = fixed_points(S_CAT, 1)
    assert D == 1 and [p.as_tuple() for p in pts] == [(0, 0)]
    assert fixed_points(S_CAT, 2)[1] == 5
    with pytest.raises(DomainError):
        fixed_points(SymplecticMatrix(1, 0, 0, 1), 1)


@pytest.mark.parametrize("S", [S_CAT, S_DEGI])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_fixed_points_brute_force(S, n):
    pts, D = fixed_points(S, n)
    Sn = S.power(n)
    assert D == abs((Sn.a - 1) * (Sn.d - 1) - Sn.b * Sn.c)
    brute = set()
    for u in range(D):
        for v in range(D):
            if ((Sn.a - 1) * u + Sn.b * v) % D == 0 and (Sn.c * u + (Sn.d - 1) * v) % D == 0:
                brute.add((Fraction(u, D), Fraction(v, D)))
    assert {p.as_tuple() for p in pts} == brute and len(pts) == D


@pytest.mark.parametrize("n", [5, 6])
def test_fixed_point_counts_large_n(n):
    pts, D = fixed_points(S_CAT, n)
    assert len(pts) == D
    Sn = S_CAT.power(n)
    for p in pts[:: max(1, D // 50)]:
        img = PhasePoint(Sn.a * p.x + Sn.b * p.p, Sn.c * p.x + Sn.d * p.p)
        assert img == p


@pytest.mark.parametrize("kappa", [CatMap(S_DEGI), BakerMap()])
def test_area_preservation_histogram(kappa):
    rng = np.random.default_rng(5)
    n = 1_000_000
    x, p = kappa.apply(rng.random(n), rng.random(n))
    h, _, _ = np.histogram2d(x, p, bins=32, range=[[0, 1], [0, 1]])
    mu = n / 32 ** 2
    assert np.max(np.abs(h - mu)) < 4 * math.sqrt(mu) * 1.3  # 4 sigma with a margin for 1024 bins


def test_birkhoff_average_cat():
    pt = PhasePoint(math.sqrt(2) - 1, math.pi - 3)
    T = 100_000
    x, p = np.array([pt.x]), np.array([pt.p])
    acc = 0.0
    for _ in range(T):
        acc += math.cos(2 * math.pi * x[0])
        x, p = CatMap(S_DEGI).apply(x, p)
    # floating-point orbits of the cat map are pseudo-orbits; the average still converges
    assert abs(acc / T) < 5 / math.sqrt(T)


# ---------------------------------------------------------------------------
# flows and push-forwards


def test_vector_field_matches_finite_differences():
    H = cos_mode(1, 0) + cos_mode(0, 1) + sin_mode(1, 1, 0.3)
    rng = np.random.default_rng(1)
    x, p = rng.random(200), rng.random(200)
    e = 1e-6
    dx = (H(x, p + e) - H(x, p - e)) / (2 * e)
    dp = -(H(x + e, p) - H(x - e, p)) / (2 * e)
    vx, vp = hamiltonian_vector_field(H, x, p)
    assert np.allclose(vx, dx, atol=1e-7) and np.allclose(vp, dp, atol=1e-7)


def test_flow_conserves_energy_and_reverses():
    H = cos_mode(1, 0) + cos_mode(0, 1)
    rng = np.random.default_rng(2)
    x, p = rng.random(500), rng.random(500)
    x1, p1 = hamiltonian_flow(H, x, p, 0.1)
    # default RK4 step 1/200: local error O(h^5) with |grad H| ~ 2 pi
    err = np.max(np.abs(H(x1, p1) - H(x, p)))
    assert err < 1e-4
    xf, pf = hamiltonian_flow(H, x, p, 0.1, steps=400)
    assert np.max(np.abs(H(xf, pf) - H(x, p))) < err / 100
    x0, p0 = hamiltonian_flow(H, x1, p1, -0.1)
    d = np.abs((x0 - x + 0.5) % 1 - 0.5) + np.abs((p0 - p + 0.5) % 1 - 0.5)
    assert d.max() < 1e-4


def test_kicked_cat_inverse():
    km = KickedCatMap(S_DEGI, 0.1, cos_mode(1, 0) + cos_mode(0, 1))
    rng = np.random.default_rng(3)
    x, p = rng.random(100), rng.random(100)
    x1, p1 = km.apply(x, p)
    x0, p0 = km.apply_inverse(x1, p1)
    assert np.max(np.abs((x0 - x + 0.5) % 1 - 0.5)) < 1e-4  # RK4 truncation, not exact reversal


def test_kicked_cat_real_hamiltonian_required():
    with pytest.raises(DomainError):
        KickedCatMap(S_DEGI, 0.1, TorusObservable({(1, 0): 1.0}))


def test_grid_pushforward_reproduces_linear_pushforward():
    f = cos_mode(1, 0) + sin_mode(0, 1, 0.5)
    g = grid_pushforward(CatMap(S_DEGI), f, 1, cutoff=8)
    exact = CatMap(S_DEGI).pushforward(f, 1)
    for k in set(g.coeffs) | set(exact.coeffs):
        assert abs(g.coeffs.get(k, 0) - exact.coeffs.get(k, 0)) < 1e-12


# ---------------------------------------------------------------------------
# correlations


def test_cat_correlation_examples():
    f = cos_mode(1, 0)
    cat = CatMap(S_DEGI)
    assert correlation(cat, f, f, 0).value == pytest.approx(0.5, abs=1e-15)
    assert correlation(cat, f, f, 1).value == 0.0
    assert correlation(cat, constant(2.0), constant(2.0), 3).value == 0.0


def test_cat_correlation_fourier_oracle():
    # brute-force quadrature on a fine grid is exact for trigonometric polynomials
    f = cos_mode(1, 0) + sin_mode(1, 1, 0.4)
    g = cos_mode(2, 3, 0.7) + cos_mode(1, 0)
    cat = CatMap(S_CAT)
    G = 64
    u = np.arange(G) / G
    X, P = np.meshgrid(u, u, indexing="ij")
    for t in range(0, 3):
        xt, pt = cat.apply(X, P, t)
        brute = np.mean(g(X, P) * f(xt, pt)) - f.mean.real * g.mean.real
        assert correlation(cat, f, g, t).value == pytest.approx(brute, abs=1e-12)


@pytest.mark.parametrize("kappa", [BakerMap(), KickedCatMap(S_DEGI, 0.1, cos_mode(1, 0) + cos_mode(0, 1))])
def test_monte_carlo_correlation_at_zero_is_variance(kappa):
    f = cos_mode(1, 0) + cos_mode(0, 1, 0.5)
    c = correlation(kappa, f, f, 0, n_points=50_000)
    assert abs(c.value - f.variance) < 5 * c.stderr + 1e-12


def test_monte_carlo_target_stderr_flag():
    f = cos_mode(0, 1)
    c = correlation(BakerMap(), f, f, 1, n_points=1000, target_stderr=1e-9, max_points=4000)
    assert not c.converged and c.stderr > 1e-9
    c = correlation(BakerMap(), f, f, 1, n_points=1000, target_stderr=0.1)
    assert c.converged


def test_baker_correlation_cos_p():
    # p' = p/2 or (p+1)/2: int cos(2 pi p) cos(2 pi p') = 0 analytically
    f = cos_mode(0, 1)
    c = correlation(BakerMap(), f, f, 1, n_points=200_000)
    assert abs(c.value) < 5 * c.stderr


def test_baker_correlation_cos_x_one_step():
    # x' = 2x mod 1: int cos(2 pi x) cos(4 pi x) dx = 0 and int cos(4 pi x) cos(2 pi x') ... analytic
    f = cos_mode(1, 0)
    g = cos_mode(2, 0)
    c = correlation(BakerMap(), g, f, 1, n_points=200_000)
    # int f(x) g(2x) = int cos 2 pi x cos 8 pi x = 0; int g(x) f(2x) = 1/2
    assert abs(c.value) < 5 * c.stderr
    c2 = correlation(BakerMap(), f, g, 1, n_points=200_000)
    assert abs(c2.value - 0.5) < 5 * c2.stderr + 1e-12


def test_classical_variance_cat():
    f = cos_mode(1, 0)
    v = classical_variance(CatMap(S_DEGI), f, 5)
    assert v.value == 0.5 and v.remainder_bound == 0.0
    assert classical_variance(CatMap(S_DEGI), constant(3.0), 5).value == 0.0
    assert abs(classical_variance(CatMap(S_DEGI), f, 10).value - v.value) < 1e-12


def test_series_reproducible_and_files(tmp_path):
    km = KickedCatMap(S_DEGI, 0.1, cos_mode(1, 0) + cos_mode(0, 1))
    f = cos_mode(1, 0)
    a = correlation_series(km, f, f, 3, n_points=2000, seed=4)
    b = correlation_series(km, f, f, 3, n_points=2000, seed=4)
    assert np.array_equal(a.values, b.values)
    p1 = write_correlation(tmp_path / "c.csv", a)
    header, data = read_table(p1, "correlation-series")
    assert header == ["t", "C", "stderr"] and np.array_equal(data[:, 1], a.values)
    o = orbit(CatMap(S_CAT), PhasePoint(0.5, 0.5), 3)
    header, data = read_table(write_orbit(tmp_path / "o.csv", o), "orbit")
    assert header == ["t", "x", "p"] and np.array_equal(data[:, 1:], o)
    assert tuple(o[1]) == (0.0, 0.5)
