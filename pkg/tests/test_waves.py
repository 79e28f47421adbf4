import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from toruslab.bessel import bessel_j0, bessel_j_orders, bessel_series
from toruslab.errors import DomainError
from toruslab.io import read_field, write_field
from toruslab.nodal import (UnionFind, expected_count, fit_power_law, flood_fill_count, nodal_census,
                            nodal_domains)
from toruslab.rng import substream
from toruslab.waves import (ScalarField2D, correlation_estimate, sample_bessel_field, sample_plane_wave_field,
                            single_plane_wave, sup_norm_scan, sup_ratio, value_moments)


# ---------------------------------------------------------------------------
# Bessel functions


def test_bessel_against_scipy():
    x = np.concatenate([np.linspace(0, 5, 101), np.linspace(5, 300, 400)])
    J = bessel_j_orders(120, x)
    for n in (0, 1, 2, 17, 60, 120):
        assert np.max(np.abs(J[n] - scipy.special.jv(n, x))) < 1e-10


def test_bessel_against_series_small_argument():
    x = np.linspace(0, 4, 81)
    J = bessel_j_orders(10, x)
    for n in range(11):
        assert np.max(np.abs(J[n] - bessel_series(n, x))) < 1e-10


def test_bessel_edge_cases():
    assert bessel_j0(0.0) == 1.0
    assert bessel_j_orders(3, np.zeros(2))[1:].max() == 0.0
    with pytest.raises(ValueError):
        bessel_j_orders(2, -1.0)
    # no overflow when the order far exceeds the argument
    assert np.all(np.isfinite(bessel_j_orders(200, np.array([1e-3, 0.5]))))


# ---------------------------------------------------------------------------
# ensembles


def test_plane_wave_field_normalized_and_centred():
    f = sample_plane_wave_field(100, None, 1, 1024)
    assert f.values.var() == pytest.approx(1.0, abs=1e-12)
    assert abs(f.values.mean()) < 0.05
    g = sample_plane_wave_field(100, None, 1, 1024)
    assert np.array_equal(f.values, g.values)


def test_single_direction_is_a_sinusoid():
    k, M = 60.0, 256
    f = sample_plane_wave_field(k, 1, 4, M, normalize=False)
    rng = substream(4, "plane-wave-field", 0)
    phi = rng.uniform(0, 2 * np.pi, 1)[0]
    a = complex(rng.standard_normal(1)[0], rng.standard_normal(1)[0])
    u = np.arange(M) / M
    X, Y = np.meshgrid(u, u, indexing="ij")
    expected = abs(a) * np.cos(k * (math.cos(phi) * X + math.sin(phi) * Y) + np.angle(a))
    assert np.allclose(f.values, expected, atol=1e-12)


def test_resolution_rule():
    with pytest.raises(DomainError):
        sample_plane_wave_field(200, None, 0, 128)
    sample_plane_wave_field(200, None, 0, 256)


def test_periodic_field_is_lattice_band_limited():
    k, M = 40.0, 64
    f = sample_plane_wave_field(k, None, 2, M, periodic=True)
    F = np.fft.fft2(f.values)
    n = np.fft.fftfreq(M, 1 / M)
    radius = np.hypot(n[:, None], n[None, :])
    band = np.abs(radius - k / (2 * np.pi)) <= 1.0
    assert np.sum(np.abs(F[~band]) ** 2) < 1e-20 * np.sum(np.abs(F) ** 2)


def test_bessel_field_real_and_normalized():
    f = sample_bessel_field(50, None, 3, 128)
    assert f.values.dtype == float and np.isrealobj(f.values)
    assert f.values.var() == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# correlations and values


def test_correlation_normalized_at_zero():
    f = sample_plane_wave_field(100, None, 0, 512)
    c = correlation_estimate(f, 0.2, [0.0, 0.01, 0.02])
    assert c.C[0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        correlation_estimate(f, 0.05, [0.0])
    with pytest.raises(DomainError):
        correlation_estimate(f, 0.35, [0.0])


def test_correlation_symmetric():
    f = sample_plane_wave_field(100, None, 0, 512)
    # the direction set contains every direction together with its reverse
    r = np.array([0.013, 0.027])
    assert np.allclose(correlation_estimate(f, 0.2, r).C, correlation_estimate(f, 0.2, -r).C, atol=1e-12)
    with pytest.raises(DomainError):
        correlation_estimate(f, 0.2, r, n_angles=5)


def test_many_direction_wave_matches_j0():
    k = 200.0
    f = sample_plane_wave_field(k, 256, 5, 1024)
    r = np.linspace(0, 10 / k, 21)
    c = correlation_estimate(f, 0.2, r)
    assert c.rms_deviation() < 0.05


def test_bessel_and_plane_wave_ensembles_agree():
    k, M, n = 100.0, 256, 8
    r = np.linspace(0, 10 / k, 21)
    pw = correlation_estimate([sample_plane_wave_field(k, None, 6, M, index=i) for i in range(n)], 0.2, r)
    bs = correlation_estimate([sample_bessel_field(k, None, 6, M, index=i) for i in range(n)], 0.2, r)
    assert np.sqrt(np.mean((pw.C - bs.C) ** 2)) < 0.03


def test_value_moments_controls():
    f = sample_plane_wave_field(100, None, 7, 512)
    r = value_moments(f)
    assert r.var == pytest.approx(1.0, abs=1e-12)
    sinus = single_plane_wave(2 * np.pi * 8, 0.3, 512)
    assert value_moments(sinus).kurtosis == pytest.approx(1.5, abs=0.02)


def test_sup_ratio_of_sinusoid():
    f = single_plane_wave(2 * np.pi * 8, 0.0, 256)
    assert sup_ratio(f) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_sup_norm_scan_growth():
    r = sup_norm_scan([50, 100, 200, 400], 20, 1)
    pct = r.extra["percentiles"]
    assert all(b > a for a, b in zip(pct, pct[1:]))
    assert pct[-1] / pct[0] < 1.6
    assert r.extra["slope_sqrt_log_k"] > 0


def test_field_file_round_trip(tmp_path):
    f = sample_plane_wave_field(60, None, 8, 128, periodic=True)
    paths = write_field(tmp_path / "f.raw", f)
    assert paths[0].stat().st_size == 4 * 128 * 128
    g = read_field(tmp_path / "f.raw")
    assert g.M == 128 and g.periodic and g.k == 60
    assert np.array_equal(g.values, f.values.astype(np.float32).astype(float))


# ---------------------------------------------------------------------------
# nodal domains


def test_union_find():
    uf = UnionFind(6)
    uf.union(0, 1)
    uf.union(2, 3)
    uf.union(1, 3)
    r = uf.roots()
    assert r[0] == r[1] == r[2] == r[3] and len(set(r.tolist())) == 3


def test_positive_field_single_domain():
    rep = nodal_domains(np.ones((16, 16)))
    assert rep.nu == 1 and rep.areas.tolist() == [1.0]


def test_checkerboard_exact_count():
    m, M = 10, 1024
    u = np.arange(M) / M
    psi = np.outer(np.cos(np.pi * m * u), np.cos(np.pi * m * u))
    assert nodal_domains(psi).nu == (m + 1) ** 2
    # glued edges merge the end intervals: m even gives m^2 rectangles on the torus
    assert nodal_domains(psi, periodic=True).nu == m ** 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_union_find_matches_flood_fill(seed, periodic):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((12, 15))
    rep = nodal_domains(vals, periodic=periodic)
    assert rep.nu == flood_fill_count(vals, periodic)
    assert rep.areas.sum() == pytest.approx(1.0)
    assert nodal_domains(-vals, periodic=periodic).nu == rep.nu
    assert nodal_domains(vals.T, periodic=periodic).nu == rep.nu


def test_domain_labels_partition_grid():
    f = sample_plane_wave_field(60, None, 9, 128)
    rep = nodal_domains(f, keep_labels=True)
    assert rep.labels.min() == 0 and rep.labels.max() == rep.nu - 1
    assert np.array_equal(np.bincount(rep.labels.ravel()) / 128 ** 2, rep.areas)
    assert rep.touches_boundary.any() and not rep.touches_boundary.all()


def test_saddle_rule_joins_checkerboard_blocks():
    vals = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert nodal_domains(vals).nu == 4
    assert nodal_domains(vals, saddle="bilinear").nu == 3  # the positive diagonal is joined
    with pytest.raises(DomainError):
        nodal_domains(vals, saddle="diagonal")


def test_refinement_stability():
    k = 100.0
    nu = [sum(nodal_domains(sample_plane_wave_field(k, None, 3, M, index=i, periodic=True)).nu for i in range(8))
          for M in (512, 1024)]
    assert abs(nu[1] - nu[0]) / nu[1] < 0.02


def test_power_law_fit_recovers_exponent():
    rng = np.random.default_rng(0)
    tau, a, b = 2.0, 1e-3, 1e-1
    # inverse-CDF sampling of the truncated power law
    u = rng.random(20_000)
    s = 1 - tau
    x = (a ** s + u * (b ** s - a ** s)) ** (1 / s)
    expo, err, n = fit_power_law(x, a, b)
    assert n == 20_000 and abs(expo + tau) < 4 * err and err < 0.02
    assert math.isnan(fit_power_law(x[:5], a, b)[0])


def test_expected_count():
    assert expected_count(200) == pytest.approx(40000 / (4 * math.pi))


def test_census_deterministic():
    a = nodal_census(100, 3, 11, M=512)
    b = nodal_census(100, 3, 11, M=512)
    assert a.to_dict() == b.to_dict()
    assert len(a.counts) == 3
    with pytest.raises(DomainError):
        nodal_census(100, 1, 0)
