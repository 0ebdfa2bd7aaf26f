import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chisquare

from marcinclt import charfn as cf
from marcinclt import spin
from marcinclt.errors import (ArgumentError, CapabilityError, DomainError,
                              NumericalError)


# --------------------------------------------------------------------------
# Hamiltonian


def test_hamiltonian_two_site_aligned():
    m = spin.ising_model(1, 2, beta=1.0, coupling=1.0, field=0.0)
    assert spin.hamiltonian(m, [1.0, 1.0]) == pytest.approx(-1.0)


def test_hamiltonian_two_site_with_field():
    m = spin.ising_model(1, 2, beta=1.0, coupling=1.0, field=0.5)
    # -J(+1)(-1) - 0.5(+1) - 0.5(-1) = 1
    assert spin.hamiltonian(m, [1.0, -1.0]) == pytest.approx(1.0)


def test_hamiltonian_xy_orthogonal_angles():
    m = spin.xy_model(1, 2, beta=1.0, coupling=(1.0, 0.0), field=(0.2, 0.1))
    cfg = np.array([[1.0, 0.0], [0.0, 1.0]])  # angles 0 and pi/2
    expected = -(1.0 * 1.0 * 0.0) - (0.2 * 1.0 + 0.1 * 0.0) \
        - (0.2 * 0.0 + 0.1 * 1.0)
    assert spin.hamiltonian(m, cfg) == pytest.approx(expected)


def test_hamiltonian_shape_mismatch():
    m = spin.ising_model(1, 2, beta=1.0)
    with pytest.raises(ArgumentError):
        spin.hamiltonian(m, [1.0, 1.0, 1.0])


def test_ferromagnetic_flags():
    assert spin.ising_model(1, 2, 1.0, coupling=1.0).ferromagnetic
    assert not spin.ising_model(1, 2, 1.0, coupling=-1.0).ferromagnetic
    assert spin.xy_model(1, 2, 1.0, coupling=(1.0, -0.8)).ferromagnetic
    assert not spin.xy_model(1, 2, 1.0, coupling=(0.5, 0.8)).ferromagnetic
    assert spin.heisenberg_model(1, 2, 1.0, coupling=(1.0, 0.5, 0.2)).ferromagnetic
    assert not spin.heisenberg_model(1, 2, 1.0,
                                     coupling=(1.0, 0.5, -0.2)).ferromagnetic


# --------------------------------------------------------------------------
# partition functions


def test_partition_single_site_ising():
    m = spin.ising_model(1, 1, beta=0.9, field=0.7)
    assert spin.partition_function(m) == pytest.approx(
        2 * math.cosh(0.9 * 0.7), rel=1e-14)


def test_partition_two_site_ising():
    m = spin.ising_model(1, 2, beta=1.0, coupling=1.0, field=0.0)
    assert spin.partition_function(m) == pytest.approx(
        2 * math.e + 2 / math.e, rel=1e-14)


def test_partition_xy_single_site_against_quadrature_oracle():
    # independent adaptive-quadrature oracle (not the trapezoid backend)
    h = 1.3
    m = spin.xy_model(1, 1, beta=1.0, field=(h, 0.0))
    oracle, err = quad(lambda th: math.exp(h * math.cos(th)), 0.0,
                       2.0 * math.pi, epsabs=1e-13)
    assert abs(spin.partition_function(m) - oracle) < 1e-10


def test_partition_capability_limits():
    with pytest.raises(CapabilityError):
        spin.partition_function(spin.ising_model(1, 21, beta=1.0))
    with pytest.raises(CapabilityError):
        spin.partition_function(spin.xy_model(1, 5, beta=1.0))


def test_partition_quadrature_convergence_error():
    m = spin.xy_model(1, 2, beta=3.0, coupling=(2.5, 0.0), field=(1.0, 0.0))
    with pytest.raises(NumericalError):
        spin.partition_function(m, quad_order=6, conv_tol=1e-14)


def test_partition_complex_field_shift():
    m = spin.ising_model(1, 1, beta=1.0, field=0.5)
    z = spin.partition_function(m, field_shift=0.25j)
    assert z == pytest.approx(2 * np.cosh(1.0 * (0.5 + 0.25j)), rel=1e-13)


# --------------------------------------------------------------------------
# total-spin characteristic function


def test_total_spin_charfn_at_zero_is_one():
    for m in (spin.ising_model(1, 2, 1.0, field=0.3),
              spin.xy_model(1, 2, 0.8, field=(0.4, 0.0)),
              spin.heisenberg_model(1, 2, 0.7, field=(0.4, 0.0, 0.0))):
        assert spin.total_spin_charfn(m, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_total_spin_charfn_single_site_at_pi():
    m = spin.ising_model(1, 1, beta=1.0, field=1.0)
    # cosh(1 + i pi)/cosh(1) = -1 exactly
    assert spin.total_spin_charfn(m, math.pi) == pytest.approx(-1.0, abs=1e-12)


def test_total_spin_charfn_two_site_at_half_pi():
    m = spin.ising_model(1, 2, beta=1.0, coupling=1.0, field=0.0)
    expected = (-2 * math.e + 2 / math.e) / (2 * math.e + 2 / math.e)
    assert spin.total_spin_charfn(m, math.pi / 2) == pytest.approx(
        expected, abs=1e-12)


def test_partition_ratio_identity_small_models():
    models = [
        spin.ising_model(1, 2, beta=0.8, coupling=1.0, field=0.4),
        spin.atomic_model(1, 2, beta=0.6, values=[-1.5, 0.0, 1.5],
                          weights=[1.0, 2.0, 1.0], coupling=0.7, field=0.2),
        spin.xy_model(1, 2, beta=0.9, coupling=(1.0, 0.4), field=(0.3, 0.0)),
        spin.heisenberg_model(1, 2, beta=0.7, coupling=(1.0, 0.2, 0.1),
                              field=(0.5, 0.0, 0.0)),
    ]
    for m in models:
        for u in (0.3, 1.2):
            lhs = spin.total_spin_charfn(m, u)
            rhs = spin.direct_total_spin_charfn(m, u)
            assert abs(lhs - rhs) < 1e-10


def test_charfn_modulus_at_most_one_on_reals():
    m = spin.xy_model(1, 2, beta=0.9, coupling=(1.0, 0.4), field=(0.3, 0.0))
    for u in np.linspace(-4, 4, 17):
        assert abs(spin.total_spin_charfn(m, u)) <= 1.0 + 1e-12


def test_spin_total_model_plugs_into_charfn_core():
    m = spin.ising_model(1, 1, beta=1.0, field=1.0)
    model = spin.spin_total_model(m)
    assert model.mean == pytest.approx(math.tanh(1.0), rel=1e-12)
    rep = cf.zero_free_radius(model, 2.5, 0.25)
    assert rep.zero_free_radius == pytest.approx(
        math.hypot(math.pi / 2, 1.0), abs=1e-6)


# --------------------------------------------------------------------------
# Lee-Yang zeros


def test_lee_yang_single_site():
    rep = spin.lee_yang_zeros(spin.ising_model(1, 1, beta=0.8, field=0.5))
    assert rep.fugacity_zeros == pytest.approx([-1.0])
    assert rep.max_abs_deviation_from_unit_circle < 1e-14
    assert rep.zero_free_field_radius == pytest.approx(
        math.hypot(math.pi / 2, 0.8 * 0.5), rel=1e-12)


def test_lee_yang_two_site_closed_form():
    beta = 1.0
    rep = spin.lee_yang_zeros(spin.ising_model(1, 2, beta=beta, field=0.3))
    expected = np.array([-math.exp(-2 * beta) - 1j * math.sqrt(1 - math.exp(-4 * beta)),
                         -math.exp(-2 * beta) + 1j * math.sqrt(1 - math.exp(-4 * beta))])
    assert np.allclose(np.sort_complex(rep.fugacity_zeros),
                       np.sort_complex(expected), atol=1e-12)
    assert rep.max_abs_deviation_from_unit_circle < 1e-12


def test_lee_yang_3x3_circle_theorem():
    rep = spin.lee_yang_zeros(spin.ising_model(2, 3, beta=0.4, field=0.2))
    assert len(rep.fugacity_zeros) == 9
    assert rep.max_abs_deviation_from_unit_circle < 1e-8


def test_lee_yang_antiferromagnetic_control():
    rep = spin.lee_yang_zeros(spin.ising_model(1, 2, beta=1.0, coupling=-1.0,
                                               field=0.2))
    assert rep.max_abs_deviation_from_unit_circle > 0.1


def test_lee_yang_requires_ising_uniform_field():
    with pytest.raises(CapabilityError):
        spin.lee_yang_zeros(spin.xy_model(1, 2, 1.0))
    m = spin.ising_model(1, 2, beta=1.0)
    m.fields = np.array([[0.1], [0.2]])
    with pytest.raises(CapabilityError):
        spin.lee_yang_zeros(m)


def test_lee_yang_radius_consistent_with_disk_scan():
    m = spin.ising_model(1, 2, beta=0.9, coupling=1.0, field=0.35)
    rep = spin.lee_yang_zeros(m)
    scan = cf.zero_free_radius(spin.spin_total_model(m), 2.5, 0.1)
    assert scan.zero_free_radius == pytest.approx(rep.zero_free_field_radius,
                                                  abs=1e-6)


# --------------------------------------------------------------------------
# Metropolis sampling


def test_metropolis_infinite_temperature_is_fair_coin():
    m = spin.ising_model(2, 4, beta=1e-6, field=0.0)
    samples = spin.metropolis_sample(m, 4000, burn_in=50, thinning=1, seed=3)
    spins = samples.configurations[:, :, 0]
    totals = spins.sum(axis=1)
    tau = spin.integrated_autocorr_time(totals)
    se = totals.std(ddof=1) * math.sqrt(tau / totals.size)
    assert abs(totals.mean()) < 3 * se
    ups = int(np.sum(spins > 0))
    downs = spins.size - ups
    assert chisquare([ups, downs]).pvalue > 0.01


def test_metropolis_single_site_mean():
    m = spin.ising_model(1, 1, beta=1.0, field=1.0)
    totals = spin.metropolis_totals(m, 60_000, burn_in=100, thinning=1, seed=7)
    tau = spin.integrated_autocorr_time(totals)
    se = totals.std(ddof=1) * math.sqrt(tau / totals.size)
    assert abs(totals.mean() - math.tanh(1.0)) < 3 * se


def test_metropolis_2x2_matches_enumeration():
    m = spin.ising_model(2, 2, beta=0.5, field=0.3)
    mean_exact, _ = spin.total_spin_moments(m)
    totals = spin.metropolis_totals(m, 80_000, burn_in=300, thinning=2, seed=5)
    tau = spin.integrated_autocorr_time(totals)
    se = totals.std(ddof=1) * math.sqrt(tau / totals.size)
    assert abs(totals.mean() - mean_exact) < 3 * se


def test_metropolis_detailed_balance_two_state():
    # single-site chain: empirical flow +1 -> -1 must balance -1 -> +1
    m = spin.ising_model(1, 1, beta=0.7, field=0.4)
    totals = spin.metropolis_totals(m, 120_000, burn_in=100, thinning=1, seed=9)
    s = np.sign(totals)
    up_down = int(np.sum((s[:-1] > 0) & (s[1:] < 0)))
    down_up = int(np.sum((s[:-1] < 0) & (s[1:] > 0)))
    flow = up_down + down_up
    se = math.sqrt(flow) if flow else 1.0
    assert abs(up_down - down_up) < 3 * se


def test_metropolis_deterministic_given_seed():
    m = spin.xy_model(1, 4, beta=0.5, field=(0.2, 0.0))
    a = spin.metropolis_totals(m, 300, burn_in=20, thinning=1, seed=42)
    b = spin.metropolis_totals(m, 300, burn_in=20, thinning=1, seed=42)
    assert np.array_equal(a, b)


def test_metropolis_sphere_unit_norm():
    m = spin.heisenberg_model(1, 3, beta=0.5, field=(0.3, 0.0, 0.0))
    ss = spin.metropolis_sample(m, 40, burn_in=20, thinning=1, seed=4)
    norms = np.linalg.norm(ss.configurations, axis=2)
    assert np.max(np.abs(norms - 1.0)) < 1e-12


def test_metropolis_requires_real_field():
    m = spin.ising_model(1, 2, beta=1.0, field=0.1 + 0.2j)
    with pytest.raises(DomainError):
        spin.metropolis_totals(m, 100, seed=0)


# --------------------------------------------------------------------------
# correlation checks


def test_correlations_product_measure_near_zero():
    m = spin.ising_model(1, 6, beta=1e-6, field=0.0)
    samples = spin.metropolis_sample(m, 6000, burn_in=50, thinning=1, seed=8)
    rep = spin.spin_correlation_check(samples)
    assert rep.consistent_with_nonnegative
    off_diag = rep.covariances[~np.eye(6, dtype=bool)]
    assert np.max(np.abs(off_diag)) < 0.1


def test_correlations_two_site_ising():
    m = spin.ising_model(1, 2, beta=1.0, coupling=1.0, field=0.0)
    samples = spin.metropolis_sample(m, 40_000, burn_in=200, thinning=2, seed=2)
    rep = spin.spin_correlation_check(samples)
    cov01 = rep.covariances[0, 1]
    # Cov(s1, s2) = tanh(beta) for the field-free two-site chain
    prod = (samples.configurations[:, 0, 0] - samples.configurations[:, 0, 0].mean()) \
        * (samples.configurations[:, 1, 0] - samples.configurations[:, 1, 0].mean())
    tau = spin.integrated_autocorr_time(prod)
    se = prod.std(ddof=1) * math.sqrt(tau / prod.size)
    assert abs(cov01 - math.tanh(1.0)) < 3 * se


def test_correlations_xy_nonnegative_consistency():
    m = spin.xy_model(2, 2, beta=0.8, coupling=(1.0, 0.5), field=(0.2, 0.0))
    samples = spin.metropolis_sample(m, 20_000, burn_in=200, thinning=2, seed=6)
    rep = spin.spin_correlation_check(samples)
    assert rep.consistent_with_nonnegative


# --------------------------------------------------------------------------
# conditional variance floor


def test_variance_floor_ising_closed_form():
    # single site, beta=2, h=1, no edges: tilt bound M = 2
    m = spin.ising_model(1, 1, beta=2.0, field=1.0)
    rep = spin.conditional_variance_floor(m)
    assert rep.tilt_bound == pytest.approx(2.0)
    assert rep.value == pytest.approx(1.0 - math.tanh(2.0) ** 2, rel=1e-9)
    assert rep.degenerate_support  # |sigma^1| = 1 a.s. for Ising


def test_variance_floor_xy():
    m = spin.xy_model(2, 2, beta=0.5, coupling=(1.0, 0.3), field=(0.2, 0.0))
    rep = spin.conditional_variance_floor(m)
    untilted = spin._tilted_variance_batch(
        *spin.circle_measure().nodes(64), np.zeros((1, 2)))[0]
    assert untilted == pytest.approx(0.5, abs=1e-12)
    assert 0.0 < rep.value <= 0.5
    assert not rep.degenerate_support


def test_variance_floor_no_tilt_equals_single_spin_variance():
    assert spin.conditional_variance_floor(
        spin.heisenberg_model(1, 1, beta=1.0)).value == pytest.approx(1 / 3, rel=1e-9)
    assert spin.conditional_variance_floor(
        spin.xy_model(1, 1, beta=1.0)).value == pytest.approx(0.5, rel=1e-9)
    assert spin.conditional_variance_floor(
        spin.ising_model(1, 1, beta=1.0)).value == pytest.approx(1.0, rel=1e-12)


def test_variance_floor_nonnegative_model_classes():
    models = [
        spin.xy_model(1, 2, beta=0.7, coupling=(1.0, 0.5), field=(0.3, 0.0)),
        spin.heisenberg_model(1, 2, beta=0.5, coupling=(1.0, 0.2, 0.1),
                              field=(0.2, 0.0, 0.0)),
    ]
    for m in models:
        rep = spin.conditional_variance_floor(m, grid_points=17)
        assert rep.value > 0.0


# --------------------------------------------------------------------------
# diagnostics


def test_autocorr_time_white_noise_near_one():
    rng = np.random.default_rng(0)
    tau = spin.integrated_autocorr_time(rng.standard_normal(50_000))
    assert tau == pytest.approx(1.0, abs=0.1)


def test_autocorr_time_ar1():
    # AR(1) with coefficient rho has tau = (1+rho)/(1-rho)
    rng = np.random.default_rng(1)
    rho = 0.8
    n = 400_000
    x = np.empty(n)
    x[0] = 0.0
    eps = rng.standard_normal(n)
    for i in range(1, n):
        x[i] = rho * x[i - 1] + eps[i]
    tau = spin.integrated_autocorr_time(x)
    assert tau == pytest.approx((1 + rho) / (1 - rho), rel=0.15)


def test_effective_sample_size_definition():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(10_000)
    assert spin.effective_sample_size(x) == pytest.approx(
        x.size / spin.integrated_autocorr_time(x))
