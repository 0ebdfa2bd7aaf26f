import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr

from marcinclt import charfn as cf
from marcinclt.errors import ArgumentError, DomainError


def builtin_models():
    return [
        cf.gaussian_model(),
        cf.rademacher_model(),
        cf.binomial_model(12, 0.3, standardized=True),
        cf.poisson_centered_model(9.0),
        cf.iid_sum_model(cf.rademacher_model(), 16),
    ]


# --------------------------------------------------------------------------
# evaluation


def test_eval_normalization_at_zero():
    for m in builtin_models():
        assert cf.eval_charfn(m, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_rademacher_charfn_is_cosine():
    m = cf.rademacher_model()
    for t in np.linspace(-3, 3, 13):
        assert m.charfn(t) == pytest.approx(math.cos(t), abs=1e-14)


def test_gaussian_mgf_at_two():
    assert cf.eval_charfn(cf.gaussian_model(), 2.0) == pytest.approx(
        math.e ** 2, rel=1e-14)


def test_eval_outside_validity_raises():
    m = cf.CharFnModel(np.cosh, 1.5, 0.0, 1.0, "truncated")
    with pytest.raises(DomainError):
        cf.eval_charfn(m, 2.0)


def test_hermitian_symmetry_on_random_points():
    rng = np.random.default_rng(7)
    for m in builtin_models():
        r = min(m.validity_radius, 4.0)
        u = r * (rng.random(100) * np.exp(2j * math.pi * rng.random(100)))
        lhs = m.evaluator(np.conj(u))
        rhs = np.conj(m.evaluator(u))
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_charfn_bounded_by_one_on_real_line():
    for m in builtin_models():
        t = np.linspace(-8, 8, 400)
        assert np.max(np.abs(m.evaluator(1j * t))) <= 1.0 + 1e-12


# --------------------------------------------------------------------------
# zero-free disk scans


def test_gaussian_never_vanishes():
    rep = cf.zero_free_radius(cf.gaussian_model(), 5.0, 0.25)
    assert rep.zero_free_radius == pytest.approx(5.0)
    assert rep.status == "certified"
    assert rep.radius_scanned == 5.0
    assert all(w == 0 for _, w in rep.winding_numbers)


def test_rademacher_zero_at_half_pi():
    rep = cf.zero_free_radius(cf.rademacher_model(), 3.0, 0.05)
    assert rep.zero_free_radius == pytest.approx(math.pi / 2, abs=1e-6)
    assert rep.zero_free_radius <= rep.radius_scanned


def test_single_site_ising_shifted_cosh_zero():
    # cosh(beta h + u) / cosh(beta h) with beta = h = 1: zeros at
    # i(pi/2 + k pi) - 1, nearest at distance sqrt((pi/2)^2 + 1)
    m = cf.CharFnModel(lambda u: np.cosh(1.0 + u) / math.cosh(1.0),
                       np.inf, 0.0, 1.0, "1-site ising mgf")
    rep = cf.zero_free_radius(m, 3.0, 0.1)
    assert rep.zero_free_radius == pytest.approx(
        math.hypot(math.pi / 2, 1.0), abs=1e-6)


def test_winding_number_counts_enclosed_zeros():
    # cos has two real zeros +-pi/2 inside radius 2
    rep = cf.zero_free_radius(cf.rademacher_model(), 2.0, 2.0)
    assert rep.winding_numbers[-1][0] == pytest.approx(2.0)
    assert rep.winding_numbers[-1][1] == 2


def test_iid_sum_zero_free_radius_independent_of_n():
    # cos(u)^n has the same zero set as cos(u) in the per-summand variable
    for n in (1, 2, 4, 8):
        m = cf.CharFnModel(lambda u, n=n: np.cosh(u) ** n, np.inf,
                           0.0, math.sqrt(n), f"sum of {n}")
        rep = cf.zero_free_radius(m, 2.5, 0.1)
        assert rep.zero_free_radius == pytest.approx(math.pi / 2, abs=1e-6)


def test_scan_rejects_r_beyond_validity():
    m = cf.CharFnModel(np.cosh, 1.0, 0.0, 1.0, "clipped")
    with pytest.raises(DomainError):
        cf.zero_free_radius(m, 2.0, 0.1)


# --------------------------------------------------------------------------
# KS bound


def test_ks_bound_gaussian_r10():
    rep = cf.ks_bound(cf.gaussian_model(), 10.0, 1.0, certified_radius=10.0)
    assert rep.sigma_term == 0.0
    assert rep.circle_maximum == pytest.approx(math.exp(50.0), rel=1e-9)
    assert rep.bracket_term == pytest.approx((1 + math.log(50.0)) / 10.0,
                                             rel=1e-12)
    assert rep.bound == pytest.approx(rep.bracket_term)
    assert rep.bound >= 0


def test_ks_bound_degenerate_is_vacuous_not_error():
    m = cf.CharFnModel(lambda u: np.ones_like(u), np.inf, 0.0, 0.0, "constant")
    rep = cf.ks_bound(m, 1.0, 1.0, certified_radius=1.0)
    assert rep.degenerate
    assert rep.sigma_term == 2.0
    assert rep.bound >= 2.0


def test_ks_bound_rademacher_sum_family():
    # n = 100 Rademachers standardized; r = 0.5 sqrt(100) = 5
    n = 100
    m = cf.iid_sum_model(cf.rademacher_model(), n)
    rep = cf.ks_bound(m, 5.0, 1.0)
    expected_bracket = (1 + math.log(n * math.log(math.cosh(0.5)))) / 5.0
    assert rep.bracket_term == pytest.approx(expected_bracket, rel=1e-9)
    # exact KS of the standardized binomial via the discrete overload
    k = np.arange(n + 1)
    logpmf = (math.lgamma(n + 1) - np.array([math.lgamma(j + 1)
              + math.lgamma(n - j + 1) for j in k]) - n * math.log(2.0))
    pmf = np.exp(logpmf)
    atoms = (2.0 * k - n) / math.sqrt(n)
    exact_ks = cf.ks_discrete_to_normal(atoms, pmf)
    a_cal = exact_ks / rep.bracket_term
    assert exact_ks <= rep.bound  # comfortably dominated already at A = 1
    assert exact_ks <= rep.sigma_term + a_cal * rep.bracket_term + 1e-15


def test_ks_bound_requires_certified_radius():
    with pytest.raises(DomainError):
        cf.ks_bound(cf.rademacher_model(), 2.0, 1.0)  # zero at pi/2 < 2


def test_bracket_term_at_least_inverse_radius():
    for r in (0.5, 1.0, 3.0):
        rep = cf.ks_bound(cf.rademacher_model(), r, 1.0, certified_radius=r)
        assert rep.bracket_term >= 1.0 / r - 1e-15


def test_gaussian_bracket_nonincreasing_beyond_sqrt2():
    vals = [cf.ks_bound(cf.gaussian_model(), float(r), 1.0,
                        certified_radius=float(r)).bracket_term
            for r in range(2, 11)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


# --------------------------------------------------------------------------
# empirical KS


def test_empirical_ks_single_point():
    assert cf.empirical_ks([0.0]) == pytest.approx(0.5)


def test_empirical_ks_million_gaussian_draws():
    # DKW: P(KS > 0.002) <= 2 exp(-2 * 1e6 * 0.002^2) ~ 7e-4
    rng = np.random.default_rng(20250810)
    assert cf.empirical_ks(rng.standard_normal(1_000_000)) <= 0.002


def test_exact_binomial4_ks_matches_hand_computation():
    atoms = np.arange(-2.0, 3.0)
    probs = np.array([1, 4, 6, 4, 1]) / 16.0
    # sup attained from the left at 0: |11/16 - Phi(0)| = 3/16
    assert cf.ks_discrete_to_normal(atoms, probs) == pytest.approx(
        3.0 / 16.0, abs=1e-12)


def test_exact_normal_cdf_against_itself_is_zero():
    x = np.linspace(-6, 6, 2001)
    assert cf.ks_cdf_to_normal(x, ndtr(x)) <= 1e-14


def test_empirical_ks_empty_raises():
    with pytest.raises(ArgumentError):
        cf.empirical_ks([])


def test_empirical_ks_studentized_variant():
    rng = np.random.default_rng(5)
    x = 3.0 * rng.standard_normal(200_000) + 1.0
    assert cf.empirical_ks(x, studentize=True) < 0.005
    # raw-centered variant keeps the scale mismatch: sup|Phi(x/3) - Phi(x)|
    assert cf.empirical_ks(x, studentize=False) == pytest.approx(0.2433, abs=0.01)


# --------------------------------------------------------------------------
# smoothing bound


def test_smoothing_gaussian_is_inverse_t():
    for t_max in (1.0, 2.0, 7.5):
        val = cf.smoothing_ks_bound(cf.gaussian_model(), t_max)
        assert val == pytest.approx(1.0 / t_max, abs=1e-12)


def test_smoothing_binomial30_matches_quadrature_oracle():
    # frozen oracle: simpson quadrature at 1e5+1 points, computed up front
    oracle = 0.3438476255589888
    m = cf.binomial_model(30, 0.5, standardized=True)
    val = cf.smoothing_ks_bound(m, 3.0, quad_points=100_001)
    assert val == pytest.approx(oracle, rel=1e-10)
    # scaled comparison with the brute-force KS distance (ratio frozen at
    # build time; the smoothing quantity is ~4.76x the true KS here)
    k = np.arange(31)
    pmf = np.array([math.comb(30, j) for j in k]) / 2.0 ** 30
    ks = cf.ks_discrete_to_normal((k - 15) / math.sqrt(7.5), pmf)
    assert val / ks == pytest.approx(4.760307883284588, rel=0.10)


def test_smoothing_poisson_decreasing_in_lambda():
    v25 = cf.smoothing_ks_bound(cf.poisson_centered_model(25.0), 4.0, 40001)
    v100 = cf.smoothing_ks_bound(cf.poisson_centered_model(100.0), 4.0, 40001)
    assert 0.0 < v100 < v25


def test_smoothing_requires_centered_unit_variance():
    with pytest.raises(DomainError):
        cf.smoothing_ks_bound(cf.binomial_model(10, 0.5, standardized=False),
                              2.0)


def test_smoothing_against_independent_quad_oracle():
    # adaptive quadrature oracle, independent of the Simpson rule
    m = cf.poisson_centered_model(25.0)

    def integrand(t):
        if t == 0.0:
            return 0.0
        return abs(complex(m.evaluator(np.asarray(1j * t)))
                   - math.exp(-t * t / 2.0)) / abs(t)

    val, _ = quad(integrand, -4.0, 4.0, limit=400)
    assert cf.smoothing_ks_bound(m, 4.0, 40001) == pytest.approx(
        val + 0.25, rel=1e-6)


# --------------------------------------------------------------------------
# rate fitting


def test_rate_fit_exact_power_law():
    reports = []
    for n in (10, 100, 1000):
        reports.append((n, cf.KSBoundReport(
            r=1.0, sigma_term=0.0, bracket_term=1.0, constant_A=1.0,
            bound=2.0 / math.sqrt(n), empirical_ks=n ** -0.5)))
    fit = cf.clt_rate_fit(reports)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.bound_slope == pytest.approx(-0.5, abs=1e-12)


def test_rate_fit_needs_three_distinct_scales():
    rep = cf.KSBoundReport(1.0, 0.0, 1.0, 1.0, 1.0, empirical_ks=0.1)
    with pytest.raises(ArgumentError):
        cf.clt_rate_fit([(10, rep), (10, rep), (10, rep)])
    with pytest.raises(ArgumentError):
        cf.clt_rate_fit([(10, rep), (20, rep)])


def test_report_json_field_names():
    rep = cf.ks_bound(cf.gaussian_model(), 2.0, 1.0, certified_radius=2.0,
                      empirical=0.01)
    d = rep.to_json_dict()
    assert set(d) >= {"r", "sigma_term", "bracket_term", "constant_A",
                      "bound", "empirical_ks"}
    scan = cf.zero_free_radius(cf.gaussian_model(), 1.0, 0.5)
    sd = scan.to_json_dict()
    assert set(sd) >= {"radius_scanned", "zero_free_radius", "min_modulus",
                       "argmin_point", "winding_numbers"}
