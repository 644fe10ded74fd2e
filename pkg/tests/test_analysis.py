import math

import numpy as np
import pytest
from scipy.special import betainc

from rcplab import analysis, rngstream


def test_c_alpha_values():
    assert analysis.c_alpha(0.75) == pytest.approx(0.9003163161571061, rel=1e-12)
    assert analysis.c_alpha(0.6) == pytest.approx(0.7568267286406569, rel=1e-9)


def test_c_alpha_limit_near_one():
    assert analysis.c_alpha(1 - 1e-9) == pytest.approx(1.0, abs=1e-7)


def test_c_alpha_reflection_identity():
    for a in np.linspace(0.05, 0.95, 19):
        refl = math.sin(math.pi * a) / (math.pi * (1 - a))
        assert abs(analysis.c_alpha(a) - refl) < 1e-10


def test_c_alpha_domain():
    for a in (0.0, 1.0, -0.2, 1.4):
        with pytest.raises(ValueError):
            analysis.c_alpha(a)


def test_dl_cdf_endpoints():
    assert analysis.dl_cdf(0.75, 0.0) == 0.0
    big = analysis.dl_cdf(0.75, 1e9)
    assert 0.999 < big <= 1.0 + 1e-9


def test_dl_cdf_value_against_series_oracle():
    # alternating series for int_0^1 y^(-3/4)/(1+y) dy: sum (-1)^k/(k+1/4);
    # averaging consecutive partial sums knocks the truncation error to O(1/N^2)
    k = np.arange(0, 200000)
    partial = np.cumsum((-1.0) ** k / (k + 0.25))
    series = float((partial[-1] + partial[-2]) / 2.0)
    want = analysis.d_alpha(0.75) * series
    assert analysis.dl_cdf(0.75, 1.0) == pytest.approx(want, abs=1e-7)
    assert analysis.dl_cdf(0.75, 1.0) == pytest.approx(0.780, abs=1e-3)


def test_dl_cdf_matches_incomplete_beta():
    for a in (0.6, 0.75, 0.9):
        for x in (0.01, 0.3, 1.0, 4.0, 50.0):
            ib = betainc(1 - a, a, x / (1 + x))
            assert analysis.dl_cdf(a, x) == pytest.approx(float(ib), rel=1e-8)


def test_dl_density_normalizes_and_increment_constant_fails():
    assert analysis.dl_mass(0.75) == pytest.approx(1.0, abs=1e-8)
    mass = analysis.dl_mass(0.75, analysis.c_alpha(0.75))
    assert mass == pytest.approx(4.0, abs=1e-6)  # 1/(1-alpha)


def test_dl_quantile_roundtrip():
    for a in (0.6, 0.75):
        for q in (0.1, 0.5, 0.9):
            x = float(analysis.dl_quantile(a, q))
            assert analysis.dl_cdf(a, x) == pytest.approx(q, abs=1e-9)


def test_thresholds_exact_values():
    rep = analysis.thresholds(0.75)
    assert rep.v_minus == 3.6
    assert rep.v_plus == 4.0
    assert rep.gap == pytest.approx(0.4, abs=1e-12)
    assert rep.indeterminate_sizes == (4,)

    rep = analysis.thresholds(0.6)
    assert rep.v_minus == pytest.approx(2.0 + 0.2 / (0.4 * 1.4), rel=1e-12)
    assert rep.v_plus == 2.5
    assert rep.indeterminate_sizes == ()


def test_thresholds_gap_below_one_on_grid():
    for a in np.linspace(0.5, 1.0, 1002)[1:-1]:
        rep = analysis.thresholds(a)
        assert 0.0 < rep.gap < 1.0
        assert rep.v_minus < rep.v_plus


def test_thresholds_domain():
    for a in (0.5, 1.0, 0.3):
        with pytest.raises(ValueError):
            analysis.thresholds(a)


def test_appendix_g_normalization_by_quadrature():
    for a in (0.6, 0.75, 0.9):
        val = analysis.d_alpha(a) * analysis.appendix_g_infinity(a)
        assert abs(val - 1.0) <= 1e-8


def test_appendix_g_quadrature_matches_beta_route():
    for a in (0.6, 0.75):
        for x in (0.05, 0.7, 3.0, 1e4):
            assert analysis.appendix_g(a, x) == pytest.approx(
                float(analysis._g_beta(a, x)), rel=1e-8)


def test_expected_log_max_negative_below_threshold():
    assert analysis.extinction_size_bound(0.75) == pytest.approx(2.6, rel=1e-12)
    assert analysis.expected_log_max(0.75, 2) < 0


def test_expected_log_max_against_mc_oracle():
    rng = rngstream.stream(2718, 0)
    samples = np.log(analysis.sample_dl_max(0.75, 2, 10 ** 6, rng))
    mc = samples.mean()
    se = samples.std(ddof=1) / 1000.0
    assert abs(analysis.expected_log_max(0.75, 2) - mc) <= 3 * se


def test_expected_log_max_increasing_in_m():
    vals = [analysis.expected_log_max(0.75, m) for m in range(1, 11)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_sign_agreement_below_threshold():
    for a in np.arange(0.55, 0.951, 0.05):
        bound = analysis.extinction_size_bound(float(a))
        for m in range(1, math.ceil(bound)):
            if m < bound:
                assert analysis.expected_log_max(float(a), m) < 0, (a, m)


def test_G_negativity():
    grid = np.exp(np.linspace(math.log(1 + 1e-9), math.log(1e6), 61))
    rep = analysis.appendix_G_negativity(0.75, grid)
    assert rep.g_at_one == 0.0
    assert rep.all_negative
    assert rep.max_value < 0


def test_G_derivative_negative_by_central_difference():
    a = 0.75
    beta = 1 - a
    expo = beta * (beta + 1)

    def G(x):
        return analysis.appendix_g(a, x) - x ** expo * analysis.appendix_g(a, 1 / x)

    for x in np.exp(np.linspace(0.01, math.log(1e6), 25)):
        h = x * 1e-4
        assert (G(x + h) - G(x - h)) / (2 * h) < 0


def test_phi_at_zero_is_one():
    for a, m in ((0.6, 1), (0.75, 2), (0.9, 4)):
        assert analysis.phi(a, m, 0.0) == pytest.approx(1.0, abs=1e-8)


def test_phi_domain():
    with pytest.raises(ValueError):
        analysis.phi(0.75, 2, 0.75)
    with pytest.raises(ValueError):
        analysis.phi(0.75, 2, -0.25)


def test_phi_grows_large_near_alpha():
    # the theta-moment blows up at the right edge of its domain
    assert analysis.phi(0.75, 2, 0.74) > 3.0


def test_find_theta_contraction():
    th = analysis.find_theta(0.75, 2)
    assert th is not None and 0 < th < 0.75
    assert analysis.phi(0.75, 2, th) < 1.0


def test_find_theta_none_above_threshold():
    # M = 3 exceeds the appendix bound 2.6 at alpha = 0.75: E[log Y] > 0
    assert analysis.find_theta(0.75, 3) is None


def test_build_dominating_law_atoms():
    law = analysis.build_dominating_law(0.75, 2, require_cond2=False)
    assert law.probs.sum() == pytest.approx(1.0, abs=1e-10)
    assert law.grid_n == 20
    # a_j = j/N on the body, N e^(j-N^2) beyond
    assert law.atoms[0] == pytest.approx(1 / 20)
    assert law.atoms[law.grid_n ** 2 - 1] == pytest.approx(20.0)
    assert law.atoms[law.grid_n ** 2] == pytest.approx(20.0 * math.e)
    # geometric tail ratio
    tail = law.probs[law.grid_n ** 2 + 1:]
    assert np.allclose(tail[1:] / tail[:-1], law.tail_ratio)
    assert law.raw[-1] >= 1e-15  # truncation at the stated atom mass


def test_build_dominating_law_cond2_fails_at_small_grid():
    with pytest.raises(analysis.DominationConstructionError):
        analysis.build_dominating_law(0.75, 2, log_n=3, rho=1e-4)


def test_cond2_report_verifies_at_large_grid():
    rep = analysis.cond2_report(0.75, 2, theta=0.08, eta=0.005, log_n=9, rho=1e-10)
    assert rep["ok"]
    assert rep["bracket_bound"] < 1.0
    assert rep["theta_moment_bound"] < 1.0 / rep["c_norm"]  # E < mu/C with mu<1


def test_interval_index():
    law = analysis.build_dominating_law(0.75, 2, require_cond2=False)
    assert law.interval_index(0.01) == 0      # I_1 = (0, 1/N]
    assert law.interval_index(1 / 20) == 0
    assert law.interval_index(1 / 20 + 1e-12) == 1


def test_ks_statistic_self_consistency():
    rng = rngstream.stream(55, 0)
    x = analysis.sample_dl(0.75, 10 ** 4, rng)
    ks = analysis.ks_statistic(x, lambda v: analysis._g_beta(0.75, v) *
                               analysis.d_alpha(0.75))
    assert ks < 1.63 / 100.0
    with pytest.raises(ValueError):
        analysis.ks_statistic([], lambda v: v)


def test_ks_statistic_scalar_cdf_fallback():
    x = np.linspace(0.1, 0.9, 100)
    ks_vec = analysis.ks_statistic(x, lambda v: np.clip(v, 0, 1))
    ks_scalar = analysis.ks_statistic(x, lambda v: min(max(float(v), 0.0), 1.0))
    assert ks_vec == ks_scalar


def test_wilson_ci():
    lo, hi = analysis.wilson_ci(0, 10, 0.95)
    assert lo == 0.0
    # closed form at zero successes: (z^2/n) / (1 + z^2/n)
    from scipy.stats import norm
    z2 = float(norm.ppf(0.975)) ** 2
    assert hi == pytest.approx((z2 / 10) / (1 + z2 / 10), rel=1e-12)
    assert hi == pytest.approx(0.278, abs=5e-4)
    lo5, hi5 = analysis.wilson_ci(5, 10, 0.95)
    assert lo5 + hi5 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        analysis.wilson_ci(11, 10, 0.95)
    with pytest.raises(ValueError):
        analysis.wilson_ci(0, 0, 0.95)
