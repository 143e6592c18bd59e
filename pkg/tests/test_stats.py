"""Density estimation, power-law fits, spread/volatility, conditioning."""

import math

import numpy as np
import pytest
import scipy.stats

from loblab.errors import (EmptyBins, EmptySample, InsufficientHistory,
                           InsufficientRange, MissingContext, MissingQuote)
from loblab.market import Phase
from loblab.relprice import RelPriceSample
from loblab.stats import (estimate_pdf, fit_power_law, group_by_context,
                          ks_critical, mid_price, spread, two_sample_ks,
                          volatility)


def pareto_icdf_oracle(u, a, b, alpha):
    """Closed-form inverse CDF for density ~ x^-(1+alpha) on [a, b]."""
    fa, fb = a ** -alpha, b ** -alpha
    return (fa - u * (fa - fb)) ** (-1.0 / alpha)


class TestEstimatePdf:
    def test_uniform_density_is_flat(self):
        rng = np.random.default_rng(1)
        xs = rng.uniform(0.0, 0.2, 400_000)
        pdf = estimate_pdf(xs)
        interior = (pdf.centers > 0.02) & (pdf.centers < 0.18)
        # analytic density of U(0, 0.2) is 5 per unit x
        assert np.allclose(pdf.density[interior], 5.0, rtol=0.10)
        assert pdf.integral() == pytest.approx(1.0, abs=1e-9)

    def test_all_zero_samples_form_unit_atom(self):
        pdf = estimate_pdf([0.0] * 50)
        assert pdf.atom_mass == 1.0
        assert pdf.integral() == pytest.approx(1.0, abs=1e-9)

    def test_unit_integral_on_random_mixtures(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = rng.integers(1, 2000)
            xs = rng.normal(0, 0.05, n)
            xs[rng.random(n) < 0.3] = 0.0
            pdf = estimate_pdf(xs)
            assert pdf.integral() == pytest.approx(1.0, abs=1e-9)
            assert pdf.atom_mass == np.mean(xs == 0.0)

    def test_empty_sample(self):
        with pytest.raises(EmptySample):
            estimate_pdf([])

    def test_zero_sits_at_a_bin_center(self):
        pdf = estimate_pdf([0.0, 0.05, -0.05])
        idx = np.searchsorted(pdf.edges, 0.0) - 1
        lo, hi = pdf.edges[idx], pdf.edges[idx + 1]
        assert lo == pytest.approx(-hi, abs=1e-15)

    def test_explicit_edges_must_cover(self):
        with pytest.raises(ValueError):
            estimate_pdf([0.5], edges=np.array([-0.1, 0.0, 0.1]))


class TestFitPowerLaw:
    def test_recovers_known_exponent(self):
        rng = np.random.default_rng(3)
        alpha = 1.5
        xs = pareto_icdf_oracle(rng.random(200_000), 1e-3, 1e-1, alpha)
        fit = fit_power_law(xs, 2e-3, 5e-2)
        assert abs(fit.alpha - alpha) < max(0.05, 2 * fit.stderr)
        assert fit.r2 > 0.99

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
    def test_recovery_across_exponents(self, alpha):
        rng = np.random.default_rng(int(alpha * 10))
        xs = pareto_icdf_oracle(rng.random(150_000), 1e-3, 1e-1, alpha)
        fit = fit_power_law(xs, 1e-3, 1e-1)
        assert abs(fit.alpha - alpha) < 2 * max(fit.stderr, 0.02)

    def test_negative_exponent(self):
        rng = np.random.default_rng(9)
        xs = pareto_icdf_oracle(rng.random(150_000), 1e-3, 1e-1, -0.31)
        fit = fit_power_law(xs, 2e-3, 5e-2)
        assert abs(fit.alpha + 0.31) < 0.05

    def test_insufficient_range(self):
        xs = np.linspace(0.01, 0.02, 100)
        with pytest.raises(InsufficientRange):
            fit_power_law(xs, 0.0149, 0.0151)  # under five log bins

    def test_empty_bins(self):
        with pytest.raises(EmptyBins):
            fit_power_law(np.array([0.5, 0.6]), 1e-3, 1e-2)

    def test_invalid_range(self):
        with pytest.raises(InsufficientRange):
            fit_power_law(np.array([0.01]), 0.0, 0.01)

    def test_accepts_pdf_estimate(self):
        rng = np.random.default_rng(11)
        xs = pareto_icdf_oracle(rng.random(400_000), 2e-3, 1e-1, 1.5)
        pdf = estimate_pdf(xs, width=0.001)
        fit = fit_power_law(pdf, 4e-3, 5e-2)
        assert abs(fit.alpha - 1.5) < 0.2


class TestSpread:
    def test_log_price_difference(self):
        assert spread(1000, 1002) == pytest.approx(math.log(10.02 / 10.00),
                                                   rel=1e-12)

    def test_degenerate_touch_is_zero(self):
        assert spread(1000, 1000) == 0.0

    def test_one_sided_book(self):
        with pytest.raises(MissingQuote):
            spread(None, 1002)
        with pytest.raises(MissingQuote):
            spread(1000, None)

    def test_mid_price_is_log_mean(self):
        assert mid_price(1000, 1002) == pytest.approx(
            (math.log(10.0) + math.log(10.02)) / 2, rel=1e-12)


class TestVolatility:
    def test_constant_mid_gives_zero(self):
        vols = volatility([2.3] * 80, window=50)
        assert np.allclose(vols, 0.0)

    def test_alternating_mid_gives_two_delta(self):
        delta = 1e-3
        mids = [2.3 + delta * (1 if i % 2 == 0 else -1) for i in range(120)]
        vols = volatility(mids, window=50)
        assert np.allclose(vols, 2 * delta)

    def test_insufficient_history(self):
        with pytest.raises(InsufficientHistory):
            volatility([2.3] * 50, window=50)

    def test_matches_windowed_mean_oracle(self):
        rng = np.random.default_rng(6)
        mids = np.cumsum(rng.normal(0, 1e-4, 200)) + 2.3
        window = 50
        vols = volatility(mids, window=window)
        diffs = np.abs(np.diff(mids))
        for k in (0, 3, len(vols) - 1):
            expect = math.fsum(diffs[k:k + window]) / window
            assert vols[k] == pytest.approx(expect, rel=1e-12)


def ctx_sample(x, value, key="spread", ts=0):
    return RelPriceSample(x, 1, Phase.CDA, ts,
                          spread_before=value if key == "spread" else None,
                          vol_before=value if key == "volatility" else None)


class TestGrouping:
    def test_exact_division(self):
        samples = [ctx_sample(float(i), float(i)) for i in range(8)]
        groups = group_by_context(samples, "spread")
        assert [len(g) for g in groups] == [2, 2, 2, 2]

    def test_remainder_goes_to_earliest_groups(self):
        samples = [ctx_sample(float(i), float(i)) for i in range(10)]
        groups = group_by_context(samples, "spread")
        assert [len(g) for g in groups] == [3, 3, 2, 2]

    def test_partition_and_order(self):
        rng = np.random.default_rng(8)
        samples = [ctx_sample(float(i), float(v))
                   for i, v in enumerate(rng.random(37))]
        groups = group_by_context(samples, "spread")
        flat = [s for g in groups for s in g]
        assert sorted(s.x for s in flat) == sorted(s.x for s in samples)
        values = [s.spread_before for s in flat]
        assert values == sorted(values)

    def test_stable_for_equal_context(self):
        samples = [ctx_sample(float(i), 1.0, ts=i) for i in range(12)]
        groups = group_by_context(samples, "spread")
        assert [s.ts for g in groups for s in g] == list(range(12))

    def test_missing_context(self):
        with pytest.raises(MissingContext):
            group_by_context([ctx_sample(0.0, None)], "spread")

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            group_by_context([ctx_sample(0.0, 1.0)], "depth")

    def test_independent_context_groups_agree(self):
        rng = np.random.default_rng(10)
        n = 40_000
        xs = rng.normal(0, 0.01, n)
        ctx = rng.random(n)
        samples = [ctx_sample(float(x), float(v), "volatility", ts=i)
                   for i, (x, v) in enumerate(zip(xs, ctx))]
        groups = group_by_context(samples, "volatility")
        for i in range(4):
            for j in range(i + 1, 4):
                a = [s.x for s in groups[i]]
                b = [s.x for s in groups[j]]
                assert two_sample_ks(a, b) < ks_critical(len(a), len(b))


class TestTwoSampleKs:
    def test_identical_samples_give_zero(self):
        xs = np.arange(100, dtype=float)
        assert two_sample_ks(xs, xs.copy()) == 0.0

    def test_separated_normals(self):
        rng = np.random.default_rng(12)
        a = rng.normal(0, 1, 10_000)
        b = rng.normal(3, 1, 10_000)
        stat = two_sample_ks(a, b)
        # sup |Phi(x) - Phi(x - 3)| = 2 Phi(1.5) - 1 ~ 0.866
        assert stat > 0.8

    def test_bounded(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            a = rng.normal(0, 1, rng.integers(1, 500))
            b = rng.normal(0.2, 1, rng.integers(1, 500))
            assert 0.0 <= two_sample_ks(a, b) <= 1.0

    def test_matches_scipy(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            a = rng.normal(0, 1, rng.integers(5, 400))
            b = rng.normal(rng.uniform(-1, 1), 1, rng.integers(5, 400))
            ours = two_sample_ks(a, b)
            theirs = scipy.stats.ks_2samp(a, b).statistic
            assert ours == pytest.approx(theirs, abs=1e-12)

    def test_empty_raises(self):
        with pytest.raises(EmptySample):
            two_sample_ks([], [1.0])

    def test_critical_value_formula(self):
        # c(0.01) = sqrt(-ln(0.005) / 2) ~ 1.6276
        got = ks_critical(1000, 1000, alpha=0.01)
        assert got == pytest.approx(1.6276 * math.sqrt(2 / 1000), rel=1e-3)
