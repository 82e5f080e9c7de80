import math

import numpy as np
import pytest

from rpmatch.bounds import (
    BoundReport,
    HalfWelfareResult,
    InvalidCError,
    InvalidMError,
    InvalidNError,
    TooFewSamplesError,
    average_ratio_bound,
    default_tail_exponent,
    gauss_mass_in_range,
    gauss_mass_lower_bound,
    half_welfare_check,
    irwin_hall_cdf,
    low_welfare_fraction_bound,
    row_sum_cdf,
    smoothed_ratio_bound,
    welfare_tail_bound,
)
from rpmatch.core import validate_unit_range
from rpmatch.generate import PerturbationSpec, sample_uniform_profile
from rpmatch.harness import substream


class TestIrwinHall:
    def test_support_endpoints(self):
        for m in (1, 2, 5, 30, 64, 100):
            assert irwin_hall_cdf(0.0, m) == 0.0
            assert irwin_hall_cdf(-3.0, m) == 0.0
            assert irwin_hall_cdf(float(m), m) == 1.0
            assert irwin_hall_cdf(m + 0.5, m) == 1.0

    def test_symmetry_about_midpoint(self):
        for m in range(1, 31):
            assert irwin_hall_cdf(m / 2, m) == pytest.approx(0.5, abs=1e-10)
            for x in np.linspace(0.05, m - 0.05, 11):
                left = irwin_hall_cdf(float(x), m)
                right = irwin_hall_cdf(m - float(x), m)
                assert left + right == pytest.approx(1.0, abs=1e-9)

    def test_triangular_case(self):
        assert irwin_hall_cdf(1.0, 2) == pytest.approx(0.5, abs=1e-12)
        assert irwin_hall_cdf(0.5, 2) == pytest.approx(0.125, abs=1e-12)

    def test_single_uniform_is_identity(self):
        for x in (0.1, 0.25, 0.8):
            assert irwin_hall_cdf(x, 1) == pytest.approx(x, abs=1e-12)

    def test_nondecreasing_and_in_unit_interval(self):
        for m in (3, 10, 30):
            grid = np.linspace(-1, m + 1, 60)
            vals = [irwin_hall_cdf(float(x), m) for x in grid]
            assert all(0.0 <= v <= 1.0 for v in vals)
            assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_monte_carlo_agreement(self):
        rng = substream(3, "ih-mc", 0)
        m, samples = 10, 200000
        sums = rng.random((samples, m)).sum(axis=1)
        for x in np.linspace(0.5, m - 0.5, 11):
            emp = (sums <= x).mean()
            cdf = irwin_hall_cdf(float(x), m)
            stderr = math.sqrt(max(cdf * (1 - cdf), 1e-12) / samples)
            assert abs(emp - cdf) <= 4 * stderr + 1e-9

    def test_normal_approximation_regime(self):
        assert irwin_hall_cdf(50.0, 100) == pytest.approx(0.5, abs=1e-12)
        assert irwin_hall_cdf(40.0, 100) < irwin_hall_cdf(60.0, 100)

    def test_invalid_m(self):
        with pytest.raises(InvalidMError):
            irwin_hall_cdf(1.0, 0)
        with pytest.raises(InvalidMError):
            irwin_hall_cdf(1.0, 2.5)


class TestRowSumCdf:
    def test_below_forced_one(self):
        for n in (2, 5, 16):
            assert row_sum_cdf(0.999, n) == 0.0

    def test_midpoint(self):
        for n in (3, 8, 16):
            assert row_sum_cdf(1 + (n - 2) / 2, n) == pytest.approx(0.5, abs=1e-10)

    def test_n2_step_function(self):
        assert row_sum_cdf(0.5, 2) == 0.0
        assert row_sum_cdf(1.0, 2) == 1.0
        assert row_sum_cdf(7.0, 2) == 1.0

    def test_against_row_sum_monte_carlo(self):
        rng = substream(5, "rowsum-mc", 0)
        n, samples = 16, 10**6
        free = rng.random((samples, n - 2)).sum(axis=1)
        emp = (1.0 + free <= 16**0.25).mean()  # threshold n^c with c = 0.25
        cdf = row_sum_cdf(16**0.25, n)
        stderr = math.sqrt(max(cdf * (1 - cdf), 1e-12) / samples)
        assert abs(emp - cdf) <= 3 * stderr + 1e-9

    def test_invalid_n(self):
        with pytest.raises(InvalidNError):
            row_sum_cdf(1.0, 1)


class TestWelfareTailBound:
    def test_decreases_with_n_at_fixed_c(self):
        assert welfare_tail_bound(400, 0.3).value < welfare_tail_bound(100, 0.3).value

    def test_pinned_value_at_default_exponent(self):
        c = default_tail_exponent(16)
        assert c == pytest.approx(0.24646909692061629, abs=1e-14)
        report = welfare_tail_bound(16, c)
        assert report.valid
        assert report.value == pytest.approx(0.046059482658148558, rel=1e-12)
        assert welfare_tail_bound(32, default_tail_exponent(32)).value == pytest.approx(
            0.016284486262760517, rel=1e-12
        )

    def test_invalid_when_core_term_exceeds_one(self):
        report = welfare_tail_bound(100, 0.999)  # 2e / n^(1-c) > 1
        assert not report.valid
        assert report.value > 1.0

    def test_out_of_range_exponent_flags_invalid(self):
        # the standard exponent choice lands below 0 for small n
        c8 = default_tail_exponent(8)
        assert c8 < 0.0
        assert not welfare_tail_bound(8, c8).valid

    def test_rejects_c_at_least_one(self):
        with pytest.raises(InvalidCError):
            welfare_tail_bound(16, 1.0)
        with pytest.raises(InvalidNError):
            welfare_tail_bound(2, 0.5)


class TestLowWelfareFractionBound:
    def test_pinned_log_value(self):
        report = low_welfare_fraction_bound(16, 0.5)
        assert report.log_value == pytest.approx(97.04350429912780, rel=1e-13)
        assert not report.valid  # far above 1: vacuous at this size

    def test_monotone_in_c(self):
        a = low_welfare_fraction_bound(16, 0.2).log_value
        b = low_welfare_fraction_bound(16, 0.6).log_value
        assert a <= b

    def test_boundary_algebra(self):
        # when n^(1-c) = 2e the power term vanishes
        n = 20
        c = 1.0 - math.log(2 * math.e) / math.log(n)
        want = 2 * n - math.log(math.sqrt(2 * math.pi) * n)
        assert low_welfare_fraction_bound(n, c).log_value == pytest.approx(want, abs=1e-9)

    def test_tiny_c_can_be_meaningful(self):
        report = low_welfare_fraction_bound(64, 0.01)
        assert report.log_value < 0
        assert report.valid


class TestGaussMassLowerBound:
    def test_branches_agree_at_scale_one(self):
        for n in (4, 8, 16):
            small = n * (n - 2) * (math.log(1.0) - 0.5)
            large = -n * (n - 2) / 2.0
            assert abs(small - large) < 1e-12
            assert gauss_mass_lower_bound(n, 1.0).log_value == pytest.approx(
                -n * (n - 2) / 2, abs=1e-12
            )

    def test_small_scale_branch(self):
        report = gauss_mass_lower_bound(4, 0.5)
        assert report.log_value == pytest.approx(8 * (-0.5 + math.log(0.5)), abs=1e-12)
        assert report.params["branch"] == "scale<=1"

    def test_huge_scale_approaches_full_mass(self):
        report = gauss_mass_lower_bound(6, 1e9)
        assert report.log_value == pytest.approx(0.0, abs=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(InvalidNError):
            gauss_mass_lower_bound(1, 0.5)
        with pytest.raises(ValueError):
            gauss_mass_lower_bound(4, 0.0)


class TestGaussMassInRange:
    def test_no_free_entries_gives_unit_mass(self):
        p = validate_unit_range([[1, 0], [0, 1]])
        report = gauss_mass_in_range(p, PerturbationSpec(sigma=0.7))
        assert report.value == pytest.approx(1.0, abs=1e-12)
        assert report.log_value == 0.0
        assert report.params["n_free"] == 0

    def test_single_entry_matches_normal_cdf(self):
        from scipy.special import ndtr

        p = validate_unit_range([[1, 0.5, 0], [0.5, 1, 0], [0.5, 0, 1]])
        spec = PerturbationSpec(sigma=0.1, norm_kind="max")  # entry scale exactly 0.1
        report = gauss_mass_in_range(p, spec)
        per_entry = math.log(0.1) + 0.5 * math.log(2 * math.pi) + math.log(
            float(ndtr(5.0) - ndtr(-5.0))
        )
        assert report.log_value == pytest.approx(3 * per_entry, abs=1e-12)

    def test_always_clears_lower_bound(self):
        for k in range(50):
            p = sample_uniform_profile(8, substream(7, "mass", k))
            for sigma in (0.05, 0.2, 1.0, 5.0):
                report = gauss_mass_in_range(p, PerturbationSpec(sigma=sigma))
                assert report.log_value >= report.params["lower_log"] - 1e-6

    def test_monte_carlo_cross_check(self):
        p = validate_unit_range([[1, 0.5, 0], [0.5, 1, 0], [0.5, 0, 1]])
        spec = PerturbationSpec(sigma=1.0, norm_kind="max")
        report = gauss_mass_in_range(p, spec, samples=200000, rng=substream(9, "mc", 0))
        assert report.params["mc_log"] == pytest.approx(report.log_value, abs=0.02)


class TestRatioBounds:
    def test_average_ceiling_value(self):
        assert average_ratio_bound() == pytest.approx(1 + math.e, abs=1e-15)
        assert average_ratio_bound() == pytest.approx(3.718281828, abs=1e-9)
        assert average_ratio_bound() > 1.0
        assert average_ratio_bound() < math.sqrt(16)

    def test_small_noise_branch_limit(self):
        # 1/sigma < sqrt(n) keeps the analysis branch active; the n terms fade
        big = smoothed_ratio_bound(10**6, sigma=0.1, sigma_norm=0.5)
        assert big.params["branch"] == "small-noise"
        assert big.value == pytest.approx(2 * math.exp(1.5) / 0.1, rel=0.01)
        mid = smoothed_ratio_bound(10**3, sigma=0.1, sigma_norm=0.5)
        assert abs(mid.value - big.value) / big.value < 0.01

    def test_large_noise_branch_limit(self):
        report = smoothed_ratio_bound(10**6, sigma=0.1, sigma_norm=2.0)
        assert report.params["branch"] == "large-noise"
        assert report.value == pytest.approx(2 * math.exp(1.5), rel=0.01)
        assert report.value == pytest.approx(8.963, abs=2e-2)

    def test_worst_case_fallback(self):
        report = smoothed_ratio_bound(64, sigma=0.1, sigma_norm=1.1, c_wc=0.55)
        assert report.params["branch"] == "worst-case"
        assert report.value == pytest.approx(0.55 * 8.0, abs=1e-12)

    def test_invalid_size(self):
        with pytest.raises(InvalidNError):
            smoothed_ratio_bound(2, 0.1, 0.1)


class TestHalfWelfareCheck:
    def test_requires_enough_samples(self):
        with pytest.raises(TooFewSamplesError):
            half_welfare_check([], 8)
        with pytest.raises(TooFewSamplesError):
            half_welfare_check(np.ones(500), 8)

    def test_pass_and_fail(self):
        good = np.full(2000, 5.0)
        result = half_welfare_check(good, 8)
        assert isinstance(result, HalfWelfareResult)
        assert result.passes and result.empirical_prob == 1.0

        bad = np.concatenate([np.full(600, 5.0), np.full(1400, 3.0)])
        result = half_welfare_check(bad, 8)
        assert not result.passes
        assert result.empirical_prob == pytest.approx(0.3)


def test_bound_report_serialization():
    report = welfare_tail_bound(16, default_tail_exponent(16))
    d = report.to_dict()
    assert set(d) == {"name", "params", "value", "log_value", "valid"}

    overflowing = BoundReport("x", {}, value=math.inf, log_value=1e4, valid=False)
    assert overflowing.to_dict()["value"] is None
