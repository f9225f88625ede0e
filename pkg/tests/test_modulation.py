import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funcbands import (
    Curve,
    DegenerateStatisticsError,
    FunctionalSample,
    ModulationCurve,
    adjust_positive,
    calibration_envelope_modulation,
    constant_modulation,
    envelope_modulation,
    fit_band,
    integrate,
    make_uniform_grid,
    normalize,
    std_dev_modulation,
    SplitIndices,
)


def sample_from_rows(grid, rows):
    return FunctionalSample(grid, np.asarray(rows, dtype=float))


class TestConstantModulation:
    @pytest.mark.parametrize(
        "a,b,expected", [(0.0, 1.0, 1.0), (0.0, 2.0, 0.5), (4.0, 18.0, 1.0 / 14.0)]
    )
    def test_flat_value_is_inverse_domain_length(self, a, b, expected):
        mod = constant_modulation(make_uniform_grid(a, b, 11))
        assert mod.values == pytest.approx(np.full(11, expected), rel=1e-14)
        assert integrate(mod.curve) == pytest.approx(1.0, rel=1e-12)
        assert mod.kind == "constant"


class TestNormalize:
    def test_constant_on_unit_interval(self):
        g = make_uniform_grid(0, 1, 9)
        mod = normalize(Curve(g, np.full(9, 5.0)))
        assert mod.values == pytest.approx(np.ones(9), rel=1e-14)

    def test_constant_on_longer_domain(self):
        g = make_uniform_grid(0, 2, 9)
        mod = normalize(Curve(g, np.full(9, 5.0)))
        assert mod.values == pytest.approx(np.full(9, 0.5), rel=1e-14)

    def test_quotient_cancels_fixed_factor(self):
        rng = np.random.default_rng(1)
        g = make_uniform_grid(0, 1, 21)
        x = Curve(g, rng.uniform(0.5, 3.0, 21))
        scaled = Curve(g, 7.3 * x.values)
        assert normalize(scaled).values == pytest.approx(
            normalize(x).values, rel=1e-12
        )

    def test_nonpositive_rejected(self):
        g = make_uniform_grid(0, 1, 3)
        with pytest.raises(ValueError):
            normalize(Curve(g, np.array([1.0, 0.0, 2.0])))

    @given(st.floats(0.01, 100.0), st.integers(0, 2**31))
    @settings(max_examples=60)
    def test_canonical_representative_law(self, lam, seed):
        rng = np.random.default_rng(seed)
        g = make_uniform_grid(0, 1, 13)
        x = Curve(g, rng.uniform(0.1, 5.0, 13))
        direct = normalize(x).values
        rescaled = normalize(Curve(g, lam * x.values)).values
        assert np.max(np.abs(rescaled - direct)) <= 1e-12 * np.max(direct)


class TestAdjustPositive:
    def test_adds_epsilon_everywhere(self):
        g = make_uniform_grid(0, 1, 3)
        out = adjust_positive(Curve(g, np.array([0.0, 1.0, 2.0])), 1e-6)
        assert out.values == pytest.approx([1e-6, 1.000001, 2.000001], rel=1e-14)

    def test_identically_zero_rejected(self):
        g = make_uniform_grid(0, 1, 3)
        with pytest.raises(DegenerateStatisticsError):
            adjust_positive(Curve(g, np.zeros(3)), 1e-6)

    def test_strictly_positive_input_untouched_when_caller_skips(self):
        # The fitting code only adjusts envelopes with zeros: a strictly
        # positive training envelope comes through exactly normalized.
        g = make_uniform_grid(0, 1, 3)
        rows = [[1.0, 2.0, 1.0], [2.0, 1.0, 3.0], [3.0, 3.0, 2.0]]
        sample = sample_from_rows(g, rows + [[0.5, 0.5, 0.5]])
        sp = SplitIndices(training=(0, 1, 2), calibration=(3,))
        zero = Curve(g, np.zeros(3))
        band = fit_band(sample, 0.25, sp, predictor=zero, modulation="sbar")
        # position ceil(4 * 0.75) = 3 keeps all three training curves
        env = np.max(np.abs(rows), axis=0)
        expected = env / integrate(Curve(g, env))
        assert band.modulation.values == pytest.approx(expected, rel=1e-14)

    def test_adjusted_band_contains_unadjusted_band_where_positive(self):
        # 3-point example whose training envelope vanishes at the first point.
        g = make_uniform_grid(0, 1, 3)
        rows = np.array([[0.0, 1.0, 2.0], [0.0, 2.0, 4.0], [0.0, 3.0, 6.0]])
        sample = sample_from_rows(g, np.vstack([rows, rows]))
        sp = SplitIndices(training=(0, 1, 2), calibration=(3, 4, 5))
        zero = Curve(g, np.zeros(3))
        band = fit_band(sample, 0.25, sp, predictor=zero, modulation="sbar")
        assert np.all(band.modulation.values > 0)

        # oracle: unadjusted envelope restricted to the points where it is > 0
        env = np.abs(rows).max(axis=0)          # (0, 3, 6)
        s_pos = env / integrate(Curve(g, env))  # defined up to the zero point
        scores = [np.max(np.abs(r[1:]) / s_pos[1:]) for r in rows]
        k = sorted(scores)[2]
        for j in (1, 2):
            assert band.upper.values[j] >= k * s_pos[j] - 1e-9
            assert band.lower.values[j] <= -k * s_pos[j] + 1e-9


class TestStdDevModulation:
    def test_equal_pointwise_spread_reduces_to_flat(self):
        rng = np.random.default_rng(2)
        g = make_uniform_grid(0, 1, 15)
        base = rng.normal(size=15)
        sample = sample_from_rows(g, [base + 1.0, base - 1.0])
        mod = std_dev_modulation(sample)
        assert mod.values == pytest.approx(constant_modulation(g).values, rel=1e-12)

    def test_hand_normalization_on_two_point_grid(self):
        g = make_uniform_grid(0, 1, 2)
        sample = sample_from_rows(g, [[0.0, 0.0], [2.0, 4.0]])
        # std curve is (sqrt2, 2 sqrt2); trapezoid integral 3 sqrt2 / 2
        mod = std_dev_modulation(sample)
        assert mod.values == pytest.approx([2.0 / 3.0, 4.0 / 3.0], rel=1e-14)

    def test_scaling_before_normalization_is_irrelevant(self):
        rng = np.random.default_rng(7)
        g = make_uniform_grid(0, 1, 9)
        rows = rng.normal(size=(6, 9))
        mod1 = std_dev_modulation(sample_from_rows(g, rows))
        mod2 = std_dev_modulation(sample_from_rows(g, 4.0 * rows))
        assert mod1.values == pytest.approx(mod2.values, rel=1e-12)

    def test_needs_two_curves(self):
        g = make_uniform_grid(0, 1, 5)
        with pytest.raises(DegenerateStatisticsError):
            std_dev_modulation(sample_from_rows(g, [np.ones(5)]))


class TestEnvelopeModulation:
    def test_single_training_curve_keeps_everything(self):
        # position ceil(2 * 0.9) = 2 exceeds m=1, so the whole set is kept
        g = make_uniform_grid(0, 1, 4)
        y = Curve(g, np.array([1.0, 3.0, 2.0, 1.5]))
        center = Curve(g, np.zeros(4))
        mod = envelope_modulation(FunctionalSample.from_curves([y]), center, 0.1)
        expected = y.values / integrate(y)
        assert mod.values == pytest.approx(expected, rel=1e-14)

    def test_constant_offsets_reduce_to_flat(self):
        g = make_uniform_grid(0, 2, 8)
        center = Curve(g, np.linspace(-1, 1, 8))
        sample = sample_from_rows(g, [center.values + 2.5])
        mod = envelope_modulation(sample, center, 0.1)
        assert mod.values == pytest.approx(constant_modulation(g).values, rel=1e-12)

    def test_brute_force_trim_oracle(self):
        # m=10, alpha=0.5: position ceil(11 * 0.5) = 6, keep the 6 least
        # extreme curves; oracle sorts the sup scores in plain Python.
        rng = np.random.default_rng(11)
        g = make_uniform_grid(0, 1, 12)
        rows = rng.normal(size=(10, 12))
        center = Curve(g, rng.normal(size=12))
        sample = sample_from_rows(g, rows)

        sups = [float(np.max(np.abs(r - center.values))) for r in rows]
        gamma = sorted(sups)[5]
        kept_rows = [r for r, s in zip(rows, sups) if s <= gamma]
        assert len(kept_rows) == 6
        env = np.max(np.abs(np.array(kept_rows) - center.values), axis=0)
        expected = env / integrate(Curve(g, env))

        mod = envelope_modulation(sample, center, 0.5)
        assert mod.values == pytest.approx(expected, rel=1e-12)

    def test_all_curves_equal_center_is_pathological(self):
        g = make_uniform_grid(0, 1, 5)
        center = Curve(g, np.ones(5))
        sample = sample_from_rows(g, [np.ones(5), np.ones(5)])
        with pytest.raises(DegenerateStatisticsError):
            envelope_modulation(sample, center, 0.1)


class TestCalibrationEnvelopeModulation:
    def test_equal_constant_distances_reduce_to_flat(self):
        g = make_uniform_grid(0, 1, 6)
        center = Curve(g, np.zeros(6))
        sample = sample_from_rows(g, [np.full(6, 2.0), np.full(6, -2.0)])
        mod, kept = calibration_envelope_modulation(sample, center, 0.5)
        assert mod.values == pytest.approx(constant_modulation(g).values, rel=1e-12)
        assert kept.kept == (0, 1)

    def test_keeps_all_three_at_low_alpha(self):
        # l=3, alpha=0.25: position ceil(4 * 0.75) = 3, threshold is the max
        g = make_uniform_grid(0, 1, 3)
        center = Curve(g, np.zeros(3))
        sample = sample_from_rows(g, [np.full(3, 1.0), np.full(3, 2.0), np.full(3, 3.0)])
        mod, kept = calibration_envelope_modulation(sample, center, 0.25)
        assert kept.quantile_index == 3
        assert kept.threshold == 3.0
        assert kept.kept == (0, 1, 2)

    def test_trims_the_most_extreme_curve(self):
        # l=4, alpha=0.4: position ceil(5 * 0.6) = 3, threshold 3, drop score 4
        g = make_uniform_grid(0, 1, 3)
        center = Curve(g, np.zeros(3))
        sample = sample_from_rows(
            g, [np.full(3, s) for s in (1.0, 2.0, 3.0, 4.0)]
        )
        mod, kept = calibration_envelope_modulation(sample, center, 0.4)
        assert kept.quantile_index == 3
        assert kept.threshold == 3.0
        assert kept.kept == (0, 1, 2)

    def test_alpha_below_reach_raises(self):
        g = make_uniform_grid(0, 1, 3)
        center = Curve(g, np.zeros(3))
        sample = sample_from_rows(g, [np.full(3, 1.0), np.full(3, 2.0), np.full(3, 3.0)])
        with pytest.raises(DegenerateStatisticsError):
            calibration_envelope_modulation(sample, center, 0.2)

    def test_cardinality_matches_position_under_distinct_scores(self):
        rng = np.random.default_rng(23)
        g = make_uniform_grid(0, 1, 20)
        center = Curve(g, np.zeros(20))
        for alpha in (0.1, 0.25, 0.5):
            sample = sample_from_rows(g, rng.normal(size=(30, 20)))
            mod, kept = calibration_envelope_modulation(sample, center, alpha)
            assert len(kept.kept) == kept.quantile_index
            # every discarded index scores strictly above the threshold
            resid = np.abs(sample.values - center.values)
            sups = resid.max(axis=1)
            outside = set(range(30)) - set(kept.kept)
            assert all(sups[i] > kept.threshold for i in outside)

    def test_enlarging_the_kept_set_grows_the_envelope(self):
        rng = np.random.default_rng(29)
        g = make_uniform_grid(0, 1, 16)
        center = Curve(g, np.zeros(16))
        sample = sample_from_rows(g, rng.normal(size=(40, 16)))
        resid = np.abs(sample.values - center.values)
        envelopes = []
        for alpha in (0.5, 0.25, 0.1):  # decreasing alpha keeps more curves
            _, kept = calibration_envelope_modulation(sample, center, alpha)
            envelopes.append(resid[list(kept.kept)].max(axis=0))
        assert np.all(envelopes[0] <= envelopes[1] + 1e-15)
        assert np.all(envelopes[1] <= envelopes[2] + 1e-15)

    def test_positive_unit_integral_on_random_instances(self):
        rng = np.random.default_rng(31)
        g = make_uniform_grid(0, 1, 25)
        for _ in range(20):
            sample = sample_from_rows(g, rng.normal(size=(15, 25)))
            center = Curve(g, rng.normal(size=25))
            mod, _ = calibration_envelope_modulation(sample, center, 0.25)
            assert np.all(mod.values > 0)
            assert integrate(mod.curve) == pytest.approx(1.0, abs=1e-9)


class TestModulationCurveInvariants:
    def test_rejects_nonpositive_values(self):
        g = make_uniform_grid(0, 1, 3)
        with pytest.raises(ValueError):
            ModulationCurve(Curve(g, np.array([1.0, 0.0, 1.0])))

    def test_rejects_non_unit_integral(self):
        g = make_uniform_grid(0, 1, 3)
        with pytest.raises(ValueError):
            ModulationCurve(Curve(g, np.full(3, 2.0)))

    def test_rejects_unknown_kind(self):
        g = make_uniform_grid(0, 1, 3)
        with pytest.raises(ValueError):
            ModulationCurve(Curve(g, np.ones(3)), "mystery")
