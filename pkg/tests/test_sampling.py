"""Tests for particle weighting, estimation, ESS diagnostics and breakdown."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isbound import (
    CHI_SQUARED,
    KULLBACK_LEIBLER,
    DensityRatioModel,
    Gaussian1D,
    Observable,
    ProbabilityVector,
    ToleranceBudget,
    WeightedEmpiricalMeasure,
    WeightOverflowWarning,
    breakdown_probability,
    breakdown_trial,
    ess_chi2,
    ess_kl,
    estimate,
    exact_mse,
    gaussian_chi_squared,
    make_gaussian_model,
    normalized_weights,
    sample_particles,
)

STD_NORMAL = Gaussian1D(0.0, 1.0)
BUDGET = ToleranceBudget(0.1, 0.1)


def shifted_model(mean: float, variance: float = 1.0):
    return make_gaussian_model(Gaussian1D(mean, variance), STD_NORMAL)


def overflowing_model():
    """A synthetic model whose density ratio always overflows exp()."""
    return DensityRatioModel(
        target_log_density=lambda x: np.zeros_like(x),
        proposal_log_density=lambda x: np.zeros_like(x),
        log_ratio=lambda x: np.full_like(np.asarray(x, dtype=float), 720.0),
        proposal_sampler=lambda n, seed: np.random.default_rng(seed).normal(0, 1, int(n)),
    )


class TestWeightedEmpiricalMeasure:
    def test_validation(self):
        with pytest.raises(ValueError, match="mismatch"):
            WeightedEmpiricalMeasure([1.0, 2.0], [0.5], seed=0)
        with pytest.raises(ValueError, match="nonnegative"):
            WeightedEmpiricalMeasure([1.0], [-0.5], seed=0)
        with pytest.raises(ValueError, match="at least one"):
            WeightedEmpiricalMeasure([], [], seed=0)

    def test_arrays_are_immutable(self):
        measure = WeightedEmpiricalMeasure([1.0, 2.0], [0.5, 0.5], seed=0)
        with pytest.raises(ValueError):
            measure.weights[0] = 1.0


class TestSampleParticles:
    def test_identical_pair_gives_exactly_uniform_weights(self):
        model = make_gaussian_model(STD_NORMAL, STD_NORMAL)
        measure = sample_particles(model, 5, seed=0)
        assert np.all(measure.weights == 0.2)

    def test_weights_are_ratio_over_n(self):
        model = shifted_model(2.0)
        measure = sample_particles(model, 200, seed=9)
        recomputed = np.exp(model.log_ratio(measure.particles)) / 200
        np.testing.assert_array_equal(measure.weights, recomputed)

    def test_total_mass_near_one(self):
        # standard error of the mass at N=1000 is sqrt((e^4-1)/1000)
        model = shifted_model(2.0)
        measure = sample_particles(model, 1000, seed=7)
        se = math.sqrt((math.exp(4) - 1.0) / 1000)
        assert se == pytest.approx(0.2316, abs=5e-4)
        assert abs(measure.total_mass() - 1.0) <= 5.0 * se

    def test_deterministic_given_seed(self):
        model = shifted_model(2.0)
        a = sample_particles(model, 50, seed=3)
        b = sample_particles(model, 50, seed=3)
        np.testing.assert_array_equal(a.particles, b.particles)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_rejects_empty_request(self):
        with pytest.raises(ValueError):
            sample_particles(shifted_model(0.0), 0, seed=1)

    def test_overflow_surfaces_as_warning_with_index(self):
        with pytest.warns(WeightOverflowWarning, match="particle index 0"):
            measure = sample_particles(overflowing_model(), 3, seed=1)
        assert np.all(np.isinf(measure.weights))


class TestEstimate:
    def test_constant_one_on_identical_pair_is_exact(self):
        model = make_gaussian_model(STD_NORMAL, STD_NORMAL)
        measure = sample_particles(model, 5, seed=0)
        assert estimate(measure, Observable.one()) == 1.0

    def test_zero_function(self):
        measure = sample_particles(shifted_model(1.0), 64, seed=5)
        assert estimate(measure, Observable(lambda x: np.zeros_like(x), "0")) == 0.0

    @pytest.mark.filterwarnings("ignore:divide by zero:RuntimeWarning")
    def test_nonfinite_value_reports_particle_index(self):
        measure = WeightedEmpiricalMeasure([0.0, 1.0], [0.5, 0.5], seed=0)
        with pytest.raises(ValueError, match="index 0"):
            estimate(measure, Observable(lambda x: 1.0 / x, "1/x"))

    def test_unbiasedness_over_replicates(self):
        """Replicate means of the estimator match the target expectations."""
        model = shifted_model(1.0)
        replicates = 10_000
        seeds = np.random.SeedSequence(101).generate_state(replicates, dtype=np.uint64)
        ones = np.empty(replicates)
        firsts = np.empty(replicates)
        phi_one, phi_x = Observable.one(), Observable.identity()
        for i, seed in enumerate(seeds):
            measure = sample_particles(model, 100, int(seed))
            ones[i] = estimate(measure, phi_one)
            firsts[i] = estimate(measure, phi_x)
        # Var_Q(g) = e - 1; Var_Q(x g) = e(1 + 4) - 1
        se_one = math.sqrt((math.e - 1.0) / (100 * replicates))
        se_x = math.sqrt((math.e * 5.0 - 1.0) / (100 * replicates))
        assert abs(ones.mean() - 1.0) <= 4.0 * se_one
        assert abs(firsts.mean() - 1.0) <= 4.0 * se_x
        # empirical mean squared error of the mass matches Var_Q(g)/N to 10%
        mse = float(np.mean((ones - 1.0) ** 2))
        exact = exact_mse(model, phi_one, 100)
        assert abs(mse - exact) <= 0.1 * exact


class TestExactMse:
    def test_identical_pair_has_zero_mse(self):
        model = make_gaussian_model(STD_NORMAL, STD_NORMAL)
        assert exact_mse(model, Observable.one(), 7) == pytest.approx(0.0, abs=1e-12)

    def test_constant_function_mse_is_chi2_over_n(self):
        model = shifted_model(2.0)
        value = exact_mse(model, Observable.one(), 100)
        assert value == pytest.approx((math.exp(4) - 1.0) / 100, rel=1e-9)
        assert value == pytest.approx(0.535982, abs=1e-6)

    def test_heavy_target_is_diagnosed_infinite(self):
        model = make_gaussian_model(Gaussian1D(0.0, 4.0), STD_NORMAL)
        assert exact_mse(model, Observable.one(), 10) == math.inf

    def test_nonconstant_function(self):
        # phi(x) = x on the unit mean shift: Var_Q(x g) = 5e - 1
        model = shifted_model(1.0)
        value = exact_mse(model, Observable.identity(), 50)
        assert value == pytest.approx((5.0 * math.e - 1.0) / 50, rel=1e-9)


class TestNormalizedWeights:
    def test_uniform_stays_uniform(self):
        measure = WeightedEmpiricalMeasure([0.0, 1.0, 2.0], np.full(3, 1 / 3), seed=0)
        np.testing.assert_allclose(normalized_weights(measure).entries, 1 / 3, rtol=1e-15)

    def test_plain_normalization(self):
        measure = WeightedEmpiricalMeasure([0.0, 1.0], [0.2, 0.6], seed=0)
        np.testing.assert_allclose(normalized_weights(measure).entries, [0.25, 0.75])

    def test_zero_entry_is_preserved(self):
        measure = WeightedEmpiricalMeasure([0.0, 1.0, 2.0], [0.0, 0.25, 0.25], seed=0)
        np.testing.assert_allclose(normalized_weights(measure).entries, [0.0, 0.5, 0.5])

    def test_all_zero_rejected(self):
        measure = WeightedEmpiricalMeasure([0.0, 1.0], [0.0, 0.0], seed=0)
        with pytest.raises(ValueError, match="all-zero"):
            normalized_weights(measure)


class TestEffectiveSampleSizes:
    def test_uniform_weights_give_n(self):
        w = ProbabilityVector.uniform(10)
        assert ess_chi2(w) == pytest.approx(10.0, abs=1e-9)
        assert ess_kl(w) == pytest.approx(10.0, abs=1e-9)

    def test_vertex_gives_one(self):
        w = ProbabilityVector.vertex(10, 4)
        assert ess_chi2(w) == pytest.approx(1.0, abs=1e-9)
        assert ess_kl(w) == pytest.approx(1.0, abs=1e-9)

    def test_half_degenerate_vector(self):
        w = ProbabilityVector([0.5, 0.5, 0.0, 0.0])
        assert ess_chi2(w) == pytest.approx(2.0, abs=1e-12)
        assert ess_kl(w) == pytest.approx(2.0, abs=1e-12)

    def test_ranges_over_random_vectors(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            n = int(rng.integers(2, 60))
            batch = rng.dirichlet(np.full(n, rng.uniform(0.2, 5.0)), size=100)
            for row in batch:
                w = ProbabilityVector(row / row.sum())
                for value in (ess_chi2(w), ess_kl(w)):
                    assert 1.0 - 1e-9 <= value <= n + 1e-9

    def test_equal_to_n_only_at_uniform(self):
        w = np.full(20, 0.05)
        w[0] += 1e-3
        w[1] -= 1e-3
        vec = ProbabilityVector(w)
        assert ess_chi2(vec) < 20.0 - 1e-9
        assert ess_kl(vec) < 20.0 - 1e-9

    def test_kl_ess_dominates_chi2_ess_on_heavy_case(self):
        measure = sample_particles(shifted_model(3.0), 100, seed=17)
        w = normalized_weights(measure)
        assert ess_chi2(w) <= ess_kl(w) <= 100.0


@given(
    raw=st.lists(
        st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False),
        min_size=2,
        max_size=40,
    ).filter(lambda xs: sum(xs) > 0)
)
@settings(max_examples=200, deadline=None)
def test_property_ess_within_range(raw):
    arr = np.asarray(raw)
    w = ProbabilityVector(arr / arr.sum())
    n = len(w)
    assert 1.0 - 1e-9 <= ess_chi2(w) <= n + 1e-9
    assert 1.0 - 1e-9 <= ess_kl(w) <= n + 1e-9


class TestBreakdownTrial:
    def test_identical_pair_passes_both_conditions(self):
        model = make_gaussian_model(STD_NORMAL, STD_NORMAL)
        outcome = breakdown_trial(model, KULLBACK_LEIBLER, 0.0, 50, BUDGET, seed=2)
        assert outcome.mass_ok and outcome.estimate_ok
        assert outcome.mass == 1.0
        assert outcome.divergence_estimate == 0.0
        assert not outcome.failed

    def test_far_target_fails_below_threshold(self):
        # threshold for KL 4.5 is 49.63, so N=25 fails for most seeds
        model = shifted_model(3.0)
        failures = sum(
            breakdown_trial(model, KULLBACK_LEIBLER, 4.5, 25, BUDGET, seed=s).failed
            for s in range(50)
        )
        assert failures >= 40

    def test_near_target_succeeds_well_above_threshold(self):
        model = shifted_model(1.0)
        outcomes = [
            breakdown_trial(model, KULLBACK_LEIBLER, 0.5, 10_000, BUDGET, seed=s)
            for s in range(20)
        ]
        assert sum(not o.failed for o in outcomes) >= 19

    def test_overflow_fails_mass_condition_with_flag(self):
        outcome = breakdown_trial(overflowing_model(), CHI_SQUARED, 1.0, 4, BUDGET, seed=3)
        assert outcome.overflowed
        assert not outcome.mass_ok
        assert not outcome.estimate_ok
        assert outcome.failed

    def test_rejects_infinite_exact_divergence(self):
        with pytest.raises(ValueError, match="finite"):
            breakdown_trial(shifted_model(0.0), CHI_SQUARED, math.inf, 5, BUDGET, seed=0)


class TestBreakdownProbability:
    def test_identical_pair_never_fails(self):
        model = make_gaussian_model(STD_NORMAL, STD_NORMAL)
        report = breakdown_probability(model, KULLBACK_LEIBLER, 0.0, 100, BUDGET, 100, seed=4)
        assert report.failure_count == 0
        assert report.failure_frequency == 0.0

    def test_below_threshold_fails_at_least_half(self):
        model = shifted_model(3.0)
        report = breakdown_probability(model, KULLBACK_LEIBLER, 4.5, 25, BUDGET, 1000, seed=6)
        assert report.failure_frequency >= 0.5
        assert report.replicates == 1000
        assert report.n_particles == 25
        assert report.failure_count <= report.replicates
        assert max(report.mass_violations, report.estimate_violations) <= report.failure_count

    def test_deterministic_reports(self):
        model = shifted_model(3.0)
        a = breakdown_probability(model, KULLBACK_LEIBLER, 4.5, 25, BUDGET, 64, seed=8)
        b = breakdown_probability(model, KULLBACK_LEIBLER, 4.5, 25, BUDGET, 64, seed=8)
        assert a == b

    def test_failure_frequency_nonincreasing_in_n(self):
        """Statistical monotonicity across growing sample sizes, 0.05 slack."""
        model = shifted_model(3.0)
        freqs = [
            breakdown_probability(
                model, KULLBACK_LEIBLER, 4.5, n, BUDGET, 1000, seed=12
            ).failure_frequency
            for n in (25, 250, 2500, 25000)
        ]
        for earlier, later in zip(freqs, freqs[1:]):
            assert later <= earlier + 0.05

    def test_rejects_zero_replicates(self):
        with pytest.raises(ValueError):
            breakdown_probability(shifted_model(1.0), KULLBACK_LEIBLER, 0.5, 5, BUDGET, 0, seed=0)
