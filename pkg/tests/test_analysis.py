"""Variance operators, concentration identities, sample-size formulas, and
the gap-frequency experiment."""

import math

import numpy as np
import pytest

from tbsg.analysis import (
    SampleSizeQuery,
    bernstein_coverage_experiment,
    bernstein_envelope,
    check_lemma1_identity,
    check_variance_bound,
    gap_frequency_experiment,
    one_step_variance,
    sample_size_bound,
)
from tbsg.errors import DegenerateDelta, LengthMismatch, RangeViolation, ShapeMismatch
from tbsg.model import MAX, MIN, StrategyPair
from tbsg.sampling import estimate_model
from tbsg.solve import nash_value_iteration
from tbsg.verification import (
    check_variance_bound_on_estimate,
    lemma5_sides,
    lemma6_exact_recovery,
    lemma10_terms,
)

from conftest import make_game, make_pair, tiny_game


class TestOneStepVariance:
    def test_deterministic_rows_are_zero(self):
        game = tiny_game([[0.0, 1.0], [1.0, 0.0]], [0.0, 0.0], [MAX, MIN], 0.5, na=1)
        v = np.array([3.0, -1.0])
        assert np.array_equal(one_step_variance(game, v), np.zeros(2))

    def test_bernoulli_half(self):
        game = tiny_game([[0.5, 0.5], [1.0, 0.0]], [0.0, 0.0], [MAX, MIN], 0.5, na=1)
        var = one_step_variance(game, np.array([0.0, 1.0]))
        assert var[0] == pytest.approx(0.25, abs=1e-15)

    def test_constant_vector_is_zero(self):
        game = make_game(ns=4, na=2, gamma=0.9, seed=0)
        var = one_step_variance(game, np.full(4, 7.5))
        assert np.max(var) <= 1e-12

    def test_shift_invariance(self, rng):
        game = make_game(ns=5, na=3, gamma=0.9, seed=1)
        v = rng.uniform(0, 10, size=5)
        a = one_step_variance(game, v)
        b = one_step_variance(game, v + 123.0)
        assert np.max(np.abs(a - b)) <= 1e-10

    def test_range_upper_bound(self, rng):
        game = make_game(ns=5, na=3, gamma=0.9, seed=2)
        v = rng.uniform(0, 10, size=5)
        var = one_step_variance(game, v)
        assert var.max() <= (v.max() - v.min()) ** 2 / 4 + 1e-12

    def test_length_mismatch(self):
        game = make_game(ns=4, na=2, gamma=0.9, seed=3)
        with pytest.raises(LengthMismatch):
            one_step_variance(game, np.zeros(3))


class TestLemma1Identity:
    def test_equal_models_give_zero(self, rng):
        game = make_game(ns=3, na=2, gamma=0.9, seed=4)
        pair = make_pair(game, rng)
        r1, r2 = check_lemma1_identity(game, game, pair)
        assert r1 <= 1e-12 and r2 <= 1e-12

    def test_random_triples_within_tolerance(self, rng):
        for seed in range(10):
            game = make_game(ns=3, na=2, gamma=0.9, seed=10 + seed)
            emp = estimate_model(game, 50, seed=seed).estimate
            pair = make_pair(game, rng)
            r1, r2 = check_lemma1_identity(game, emp, pair)
            assert r1 <= 1e-8 and r2 <= 1e-8

    def test_shape_mismatch_rejected(self, rng):
        a = make_game(ns=3, na=2, gamma=0.9, seed=20)
        b = make_game(ns=4, na=2, gamma=0.9, seed=21)
        with pytest.raises(ShapeMismatch):
            check_lemma1_identity(a, b, make_pair(a, rng))


class TestVarianceBound:
    def test_deterministic_game_zero_lhs(self, rng):
        game = make_game(ns=4, na=2, gamma=0.9, seed=30, transition_support=1)
        pair = make_pair(game, rng)
        lhs, rhs = check_variance_bound(game, pair)
        assert lhs <= 1e-12
        assert rhs == pytest.approx(math.sqrt(2.0 / (1 - 0.9) ** 3))

    def test_gamma_zero_single_state(self):
        # one state at gamma=0: the value is a point mass, so the variance
        # term vanishes while the bound is sqrt(2)
        game = tiny_game([[1.0], [1.0]], [0.5, 0.25], [MAX], 0.0, na=2)
        pair = StrategyPair(mu=np.array([0]), nu=np.array([-1]))
        lhs, rhs = check_variance_bound(game, pair)
        assert lhs == 0.0
        assert rhs == pytest.approx(math.sqrt(2.0))

    def test_never_violated_on_random_draws(self, rng):
        for gamma in (0.5, 0.9):
            for seed in range(25):
                game = make_game(ns=4, na=2, gamma=gamma, seed=40 + seed)
                pair = make_pair(game, rng)
                lhs, rhs = check_variance_bound(game, pair)
                assert lhs <= rhs + 1e-9

    def test_estimate_variant_bounded_by_value_error(self, rng):
        # variance of the empirical value propagates to at most the horizon
        # bound plus the value error over the horizon
        from tbsg.solve import evaluate_pair

        for seed in range(10):
            game = make_game(ns=4, na=2, gamma=0.9, seed=60 + seed)
            emp = estimate_model(game, 30, seed=seed).estimate
            pair = make_pair(game, rng)
            lhs, _ = check_variance_bound_on_estimate(game, emp, pair)
            dq = float(np.max(np.abs(evaluate_pair(game, pair).q - evaluate_pair(emp, pair).q)))
            rhs = math.sqrt(2.0 / (1 - 0.9) ** 3) + dq / (1 - 0.9)
            assert lhs <= rhs + 1e-8


class TestBernstein:
    def test_deterministic_truth_never_violates(self):
        game = make_game(ns=4, na=2, gamma=0.9, seed=70, transition_support=1)
        emp = estimate_model(game, 25, seed=1)
        table, _ = nash_value_iteration(game, 1e-10)
        dev = np.abs((game.transitions - emp.estimate.transitions) @ table.v)
        bound = bernstein_envelope(emp, table.v, 0.1, variance_model=game)
        assert (dev <= bound).all()
        assert dev.max() == 0.0

    def test_zero_variance_rows_reduce_to_linear_term(self):
        game = make_game(ns=3, na=2, gamma=0.5, seed=71, transition_support=1)
        emp = estimate_model(game, 10, seed=2)
        v = np.full(3, 4.0)  # constant value: all variances vanish
        bound = bernstein_envelope(emp, v, 0.2, variance_model=game)
        expected = 2.0 * math.log(4.0 / 0.2) / (3.0 * (1 - 0.5) * 10)
        assert bound == pytest.approx(np.full(6, expected), abs=1e-15)

    def test_degenerate_delta(self):
        game = make_game(ns=3, na=2, gamma=0.5, seed=72)
        emp = estimate_model(game, 10, seed=3)
        with pytest.raises(DegenerateDelta):
            bernstein_envelope(emp, np.zeros(3), 0.0)

    def test_coverage_experiment_within_three_se(self):
        game = make_game(ns=4, na=2, gamma=0.9, seed=73)
        cov = bernstein_coverage_experiment(game, 50, 0.1, n_seeds=25, seed=9)
        assert cov.cells == 200
        se = math.sqrt(0.1 * 0.9 / cov.cells)
        assert cov.frequency <= 0.1 + 3 * se


class TestSampleSizeBound:
    def test_pinned_instantiation(self):
        # C * 4 / (0.125 * 1) = 32, times ln(4 / (0.5*0.5*1)) = ln 16
        query = SampleSizeQuery("theorem2", 2, 2, 0.5, 1.0, 0.5, constant_c=1.0)
        assert sample_size_bound(query) == 89

    def test_halving_epsilon_ratio(self):
        q1 = SampleSizeQuery("theorem2", 10, 10, 0.99, 0.01, 0.01, constant_c=1.0)
        q2 = SampleSizeQuery("theorem2", 10, 10, 0.99, 0.005, 0.01, constant_c=1.0)
        ratio = sample_size_bound(q2) / sample_size_bound(q1)
        assert 3.9 <= ratio <= 4.3

    def test_theorem1_gap_boundary(self):
        gamma = 0.75
        limit = (1 - gamma) ** -0.5
        ok = SampleSizeQuery("theorem1", 3, 2, gamma, limit, 0.1)
        assert sample_size_bound(ok) > 0
        with pytest.raises(RangeViolation) as exc:
            sample_size_bound(
                SampleSizeQuery("theorem1", 3, 2, gamma, limit * 1.01, 0.1)
            )
        assert "theorem1" in str(exc.value)

    def test_theorem2_and_3_allow_full_horizon_range(self):
        gamma = 0.75
        limit = (1 - gamma) ** -1.0
        for kind in ("theorem2", "theorem3"):
            assert sample_size_bound(SampleSizeQuery(kind, 3, 2, gamma, limit, 0.1)) > 0
            with pytest.raises(RangeViolation):
                sample_size_bound(SampleSizeQuery(kind, 3, 2, gamma, limit * 1.01, 0.1))

    def test_monotone_in_accuracy_and_horizon(self):
        base = SampleSizeQuery("theorem2", 4, 3, 0.9, 0.5, 0.1)
        assert sample_size_bound(base) < sample_size_bound(
            SampleSizeQuery("theorem2", 4, 3, 0.9, 0.25, 0.1)
        )
        assert sample_size_bound(base) < sample_size_bound(
            SampleSizeQuery("theorem2", 4, 3, 0.95, 0.5, 0.1)
        )

    def test_default_constant_is_128(self):
        assert SampleSizeQuery("theorem2", 2, 2, 0.5, 1.0, 0.5).constant_c == 128.0

    def test_unknown_kind_rejected(self):
        with pytest.raises(Exception):
            sample_size_bound(SampleSizeQuery("theorem4", 2, 2, 0.5, 1.0, 0.5))


class TestGapFrequency:
    def test_zero_xi_duplicate_actions_never_clears_positive_threshold(self):
        # duplicate arms keep the gap at exactly zero in every trial
        game = tiny_game([[1.0], [1.0]], [0.6, 0.6], [MAX], 0.5, na=2)
        report = gap_frequency_experiment(game, 0.0, 0.5, trials=20, seed=0)
        assert (report.gaps == 0.0).all()
        assert float(np.mean(report.gaps >= 0.05)) == 0.0

    def test_existing_large_gap_keeps_frequency_one(self):
        # perturbation moves values by at most xi/(1-gamma), far below the
        # built-in margin
        game = tiny_game([[1.0], [1.0]], [1.0, 0.0], [MAX], 0.5, na=2)
        report = gap_frequency_experiment(game, 0.01, 0.2, trials=20, seed=1)
        assert report.frequency_statement == 1.0
        assert report.frequency_proof == 1.0

    def test_random_game_meets_claimed_frequency(self):
        game = make_game(ns=4, na=3, gamma=0.9, seed=80)
        trials = 150
        report = gap_frequency_experiment(game, 0.1, 0.2, trials=trials, seed=2)
        se = math.sqrt(0.8 * 0.2 / trials)
        assert report.frequency_statement >= 0.8 - 3 * se
        assert report.threshold_statement < report.threshold_proof


class TestDeviationLemmas:
    def test_lemma5_bound_holds(self):
        for seed in range(8):
            game = make_game(ns=4, na=2, gamma=0.9, seed=90 + seed)
            emp = estimate_model(game, 100, seed=seed).estimate
            lhs, side_mu, side_nu = lemma5_sides(game, emp)
            assert lhs <= max(side_mu, side_nu) + 1e-8

    def test_lemma6_recovery_when_close(self):
        for seed in range(8):
            game = make_game(ns=4, na=2, gamma=0.9, seed=90 + seed)
            emp = estimate_model(game, 400, seed=seed).estimate
            applicable, holds = lemma6_exact_recovery(game, emp)
            assert holds

    def test_lemma10_bound_holds(self):
        for seed in range(6):
            game = make_game(ns=3, na=2, gamma=0.9, seed=100 + seed)
            xi = 0.05
            lhs, t1, t2 = lemma10_terms(game, 100, xi, seed)
            assert lhs <= t1 + t2 + 4 * xi / (1 - game.discount) + 1e-7
