"""Random game generation and the bundled corpus."""

import numpy as np
import pytest

from tbsg.analysis import one_step_variance
from tbsg.corpus import (
    bundled_games,
    corpus_specs,
    hand_built_games,
    scaling_recovery_game,
    scaling_slope_game,
)
from tbsg.errors import DegenerateSpec
from tbsg.generators import GeneratorSpec, generate_game
from tbsg.model import MAX, MIN, validate_game
from tbsg.solve import nash_value_iteration, suboptimality_gap_nash


class TestGenerateGame:
    def test_same_spec_bit_identical(self):
        spec = GeneratorSpec(ns=5, na=3, gamma=0.9, owner_pattern="random", seed=7)
        g1, g2 = generate_game(spec), generate_game(spec)
        assert np.array_equal(g1.transitions, g2.transitions)
        assert np.array_equal(g1.rewards, g2.rewards)
        assert np.array_equal(g1.owner, g2.owner)

    def test_support_one_is_deterministic(self):
        game = generate_game(
            GeneratorSpec(ns=4, na=2, gamma=0.5, transition_support=1, seed=1)
        )
        assert ((game.transitions == 0.0) | (game.transitions == 1.0)).all()
        v = np.arange(4, dtype=float)
        assert np.array_equal(one_step_variance(game, v), np.zeros(8))

    def test_alternate_owner_pattern(self):
        game = generate_game(GeneratorSpec(ns=4, na=2, gamma=0.5, seed=0))
        assert game.owner.tolist() == [MAX, MIN, MAX, MIN]

    def test_all_max_pattern(self):
        game = generate_game(
            GeneratorSpec(ns=3, na=2, gamma=0.5, owner_pattern="all_max", seed=0)
        )
        assert (game.owner == MAX).all()

    def test_bernoulli_rewards_are_binary(self):
        game = generate_game(
            GeneratorSpec(ns=4, na=2, gamma=0.5, reward_law="bernoulli", reward_p=0.3, seed=2)
        )
        assert set(np.unique(game.rewards)) <= {0.0, 1.0}

    def test_custom_rewards(self):
        values = tuple(np.linspace(0, 1, 8))
        game = generate_game(
            GeneratorSpec(ns=4, na=2, gamma=0.5, reward_law="custom",
                          reward_values=values, seed=0)
        )
        assert np.array_equal(game.rewards, np.array(values))

    def test_degenerate_specs_rejected(self):
        with pytest.raises(DegenerateSpec):
            generate_game(GeneratorSpec(ns=0, na=2, gamma=0.5))
        with pytest.raises(DegenerateSpec):
            generate_game(GeneratorSpec(ns=3, na=2, gamma=1.0))
        with pytest.raises(DegenerateSpec):
            generate_game(GeneratorSpec(ns=3, na=2, gamma=0.5, transition_support=4))
        with pytest.raises(DegenerateSpec):
            generate_game(GeneratorSpec(ns=3, na=2, gamma=0.5, reward_law="custom"))

    def test_generated_games_validate(self):
        for seed in range(10):
            game = generate_game(
                GeneratorSpec(ns=6, na=3, gamma=0.9, owner_pattern="random",
                              transition_support=2, seed=seed)
            )
            validate_game(game)


class TestCorpus:
    def test_unit_loop_value(self):
        table, _ = nash_value_iteration(hand_built_games()["unit-loop"], 1e-10)
        assert table.v[0] == pytest.approx(5.0, abs=1e-9)

    def test_two_arm_loop_values_and_gap(self):
        game = hand_built_games()["two-arm-loop"]
        table, pair = nash_value_iteration(game, 1e-10)
        assert table.q == pytest.approx([2.0, 1.0], abs=1e-9)
        assert pair.mu[0] == 0
        assert suboptimality_gap_nash(game, table).nash_gap == pytest.approx(1.0, abs=1e-9)

    def test_alternating_cycle_values(self):
        table, _ = nash_value_iteration(hand_built_games()["alternating-cycle"], 1e-10)
        assert table.v == pytest.approx([4.0 / 3.0, 2.0 / 3.0], abs=1e-9)

    def test_corner_duel_values(self):
        game = hand_built_games()["corner-duel"]
        table, pair = nash_value_iteration(game, 1e-10)
        assert table.v == pytest.approx([2.0, 0.0], abs=1e-9)
        assert pair.joint.tolist() == [0, 0]
        assert suboptimality_gap_nash(game, table).nash_gap == pytest.approx(2.0, abs=1e-9)

    def test_zero_pair_is_flat(self):
        table, _ = nash_value_iteration(hand_built_games()["zero-pair"], 1e-10)
        assert np.max(np.abs(table.q)) == 0.0

    def test_corpus_has_five_hand_games_and_twenty_specs(self):
        assert len(hand_built_games()) == 5
        assert len(corpus_specs()) == 20
        assert len(bundled_games()) == 25

    def test_all_bundled_games_validate(self):
        for name, game in bundled_games().items():
            validate_game(game)

    def test_scaling_games_have_pinned_gaps(self):
        slope = scaling_slope_game()
        table, _ = nash_value_iteration(slope, 1e-10)
        assert suboptimality_gap_nash(slope, table).nash_gap == pytest.approx(
            0.00225, abs=1e-6
        )
        recovery = scaling_recovery_game()
        table, _ = nash_value_iteration(recovery, 1e-10)
        # margin gamma * (1 - self_loop) * d * V(heaven) = 0.9 * 0.01 * 10
        assert suboptimality_gap_nash(recovery, table).nash_gap == pytest.approx(
            0.09, abs=1e-6
        )

    def test_scaling_games_shape(self):
        for game in (scaling_slope_game(), scaling_recovery_game()):
            assert game.num_states == 10
            assert game.num_actions == 4
            assert game.discount == 0.9
