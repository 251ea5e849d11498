"""Bundled game corpus: hand-built games with pencil-and-paper values plus
seeded generator specs.  The lemma verification suite treats this corpus
as its release gate."""

from __future__ import annotations

import numpy as np

from .generators import GeneratorSpec, generate_game
from .model import MAX, MIN, GameModel, validate_game


def unit_loop() -> GameModel:
    """One maximizer state, one self-loop action, r=0.5, gamma=0.9: v = 5."""
    return validate_game(
        GameModel(
            num_states=1,
            num_actions=1,
            owner=np.array([MAX], dtype=np.int8),
            transitions=np.array([[1.0]]),
            rewards=np.array([0.5]),
            discount=0.9,
        )
    )


def two_arm_loop() -> GameModel:
    """One maximizer state with two self-loop arms paying 1 and 0 at
    gamma=0.5: Q* = (2, 1), gap = 1, best arm 0."""
    return validate_game(
        GameModel(
            num_states=1,
            num_actions=2,
            owner=np.array([MAX], dtype=np.int8),
            transitions=np.array([[1.0], [1.0]]),
            rewards=np.array([1.0, 0.0]),
            discount=0.5,
        )
    )


def alternating_cycle() -> GameModel:
    """Two states passing the turn back and forth (single action), r = (1, 0),
    gamma=0.5: v = (4/3, 2/3)."""
    return validate_game(
        GameModel(
            num_states=2,
            num_actions=1,
            owner=np.array([MAX, MIN], dtype=np.int8),
            transitions=np.array([[0.0, 1.0], [1.0, 0.0]]),
            rewards=np.array([1.0, 0.0]),
            discount=0.5,
        )
    )


def corner_duel() -> GameModel:
    """Two states, two actions, gamma=0.5.

    Maximizer state 0: action 0 loops home for r=1, action 1 hands the
    turn over for r=0.  Minimizer state 1: action 0 idles for r=0,
    action 1 pays r=1 and returns the turn.  Equilibrium: both idle on
    action 0, V = (2, 0), Q* rows (2, 0) and (0, 2), gap = 2.
    """
    return validate_game(
        GameModel(
            num_states=2,
            num_actions=2,
            owner=np.array([MAX, MIN], dtype=np.int8),
            transitions=np.array(
                [
                    [1.0, 0.0],  # (s0, a0) stay
                    [0.0, 1.0],  # (s0, a1) hand over
                    [0.0, 1.0],  # (s1, a0) idle
                    [1.0, 0.0],  # (s1, a1) pay and return
                ]
            ),
            rewards=np.array([1.0, 0.0, 0.0, 1.0]),
            discount=0.5,
        )
    )


def zero_pair() -> GameModel:
    """Two states, two actions, uniform transitions, all rewards zero:
    Q* = 0 everywhere and every strategy is an equilibrium."""
    return validate_game(
        GameModel(
            num_states=2,
            num_actions=2,
            owner=np.array([MAX, MIN], dtype=np.int8),
            transitions=np.full((4, 2), 0.5),
            rewards=np.zeros(4),
            discount=0.9,
        )
    )


def hand_built_games() -> dict[str, GameModel]:
    return {
        "unit-loop": unit_loop(),
        "two-arm-loop": two_arm_loop(),
        "alternating-cycle": alternating_cycle(),
        "corner-duel": corner_duel(),
        "zero-pair": zero_pair(),
    }


def corpus_specs() -> list[GeneratorSpec]:
    """Twenty seeded generator specs spanning sizes, discounts, ownership
    patterns, sparsity, and reward laws."""
    specs = []
    sizes = [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3), (6, 2), (6, 3), (8, 3), (10, 4), (3, 3)]
    gammas = [0.5, 0.9]
    patterns = ["alternate", "random", "alternate", "random", "alternate",
                "random", "alternate", "random", "alternate", "all_max"]
    for k in range(20):
        ns, na = sizes[k % len(sizes)]
        specs.append(
            GeneratorSpec(
                ns=ns,
                na=na,
                gamma=gammas[k % 2],
                owner_pattern=patterns[k % len(patterns)],
                p_max=0.5,
                transition_support=min(ns, 3) if k % 3 == 0 else None,
                reward_law="bernoulli" if k % 5 == 4 else "uniform01",
                seed=100 + k,
            )
        )
    return specs


def bundled_games() -> dict[str, GameModel]:
    games = dict(hand_built_games())
    for k, spec in enumerate(corpus_specs()):
        games[f"spec-{k:02d}"] = generate_game(spec)
    return games


# ---------------------------------------------------------------------------
# Truth games for the sampling scaling studies (10 states, 4 actions,
# gamma = 0.9).  Both use a two-pole architecture: eight decision states
# branch between an absorbing high-value state ("heaven", V = 10) and an
# absorbing zero state ("hell", V = 0), so per-action branch-probability
# spacing d sets the action margin exactly (gamma * d * 10 per unit of
# self-loop-free mass) while the near-even branch keeps the estimation
# variance at its maximum.
# ---------------------------------------------------------------------------


def _two_pole_game(spacing, self_loop: float) -> GameModel:
    ns, na = 10, 4
    owner = np.array([MAX, MIN] * 5, dtype=np.int8)
    transitions = np.zeros((ns * na, ns))
    rewards = np.zeros(ns * na)
    for s in range(8):
        base = 0.30 + 0.05 * s
        for a in range(na):
            d = spacing(s, a)
            p = base - d if owner[s] == MAX else base + d
            row = s * na + a
            transitions[row, s] = self_loop
            transitions[row, 8] = (1.0 - self_loop) * p
            transitions[row, 9] = (1.0 - self_loop) * (1.0 - p)
    for a in range(na):
        transitions[8 * na + a, 8] = 1.0
        rewards[8 * na + a] = 1.0 - 0.1 * a
        transitions[9 * na + a, 9] = 1.0
        rewards[9 * na + a] = 0.0 + 0.1 * a
    return validate_game(
        GameModel(
            num_states=ns,
            num_actions=na,
            owner=owner,
            transitions=transitions,
            rewards=rewards,
            discount=0.9,
        )
    )


def scaling_slope_game() -> GameModel:
    """Deviation-scaling truth: action margins spread log-style from ~2e-3
    to ~0.2 so some states sit at the noise level of every budget, making
    the certified deviation track the sampling error cleanly."""
    return _two_pole_game(lambda s, a: 0.0005 * 2.0 ** (s / 1.4) * a, self_loop=0.5)


def scaling_recovery_game() -> GameModel:
    """Exact-recovery truth: uniform branch spacing 0.02 puts a margin of
    exactly 0.09 at every decision state (gamma * (1 - self_loop) * d * 10),
    so the equilibrium strategy is essentially never recovered at small
    budgets and almost always at large ones."""
    return _two_pole_game(lambda s, a: 0.02 * a, self_loop=0.5)
