"""Shared fixtures and small oracles used across the suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from tbsg.generators import GeneratorSpec, generate_game
from tbsg.model import MAX, MIN, GameModel, StrategyPair, validate_game


def make_game(ns, na, gamma, seed, owner_pattern="random", **kw) -> GameModel:
    return generate_game(
        GeneratorSpec(ns=ns, na=na, gamma=gamma, owner_pattern=owner_pattern, seed=seed, **kw)
    )


def make_pair(model: GameModel, rng: np.random.Generator) -> StrategyPair:
    acts = rng.integers(0, model.num_actions, size=model.num_states)
    return StrategyPair(
        mu=np.where(model.owner == MAX, acts, -1),
        nu=np.where(model.owner == MIN, acts, -1),
    )


def all_one_sided(model: GameModel, side: int):
    """Every pure strategy for one side, as length-S arrays with -1 at the
    other side's states."""
    states = model.states_owned_by(side)
    for choice in itertools.product(range(model.num_actions), repeat=len(states)):
        strat = np.full(model.num_states, -1, dtype=np.int64)
        strat[states] = choice
        yield strat


def truncated_bellman(model: GameModel, actions: np.ndarray, steps: int = 200) -> np.ndarray:
    """Independent oracle for pair evaluation: iterate the evaluation
    backup from zero for a fixed number of steps."""
    na = model.num_actions
    rows = np.arange(model.num_states) * na + actions
    q = np.zeros(model.num_pairs)
    for _ in range(steps):
        v = q[rows]
        q = model.rewards + model.discount * (model.transitions @ v)
    return q


def tiny_game(transitions, rewards, owner, gamma, na) -> GameModel:
    transitions = np.asarray(transitions, dtype=np.float64)
    rewards = np.asarray(rewards, dtype=np.float64)
    owner = np.asarray(owner, dtype=np.int8)
    model = GameModel(
        num_states=owner.shape[0],
        num_actions=na,
        owner=owner,
        transitions=transitions,
        rewards=rewards,
        discount=gamma,
    )
    return validate_game(
        model,
        r_max=max(1.0, float(rewards.max())),
        r_min=min(0.0, float(rewards.min())),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
