"""Seeded random game generation for experiments and tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpec
from .model import MAX, MIN, GameModel, validate_game
from .sampling import substream

OWNER_PATTERNS = ("alternate", "random", "all_max")
REWARD_LAWS = ("uniform01", "bernoulli", "custom")


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a random game; identical specs generate identical games.

    ``transition_support`` is the number of successor states per row
    (defaults to dense).  ``p_max`` only matters for the "random" owner
    pattern, ``reward_p`` for the "bernoulli" law, ``reward_values`` for
    the "custom" law.
    """

    ns: int
    na: int
    gamma: float
    owner_pattern: str = "alternate"
    p_max: float = 0.5
    transition_support: int | None = None
    reward_law: str = "uniform01"
    reward_p: float = 0.5
    reward_values: tuple[float, ...] | None = None
    seed: int = 0


def generate_game(spec: GeneratorSpec) -> GameModel:
    """Draw a validated game from the spec's dedicated RNG substream.

    Draw order is fixed (owners, then support and weights row by row,
    then rewards) so generated games are bit-reproducible.
    """
    ns, na = spec.ns, spec.na
    if ns < 1 or na < 1:
        raise DegenerateSpec(f"need ns >= 1 and na >= 1, got ns={ns}, na={na}")
    if not 0.0 <= spec.gamma < 1.0:
        raise DegenerateSpec(f"gamma must lie in [0, 1), got {spec.gamma!r}")
    support = ns if spec.transition_support is None else spec.transition_support
    if not 1 <= support <= ns:
        raise DegenerateSpec(f"transition support must lie in [1, {ns}], got {support}")
    if spec.owner_pattern not in OWNER_PATTERNS:
        raise DegenerateSpec(f"unknown owner pattern {spec.owner_pattern!r}")
    if spec.reward_law not in REWARD_LAWS:
        raise DegenerateSpec(f"unknown reward law {spec.reward_law!r}")

    rng = substream(spec.seed)

    if spec.owner_pattern == "alternate":
        owner = np.where(np.arange(ns) % 2 == 0, MAX, MIN).astype(np.int8)
    elif spec.owner_pattern == "random":
        owner = np.where(rng.random(ns) < spec.p_max, MAX, MIN).astype(np.int8)
    else:
        owner = np.full(ns, MAX, dtype=np.int8)

    transitions = np.zeros((ns * na, ns))
    for row in range(ns * na):
        succ = rng.choice(ns, size=support, replace=False)
        weights = rng.random(support)
        total = weights.sum()
        if total == 0.0:
            weights = np.ones(support)
            total = float(support)
        transitions[row, succ] = weights / total

    m = ns * na
    if spec.reward_law == "uniform01":
        rewards = rng.random(m)
    elif spec.reward_law == "bernoulli":
        rewards = (rng.random(m) < spec.reward_p).astype(np.float64)
    else:
        if spec.reward_values is None or len(spec.reward_values) != m:
            raise DegenerateSpec(
                f"custom reward law needs {m} values, got "
                f"{None if spec.reward_values is None else len(spec.reward_values)}"
            )
        rewards = np.asarray(spec.reward_values, dtype=np.float64)

    model = GameModel(
        num_states=ns,
        num_actions=na,
        owner=owner,
        transitions=transitions,
        rewards=rewards,
        discount=spec.gamma,
    )
    return validate_game(model)
