"""Game representation, validation, and the on-disk JSON format.

A game couples a maximizing and a minimizing player over a shared action
set: every state is owned by exactly one player, who picks the action
there.  Transition rows are indexed row-major by (state, action):
``idx = s * num_actions + a``.  That convention is fixed and shared by
every array, file format, and kernel in the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyStateSet,
    GameFormatError,
    IndexOutOfRange,
    RewardOutOfRange,
    RowNotStochastic,
)

MAX = 0
MIN = 1

OWNER_NAMES = {MAX: "max", MIN: "min"}
OWNER_CODES = {"max": MAX, "min": MIN}

ROW_SUM_TOL = 1e-12

GAME_FORMAT_ID = "tbsg.game.v1"


@dataclass(frozen=True)
class GameModel:
    """Tabular two-player turn-based stochastic game.

    Immutable after construction; arrays are marked read-only so instances
    can be shared freely across workers.
    """

    num_states: int
    num_actions: int
    owner: np.ndarray        # int8, shape (S,), entries MAX or MIN
    transitions: np.ndarray  # float64, shape (S*A, S), row-stochastic
    rewards: np.ndarray      # float64, shape (S*A,)
    discount: float

    def __post_init__(self):
        object.__setattr__(self, "owner", _freeze(np.asarray(self.owner, dtype=np.int8)))
        object.__setattr__(
            self, "transitions", _freeze(np.asarray(self.transitions, dtype=np.float64))
        )
        object.__setattr__(
            self, "rewards", _freeze(np.asarray(self.rewards, dtype=np.float64))
        )

    @property
    def num_pairs(self) -> int:
        return self.num_states * self.num_actions

    def q_index(self, s: int, a: int) -> int:
        return s * self.num_actions + a

    def check_indices(self, s: int, a: int) -> None:
        if not 0 <= s < self.num_states:
            raise IndexOutOfRange("state", s, self.num_states)
        if not 0 <= a < self.num_actions:
            raise IndexOutOfRange("action", a, self.num_actions)

    def is_max_state(self, s: int) -> bool:
        return self.owner[s] == MAX

    def states_owned_by(self, side: int) -> np.ndarray:
        return np.flatnonzero(self.owner == side)

    def replace(self, *, transitions=None, rewards=None) -> "GameModel":
        """Copy with some arrays swapped; structural fields are kept."""
        return GameModel(
            num_states=self.num_states,
            num_actions=self.num_actions,
            owner=self.owner,
            transitions=self.transitions if transitions is None else transitions,
            rewards=self.rewards if rewards is None else rewards,
            discount=self.discount,
        )


@dataclass(frozen=True)
class StrategyPair:
    """Pure strategies for both players.

    ``mu`` and ``nu`` are length-S integer arrays holding one action per
    owned state and -1 elsewhere, so each acts as a map from owned states
    to actions.
    """

    mu: np.ndarray  # int64, shape (S,): actions at MAX states, -1 at MIN states
    nu: np.ndarray  # int64, shape (S,): actions at MIN states, -1 at MAX states

    def __post_init__(self):
        object.__setattr__(self, "mu", _freeze(np.asarray(self.mu, dtype=np.int64)))
        object.__setattr__(self, "nu", _freeze(np.asarray(self.nu, dtype=np.int64)))

    @property
    def joint(self) -> np.ndarray:
        """One action per state, whichever side owns it."""
        return np.where(self.mu >= 0, self.mu, self.nu)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StrategyPair):
            return NotImplemented
        return bool(np.array_equal(self.mu, other.mu) and np.array_equal(self.nu, other.nu))


@dataclass(frozen=True)
class ValueTable:
    """State-action values q and their state projection v."""

    q: np.ndarray  # float64, shape (S*A,)
    v: np.ndarray  # float64, shape (S,)

    def __post_init__(self):
        object.__setattr__(self, "q", _freeze(np.asarray(self.q, dtype=np.float64)))
        object.__setattr__(self, "v", _freeze(np.asarray(self.v, dtype=np.float64)))


@dataclass(frozen=True)
class GapReport:
    """Margin between best and runner-up optimal action values.

    ``nash_gap`` is the minimum margin over all measured states; it is
    ``inf`` (with ``witness=None``) when no state has two actions to
    compare.
    """

    nash_gap: float
    witness: tuple[int, int, int] | None  # (state, best action, runner-up action)
    per_state_margins: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "per_state_margins", _freeze(np.asarray(self.per_state_margins, dtype=np.float64))
        )


def _freeze(arr: np.ndarray) -> np.ndarray:
    if arr.flags.writeable:
        arr = arr.copy()
        arr.flags.writeable = False
    return arr


def validate_game(raw: GameModel, *, r_max: float = 1.0, r_min: float = 0.0) -> GameModel:
    """Check every structural invariant of a game and return it.

    Base games are validated against rewards in [0, 1]; perturbed games
    pass ``r_max = 1 + xi``.  Raises the specific violation with the
    offending index.
    """
    ns, na = raw.num_states, raw.num_actions
    if ns < 1 or na < 1:
        raise EmptyStateSet()
    if not 0.0 <= raw.discount < 1.0:
        raise GameFormatError(f"discount must lie in [0, 1), got {raw.discount!r}")
    if raw.owner.shape != (ns,):
        raise GameFormatError(f"owner must have shape ({ns},), got {raw.owner.shape}")
    if not np.isin(raw.owner, (MAX, MIN)).all():
        raise GameFormatError("owner entries must be MAX (0) or MIN (1)")
    if raw.transitions.shape != (ns * na, ns):
        raise GameFormatError(
            f"transitions must have shape ({ns * na}, {ns}), got {raw.transitions.shape}"
        )
    if raw.rewards.shape != (ns * na,):
        raise GameFormatError(
            f"rewards must have shape ({ns * na},), got {raw.rewards.shape}"
        )

    t = raw.transitions
    if not np.isfinite(t).all():
        bad = np.argwhere(~np.isfinite(t))[0]
        s, a = divmod(int(bad[0]), na)
        raise RowNotStochastic(s, a, float("nan"))
    if (t < 0.0).any() or (t > 1.0).any():
        bad = int(np.flatnonzero(((t < 0.0) | (t > 1.0)).any(axis=1))[0])
        s, a = divmod(bad, na)
        raise RowNotStochastic(s, a, float(t[bad].sum()))
    sums = t.sum(axis=1)
    off = np.abs(sums - 1.0)
    if (off > ROW_SUM_TOL).any():
        bad = int(np.argmax(off))
        s, a = divmod(bad, na)
        raise RowNotStochastic(s, a, float(sums[bad]))

    r = raw.rewards
    if not np.isfinite(r).all():
        bad = int(np.flatnonzero(~np.isfinite(r))[0])
        s, a = divmod(bad, na)
        raise RewardOutOfRange(s, a, float(r[bad]), r_min, r_max)
    if (r < r_min).any() or (r > r_max).any():
        bad = int(np.flatnonzero((r < r_min) | (r > r_max))[0])
        s, a = divmod(bad, na)
        raise RewardOutOfRange(s, a, float(r[bad]), r_min, r_max)

    return raw


def pair_matrix(model: GameModel, actions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """State-space transition matrix and reward vector induced by a joint
    action assignment (one action per state)."""
    ns, na = model.num_states, model.num_actions
    rows = np.arange(ns) * na + actions
    return model.transitions[rows], model.rewards[rows]


def induced_matrix(model: GameModel, actions: np.ndarray) -> np.ndarray:
    """Full (S*A x S*A) transition matrix of the Markov chain on
    state-action pairs under a joint action assignment."""
    ns, na = model.num_states, model.num_actions
    m = np.zeros((ns * na, ns * na))
    cols = np.arange(ns) * na + actions
    m[:, cols] = model.transitions
    return m


def project(model: GameModel, q: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """v(s) = q(s, actions[s])."""
    na = model.num_actions
    return q[np.arange(model.num_states) * na + actions]


# ---------------------------------------------------------------------------
# JSON round-trip.  Schema:
#   { "num_states", "num_actions", "owner": ["max"|"min", ...], "gamma",
#     "rewards": [row-major S*A], "transitions": [[row per (s,a)], ...] }
# ---------------------------------------------------------------------------


def game_to_dict(model: GameModel) -> dict:
    return {
        "num_states": model.num_states,
        "num_actions": model.num_actions,
        "owner": [OWNER_NAMES[int(o)] for o in model.owner],
        "gamma": model.discount,
        "rewards": model.rewards.tolist(),
        "transitions": model.transitions.tolist(),
    }


def game_from_dict(data: dict, *, r_max: float | None = None) -> GameModel:
    try:
        ns = int(data["num_states"])
        na = int(data["num_actions"])
        owner_names = data["owner"]
        gamma = float(data["gamma"])
        rewards = np.asarray(data["rewards"], dtype=np.float64)
        transitions = np.asarray(data["transitions"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise GameFormatError(f"malformed game document: {exc}") from exc
    try:
        owner = np.array([OWNER_CODES[str(o)] for o in owner_names], dtype=np.int8)
    except KeyError as exc:
        raise GameFormatError(f"unknown owner tag {exc.args[0]!r}") from exc
    model = GameModel(
        num_states=ns,
        num_actions=na,
        owner=owner,
        transitions=transitions,
        rewards=rewards,
        discount=gamma,
    )
    if r_max is None:
        r_max = max(1.0, float(rewards.max(initial=0.0)))
    return validate_game(model, r_max=r_max, r_min=min(0.0, float(rewards.min(initial=0.0))))


def save_game(model: GameModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(model), indent=2, sort_keys=True) + "\n")


def load_game(path: str | Path) -> GameModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"{path}: not valid JSON ({exc})") from exc
    return game_from_dict(data)
