"""Analytical game constructions: absorbing games, reward perturbation,
reward-value covers, and the reward-increment tracer.

These are the building blocks behind the concentration experiments: an
absorbing rewrite decouples a game from one estimated transition row, a
uniform reward perturbation manufactures a suboptimality gap, and the
tracer exposes the piecewise-linear response of equilibrium values to a
single reward increment.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateParams, NegativeXi, ValidationError
from .model import GameModel, StrategyPair, pair_matrix
from .sampling import substream
from .solve import MAX, counterstrategy, greedy_actions, nash_value_iteration

TRACE_SOLVE_TOL = 1e-10


@dataclass(frozen=True)
class AbsorbingSpec:
    """Target pair (s, a) and the self-loop reward u that replaces it."""

    s: int
    a: int
    u: float

    def __post_init__(self):
        if not math.isfinite(self.u):
            raise ValidationError(f"absorbing reward must be finite, got {self.u!r}")


@dataclass(frozen=True)
class PerturbationSpec:
    """Realized uniform [0, xi] noise added to the reward vector."""

    xi: float
    zeta: np.ndarray
    seed: int


@dataclass(frozen=True)
class CoverSet:
    """Equally spaced absorbing-reward values spanning [-1/(1-g), 1/(1-g)]."""

    points: np.ndarray
    gamma: float

    @property
    def spacing(self) -> float:
        return float(self.points[1] - self.points[0])

    def nearest(self, u: float) -> float:
        """Closest cover point to u (u clamped into the cover range)."""
        pts = self.points
        u = min(max(u, pts[0]), pts[-1])
        idx = int(np.searchsorted(pts, u))
        if idx == 0:
            return float(pts[0])
        if idx >= pts.shape[0]:
            return float(pts[-1])
        lo, hi = pts[idx - 1], pts[idx]
        return float(lo if u - lo <= hi - u else hi)


def make_absorbing(model: GameModel, spec: AbsorbingSpec) -> GameModel:
    """Redirect (s, a) to a self-loop paying u; everything else unchanged.

    The replaced reward may be negative, so the output deliberately skips
    the base-range reward validation at that one entry.
    """
    model.check_indices(spec.s, spec.a)
    bound = 1.0 / (1.0 - model.discount)
    if abs(spec.u) > bound * (1.0 + 1e-12):
        warnings.warn(
            f"absorbing reward {spec.u!r} lies outside [-{bound!r}, {bound!r}]",
            stacklevel=2,
        )
    idx = model.q_index(spec.s, spec.a)
    transitions = model.transitions.copy()
    transitions[idx] = 0.0
    transitions[idx, spec.s] = 1.0
    rewards = model.rewards.copy()
    rewards[idx] = spec.u
    return model.replace(transitions=transitions, rewards=rewards)


def _absorbing_reward(model: GameModel, s: int, a: int, v: np.ndarray) -> float:
    idx = model.q_index(s, a)
    g = model.discount
    return float(model.rewards[idx] + g * (model.transitions[idx] @ v) - g * v[s])


def u_star(model: GameModel, s: int, a: int, tol: float) -> float:
    """Self-loop reward whose absorbing game reproduces the original
    equilibrium values: u* = r(s,a) + g P(s,a).V* - g V*(s)."""
    model.check_indices(s, a)
    table, _ = nash_value_iteration(model, tol)
    u = _absorbing_reward(model, s, a, table.v)
    _warn_if_outside_range(u, model.discount)
    return u


def u_for_strategy(model: GameModel, mu: np.ndarray, s: int, a: int, tol: float) -> float:
    """Counterstrategy analogue of u_star, built from the minimizer's best
    response to the fixed maximizer strategy mu."""
    model.check_indices(s, a)
    _, table = counterstrategy(model, mu, MAX, tol)
    u = _absorbing_reward(model, s, a, table.v)
    _warn_if_outside_range(u, model.discount)
    return u


def _warn_if_outside_range(u: float, gamma: float) -> None:
    bound = 1.0 / (1.0 - gamma)
    if abs(u) > bound:
        warnings.warn(
            f"absorbing reward {u!r} falls outside the cover range "
            f"[-{bound!r}, {bound!r}]",
            stacklevel=3,
        )


def perturb_rewards(model: GameModel, xi: float, seed: int) -> tuple[GameModel, PerturbationSpec]:
    """Add i.i.d. uniform [0, xi] noise to every reward entry."""
    if xi < 0.0:
        raise NegativeXi(xi)
    zeta = xi * substream(seed).random(model.num_pairs)
    spec = PerturbationSpec(xi=float(xi), zeta=zeta, seed=int(seed))
    return model.replace(rewards=model.rewards + zeta), spec


def perturbation_gap_threshold(
    gamma: float, xi: float, delta: float, ns: int, na: int, variant: str = "statement"
) -> float:
    """Suboptimality gap a perturbed game enjoys with probability 1-delta.

    Two published variants disagree on the |S|/|A| exponents; the
    headline claim xi*delta*(1-gamma) / (4 |S|^2 |A|) is the default and
    the derivation's working constant xi*delta*(1-gamma) / (2 |S| |A|^2)
    is available as ``variant="proof"``.
    """
    if variant == "statement":
        return xi * delta * (1.0 - gamma) / (4.0 * ns * ns * na)
    if variant == "proof":
        return xi * delta * (1.0 - gamma) / (2.0 * ns * na * na)
    raise ValidationError(f"unknown threshold variant {variant!r}")


def cover_cardinality(gamma: float, xi: float, delta: float, ns: int, na: int) -> int:
    """Number of cover points: ceil(16 |S|^2 |A| / ((1-gamma)^2 xi delta))."""
    _check_cover_params(gamma, xi, delta)
    return int(math.ceil(16.0 * ns * ns * na / ((1.0 - gamma) ** 2 * xi * delta)))


def build_cover(gamma: float, xi: float, delta: float, ns: int, na: int) -> CoverSet:
    """Equally spaced cover of the absorbing-reward range.

    Uses at least the nominal cardinality, topped up where needed so that
    consecutive points are no further apart than
    xi*delta*(1-gamma)^2 / (4 |S|^2 |A|) — the approximation level the
    cover has to deliver.
    """
    n_formula = cover_cardinality(gamma, xi, delta, ns, na)
    gap = xi * delta * (1.0 - gamma) ** 2 / (4.0 * ns * ns * na)
    length = 2.0 / (1.0 - gamma)
    n_gap = int(math.ceil(length / gap)) + 1
    n = max(n_formula, n_gap, 2)
    bound = 1.0 / (1.0 - gamma)
    return CoverSet(points=np.linspace(-bound, bound, n), gamma=gamma)


def _check_cover_params(gamma: float, xi: float, delta: float) -> None:
    if not 0.0 <= gamma < 1.0:
        raise DegenerateParams(f"gamma must lie in [0, 1), got {gamma!r}")
    if xi <= 0.0:
        raise DegenerateParams(f"xi must be positive, got {xi!r}")
    if not 0.0 < delta <= 1.0:
        raise DegenerateParams(f"delta must lie in (0, 1], got {delta!r}")


@dataclass(frozen=True)
class TracePiece:
    """Maximal run of grid points sharing one equilibrium strategy."""

    start: int                 # first grid index of the piece
    stop: int                  # one past the last grid index
    actions: np.ndarray        # joint strategy on the piece, shape (S,)
    slope: np.ndarray          # d q*/d tau on the piece, shape (S*A,)
    intercept: np.ndarray      # q* at tau=0 extrapolated, shape (S*A,)
    linfit_residual: float     # max |q*_obs - (slope*tau + intercept)| over the piece


@dataclass(frozen=True)
class TauTrace:
    """Equilibrium response to incrementing one reward entry by tau."""

    s: int
    a: int
    gamma: float
    grid: np.ndarray           # shape (T,)
    qstar_rows: np.ndarray     # shape (T, A): q*_tau(s, .)
    strategies: np.ndarray     # shape (T, S): joint equilibrium strategy per tau
    pieces: tuple[TracePiece, ...]

    def piece_ids(self) -> np.ndarray:
        ids = np.empty(self.grid.shape[0], dtype=np.int64)
        for k, piece in enumerate(self.pieces):
            ids[piece.start:piece.stop] = k
        return ids

    def target_increments(self) -> np.ndarray:
        """q*_tau(s,a) differences between adjacent grid points."""
        col = self.qstar_rows[:, self.a]
        return np.diff(col)

    def max_slope_ratio_excess(self) -> float:
        """Largest amount by which any other action's per-piece slope at
        state s exceeds gamma times the slope of the traced action."""
        na = self.qstar_rows.shape[1]
        worst = -np.inf
        base = self.s * na
        for piece in self.pieces:
            k_target = piece.slope[base + self.a]
            for a2 in range(na):
                if a2 == self.a:
                    continue
                worst = max(worst, piece.slope[base + a2] - self.gamma * k_target)
        return float(worst)

    def max_linfit_residual(self) -> float:
        return max(piece.linfit_residual for piece in self.pieces)


def trace_nash_q_vs_tau(
    model: GameModel,
    s: int,
    a: int,
    tau_grid: np.ndarray,
    tol: float,
) -> TauTrace:
    """Solve the game at every tau in the grid with r(s,a) shifted by tau,
    and segment the sweep into linear pieces of constant strategy.

    Pieces are whatever the grid resolution reveals.  Slopes and
    intercepts per piece come from an exact evaluation of the piece's
    strategy, not a least-squares fit, so the recorded residual directly
    measures how linear the observed values are.
    """
    model.check_indices(s, a)
    tau_grid = np.asarray(tau_grid, dtype=np.float64)
    if tau_grid.ndim != 1 or tau_grid.shape[0] < 1:
        raise ValidationError("tau grid must be a nonempty 1-D array")
    if tau_grid.shape[0] > 1 and not (np.diff(tau_grid) > 0).all():
        raise ValidationError("tau grid must be strictly increasing")

    ns, na = model.num_states, model.num_actions
    idx = model.q_index(s, a)
    solve_tol = min(tol, TRACE_SOLVE_TOL)

    qstars = np.empty((tau_grid.shape[0], ns * na))
    strategies = np.empty((tau_grid.shape[0], ns), dtype=np.int64)
    for t, tau in enumerate(tau_grid):
        rewards = model.rewards.copy()
        rewards[idx] += tau
        shifted = model.replace(rewards=rewards)
        table, _ = nash_value_iteration(shifted, solve_tol)
        qstars[t] = table.q
        strategies[t] = greedy_actions(shifted, table.q)

    pieces = []
    start = 0
    for t in range(1, tau_grid.shape[0] + 1):
        if t == tau_grid.shape[0] or not np.array_equal(strategies[t], strategies[start]):
            pieces.append(_fit_piece(model, idx, tau_grid, qstars, strategies[start], start, t))
            start = t

    return TauTrace(
        s=s,
        a=a,
        gamma=model.discount,
        grid=tau_grid,
        qstar_rows=qstars[:, s * na : (s + 1) * na].copy(),
        strategies=strategies,
        pieces=tuple(pieces),
    )


def _fit_piece(
    model: GameModel,
    idx: int,
    grid: np.ndarray,
    qstars: np.ndarray,
    actions: np.ndarray,
    start: int,
    stop: int,
) -> TracePiece:
    """Exact slope/intercept of q*_tau while the strategy stays fixed.

    With the strategy pinned, q_tau = r + tau*e_idx + gamma*P v_tau is
    affine in tau: dv/dtau solves the policy-evaluation system with the
    indicator of (s, a) being played, and dq/dtau lifts it.
    """
    ns = model.num_states
    g = model.discount
    p_pi, _ = pair_matrix(model, actions)
    a_mat = np.eye(ns) - g * p_pi
    e = np.zeros(ns)
    state = idx // model.num_actions
    if actions[state] == idx % model.num_actions:
        e[state] = 1.0
    dv = np.linalg.solve(a_mat, e)
    slope = np.zeros(model.num_pairs)
    slope[idx] = 1.0
    slope += g * (model.transitions @ dv)
    tau0 = grid[start]
    intercept = qstars[start] - slope * tau0
    taus = grid[start:stop, None]
    resid = float(np.max(np.abs(qstars[start:stop] - (slope[None, :] * taus + intercept[None, :]))))
    return TracePiece(
        start=start,
        stop=stop,
        actions=np.asarray(actions, dtype=np.int64).copy(),
        slope=slope,
        intercept=intercept,
        linfit_residual=resid,
    )


def trace_to_csv(trace: TauTrace, path: str | Path) -> None:
    """Columns: tau, piece_id, action, qstar, slope_fit, intercept_fit."""
    na = trace.qstar_rows.shape[1]
    ids = trace.piece_ids()
    base = trace.s * na
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tau", "piece_id", "action", "qstar", "slope_fit", "intercept_fit"])
        for t, tau in enumerate(trace.grid):
            piece = trace.pieces[ids[t]]
            for action in range(na):
                writer.writerow(
                    [
                        repr(float(tau)),
                        int(ids[t]),
                        action,
                        repr(float(trace.qstar_rows[t, action])),
                        repr(float(piece.slope[base + action])),
                        repr(float(piece.intercept[base + action])),
                    ]
                )
