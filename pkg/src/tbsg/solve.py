"""Exact planners: pair evaluation, best responses, and equilibrium solvers.

All solvers share one tie-break rule — the lowest action index wins — so
identical inputs always produce bit-identical strategies.  Linear systems
are solved by direct dense factorization; games here are small tabular
objects by design.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._kernels import MODE_MAX, MODE_MIN, value_iterate
from .errors import (
    IndexOutOfRange,
    NoConvergence,
    SingularSystem,
    NotOptimalTable,
    TooLarge,
    ValidationError,
)
from .model import (
    MAX,
    MIN,
    GameModel,
    GapReport,
    StrategyPair,
    ValueTable,
    pair_matrix,
    project,
)

VI_MAX_ITERS = 200_000
PI_MAX_ITERS = 1_000
SI_MAX_ITERS = 10_000
ENUMERATION_GUARD = 1_000_000
OPTIMAL_RESIDUAL_LIMIT = 1e-6


def _check_tol(tol: float) -> None:
    if not tol > 0.0:
        raise ValidationError(f"tolerance must be positive, got {tol!r}")


def _stop_residual(gamma: float, tol: float) -> float:
    """Residual level at which the iterate is within ``tol`` of the fixed
    point: |q - q*| <= gamma * resid / (1 - gamma)."""
    if gamma == 0.0:
        return 0.0
    return tol * (1.0 - gamma) / (2.0 * gamma)


def greedy_actions(model: GameModel, q: np.ndarray) -> np.ndarray:
    """Per-state argmax (MAX owner) / argmin (MIN owner), first index wins ties."""
    q3 = q.reshape(model.num_states, model.num_actions)
    return np.where(model.owner == MAX, np.argmax(q3, axis=1), np.argmin(q3, axis=1))


def greedy_pair(model: GameModel, q: np.ndarray) -> StrategyPair:
    acts = greedy_actions(model, q)
    mu = np.where(model.owner == MAX, acts, -1)
    nu = np.where(model.owner == MIN, acts, -1)
    return StrategyPair(mu=mu, nu=nu)


def _owner_values(model: GameModel, q: np.ndarray) -> np.ndarray:
    q3 = q.reshape(model.num_states, model.num_actions)
    return np.where(model.owner == MAX, q3.max(axis=1), q3.min(axis=1))


def shapley_residual(model: GameModel, q: np.ndarray) -> float:
    """Sup-norm distance between q and one application of the equilibrium
    backup r + gamma * P m(q)."""
    v = _owner_values(model, q)
    tq = model.rewards + model.discount * (model.transitions @ v)
    return float(np.max(np.abs(tq - q)))


def _check_assignment(model: GameModel, actions: np.ndarray, states: np.ndarray, what: str) -> None:
    for s in states:
        a = int(actions[s])
        if not 0 <= a < model.num_actions:
            raise IndexOutOfRange(f"{what} action at state {int(s)}", a, model.num_actions)


def evaluate_pair(model: GameModel, pair: StrategyPair) -> ValueTable:
    """Exact values of a complete strategy pair via one linear solve.

    Solves v = r_pi + gamma * P_pi v in state space, then lifts to
    q = r + gamma * P v.
    """
    actions = pair.joint
    _check_assignment(model, actions, np.arange(model.num_states), "pair")
    return _evaluate_actions(model, actions)


def _evaluate_actions(model: GameModel, actions: np.ndarray) -> ValueTable:
    p_pi, r_pi = pair_matrix(model, actions)
    a = np.eye(model.num_states) - model.discount * p_pi
    try:
        v = np.linalg.solve(a, r_pi)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.isfinite(v).all():
        raise SingularSystem("policy evaluation produced non-finite values")
    q = model.rewards + model.discount * (model.transitions @ v)
    return ValueTable(q=q, v=project(model, q, actions))


def counterstrategy(
    model: GameModel,
    fixed: np.ndarray,
    fixed_side: int,
    tol: float,
    max_iters: int = PI_MAX_ITERS,
) -> tuple[np.ndarray, ValueTable]:
    """Exact best response to one side's fixed strategy.

    Fixing one side turns the game into an MDP for the other player;
    Howard policy iteration (exact evaluation + greedy improvement,
    switching only on strict improvement) solves it to linear-solve
    precision.  Returns the responder's strategy (length-S array, -1 at
    the fixed side's states) and the full optimal table.
    """
    _check_tol(tol)
    fixed = np.asarray(fixed, dtype=np.int64)
    fixed_states = model.states_owned_by(fixed_side)
    responder_side = MIN if fixed_side == MAX else MAX
    resp_states = model.states_owned_by(responder_side)
    _check_assignment(model, fixed, fixed_states, "fixed")

    actions = np.zeros(model.num_states, dtype=np.int64)
    actions[fixed_states] = fixed[fixed_states]

    table = _evaluate_actions(model, actions)
    for _ in range(max_iters):
        q3 = table.q.reshape(model.num_states, model.num_actions)
        if responder_side == MAX:
            cand = np.argmax(q3, axis=1)
            better = q3[np.arange(model.num_states), cand] > q3[np.arange(model.num_states), actions]
        else:
            cand = np.argmin(q3, axis=1)
            better = q3[np.arange(model.num_states), cand] < q3[np.arange(model.num_states), actions]
        switch = np.zeros(model.num_states, dtype=bool)
        switch[resp_states] = better[resp_states]
        if not switch.any():
            break
        actions = np.where(switch, cand, actions)
        table = _evaluate_actions(model, actions)
    else:
        raise NoConvergence(max_iters)

    # Greedy re-extraction keeps the returned strategy on the shared
    # first-index tie-break regardless of the improvement path taken.
    q3 = table.q.reshape(model.num_states, model.num_actions)
    if responder_side == MAX:
        greedy = np.argmax(q3, axis=1)
    else:
        greedy = np.argmin(q3, axis=1)
    response = np.where(model.owner == responder_side, greedy, -1)
    final_actions = np.where(model.owner == responder_side, greedy, actions)
    v = project(model, table.q, final_actions)
    return response, ValueTable(q=table.q, v=v)


def nash_value_iteration(
    model: GameModel, tol: float, max_iters: int = VI_MAX_ITERS
) -> tuple[ValueTable, StrategyPair]:
    """Equilibrium values by iterating the max/min backup to its fixed point.

    Stops once the iteration residual reaches tol*(1-gamma)/(2*gamma),
    which pins the sup-norm error of q below tol.
    """
    _check_tol(tol)
    mode = np.where(model.owner == MAX, MODE_MAX, MODE_MIN).astype(np.int64)
    stop = _stop_residual(model.discount, tol)
    q, _, resid = value_iterate(
        model.transitions, model.rewards, mode, model.discount, stop, max_iters
    )
    if resid > stop:
        raise NoConvergence(max_iters, resid)
    pair = greedy_pair(model, q)
    return ValueTable(q=q, v=_owner_values(model, q)), pair


def nash_strategy_iteration(
    model: GameModel, tol: float, max_iters: int = SI_MAX_ITERS
) -> tuple[ValueTable, StrategyPair]:
    """Equilibrium by iterating over maximizer strategies.

    Each round fixes the maximizer's strategy, computes the minimizer's
    exact counterstrategy, and greedily improves the maximizer where the
    response values show strict gains.  The maximizer's values increase
    monotonically and the loop stops at a stable strategy.
    """
    _check_tol(tol)
    max_states = model.states_owned_by(MAX)
    mu = np.where(model.owner == MAX, 0, -1).astype(np.int64)

    table = None
    for _ in range(max_iters):
        _, table = counterstrategy(model, mu, MAX, tol)
        q3 = table.q.reshape(model.num_states, model.num_actions)
        cand = np.argmax(q3, axis=1)
        rows = np.arange(model.num_states)
        cur = np.where(mu >= 0, mu, 0)
        better = q3[rows, cand] > q3[rows, cur]
        switch = np.zeros(model.num_states, dtype=bool)
        switch[max_states] = better[max_states]
        if not switch.any():
            break
        mu = np.where(switch, cand, mu)
    else:
        raise NoConvergence(max_iters)

    pair = greedy_pair(model, table.q)
    return ValueTable(q=table.q, v=_owner_values(model, table.q)), pair


def brute_force_nash(
    model: GameModel, guard: int = ENUMERATION_GUARD
) -> tuple[ValueTable, StrategyPair]:
    """Reference oracle: enumerate every pure joint assignment, evaluate it
    exactly, and return the one satisfying the equilibrium stability
    conditions (each side one-step greedy against the other).
    """
    ns, na = model.num_states, model.num_actions
    n_assignments = na**ns
    if n_assignments > guard:
        raise TooLarge(n_assignments, guard)

    rows = np.arange(ns)
    best_resid = np.inf
    best_q = None
    for assignment in itertools.product(range(na), repeat=ns):
        actions = np.asarray(assignment, dtype=np.int64)
        table = _evaluate_actions(model, actions)
        q3 = table.q.reshape(ns, na)
        m = _owner_values(model, table.q)
        resid = float(np.max(np.abs(q3[rows, actions] - m)))
        if resid < best_resid:
            best_resid = resid
            best_q = table.q
            if resid <= 1e-10:
                break
    if best_q is None or best_resid > 1e-8:
        raise SingularSystem(
            f"no enumerated assignment is stable (best residual {best_resid:.3e})"
        )
    pair = greedy_pair(model, best_q)
    return ValueTable(q=best_q, v=_owner_values(model, best_q)), pair


def _margin_report(model: GameModel, q: np.ndarray, measured: np.ndarray) -> GapReport:
    """Minimum best-vs-runner-up margin over ``measured`` states.

    Margins are computed in the owning player's direction, so they are
    nonnegative either way; single-action games yield the +inf sentinel.
    """
    ns, na = model.num_states, model.num_actions
    margins = np.full(ns, np.inf)
    if na >= 2 and measured.any():
        q3 = q.reshape(ns, na)
        srt = np.sort(q3, axis=1)
        margin_max = srt[:, -1] - srt[:, -2]
        margin_min = srt[:, 1] - srt[:, 0]
        vals = np.where(model.owner == MAX, margin_max, margin_min)
        margins[measured] = vals[measured]
    if not np.isfinite(margins).any():
        return GapReport(nash_gap=np.inf, witness=None, per_state_margins=margins)
    s = int(np.argmin(margins))
    row = q.reshape(ns, na)[s]
    if model.owner[s] == MAX:
        best = int(np.argmax(row))
        masked = row.copy()
        masked[best] = -np.inf
        runner = int(np.argmax(masked))
    else:
        best = int(np.argmin(row))
        masked = row.copy()
        masked[best] = np.inf
        runner = int(np.argmin(masked))
    return GapReport(
        nash_gap=float(margins[s]), witness=(s, best, runner), per_state_margins=margins
    )


def suboptimality_gap_nash(model: GameModel, qstar: ValueTable) -> GapReport:
    """Gap of the equilibrium table: the smallest margin, over all states,
    between the optimal action's value and the runner-up's."""
    resid = shapley_residual(model, qstar.q)
    if resid > OPTIMAL_RESIDUAL_LIMIT:
        raise NotOptimalTable(resid, OPTIMAL_RESIDUAL_LIMIT)
    measured = np.ones(model.num_states, dtype=bool)
    return _margin_report(model, qstar.q, measured)


def suboptimality_gap_counter(
    model: GameModel, fixed: np.ndarray, fixed_side: int, tol: float = 1e-9
) -> GapReport:
    """Gap of the best-response table against a fixed opponent strategy,
    measured only at the responding side's states."""
    _, table = counterstrategy(model, fixed, fixed_side, tol)
    responder_side = MIN if fixed_side == MAX else MAX
    measured = model.owner == responder_side
    return _margin_report(model, table.q, measured)


@dataclass(frozen=True)
class CertificationRecord:
    """Outcome of an approximate-equilibrium check for a strategy pair."""

    epsilon: float
    tol: float
    deviation_max_player: float  # sup |Q^{mu,*} - Q*|
    deviation_min_player: float  # sup |Q^{*,nu} - Q*|
    passed: bool

    @property
    def deviation(self) -> float:
        return max(self.deviation_max_player, self.deviation_min_player)


def certify_epsilon_nash(
    model: GameModel,
    pair: StrategyPair,
    epsilon: float,
    tol: float,
    qstar: ValueTable | None = None,
) -> CertificationRecord:
    """Check that neither one-sided best response moves the value more than
    ``epsilon`` away from the equilibrium table (two counterstrategy solves
    plus one equilibrium solve)."""
    if epsilon < 0.0:
        raise ValidationError(f"epsilon must be nonnegative, got {epsilon!r}")
    _check_tol(tol)
    if qstar is None:
        qstar, _ = nash_value_iteration(model, tol)
    _, table_mu = counterstrategy(model, pair.mu, MAX, tol)
    _, table_nu = counterstrategy(model, pair.nu, MIN, tol)
    dev_mu = float(np.max(np.abs(table_mu.q - qstar.q)))
    dev_nu = float(np.max(np.abs(table_nu.q - qstar.q)))
    return CertificationRecord(
        epsilon=epsilon,
        tol=tol,
        deviation_max_player=dev_mu,
        deviation_min_player=dev_nu,
        passed=max(dev_mu, dev_nu) <= epsilon + tol,
    )
