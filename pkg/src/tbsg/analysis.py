"""Numerical verification operations: concentration identities, variance
bounds, sample-size formulas, and gap-frequency experiments.

Deterministic identities are checked as residuals; high-probability
statements are only ever checked as Monte Carlo frequencies with
standard-error slack, never as hard assertions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDelta, LengthMismatch, RangeViolation, ShapeMismatch, ValidationError
from .model import GameModel, StrategyPair, induced_matrix
from .sampling import EmpiricalModel, derive_seed, estimate_model
from .solve import evaluate_pair, nash_value_iteration, suboptimality_gap_nash
from .transforms import perturb_rewards, perturbation_gap_threshold

THEOREMS = ("theorem1", "theorem2", "theorem3")
DEFAULT_CONSTANT = 128.0


def one_step_variance(model: GameModel, v: np.ndarray) -> np.ndarray:
    """Variance of the next-state value, per (s, a):
    Var(s,a) = P(s,a).v^2 - (P(s,a).v)^2.

    Tiny negative round-off is clamped to zero so the vector is a valid
    variance.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (model.num_states,):
        raise LengthMismatch("value vector", v.shape[0] if v.ndim == 1 else -1, model.num_states)
    if not np.isfinite(v).all():
        raise ValidationError("value vector must be finite")
    pv = model.transitions @ v
    pv2 = model.transitions @ (v * v)
    return np.maximum(pv2 - pv * pv, 0.0)


def _check_same_shape(truth: GameModel, empirical: GameModel) -> None:
    if (
        truth.num_states != empirical.num_states
        or truth.num_actions != empirical.num_actions
        or truth.discount != empirical.discount
        or not np.array_equal(truth.owner, empirical.owner)
    ):
        raise ShapeMismatch("truth and empirical games must share shape, owners, and discount")


def check_lemma1_identity(
    truth: GameModel, empirical: GameModel, pair: StrategyPair
) -> tuple[float, float]:
    """Residuals of the two error factorizations against the direct
    difference of exactly evaluated tables:

        Q - Qhat = g (I - g P_pi)^-1 (P - Phat) Vhat
                 = g (I - g Phat_pi)^-1 (P - Phat) V

    The published statement of this identity carries sign/placement typos
    relative to its own derivation; the derivation's form above is the one
    checked, and the residuals are the arbiter.
    """
    _check_same_shape(truth, empirical)
    t_table = evaluate_pair(truth, pair)
    e_table = evaluate_pair(empirical, pair)
    d = t_table.q - e_table.q
    g = truth.discount
    actions = pair.joint
    eye = np.eye(truth.num_pairs)
    p_pi_t = induced_matrix(truth, actions)
    p_pi_e = induced_matrix(empirical, actions)
    delta_p = truth.transitions - empirical.transitions
    f1 = g * np.linalg.solve(eye - g * p_pi_t, delta_p @ e_table.v)
    f2 = g * np.linalg.solve(eye - g * p_pi_e, delta_p @ t_table.v)
    return float(np.max(np.abs(f1 - d))), float(np.max(np.abs(f2 - d)))


def check_variance_bound(model: GameModel, pair: StrategyPair) -> tuple[float, float]:
    """Accumulated one-step deviation versus its horizon bound:

        lhs = sup | (I - g P_pi)^-1 sqrt(Var_P(V^pi)) |
        rhs = sqrt(2 / (1-g)^3)

    The bound presumes rewards in [0, 1] so values live in [0, 1/(1-g)].
    """
    table = evaluate_pair(model, pair)
    var = one_step_variance(model, table.v)
    g = model.discount
    p_pi = induced_matrix(model, pair.joint)
    x = np.linalg.solve(np.eye(model.num_pairs) - g * p_pi, np.sqrt(var))
    lhs = float(np.max(np.abs(x)))
    rhs = math.sqrt(2.0 / (1.0 - g) ** 3)
    return lhs, rhs


def bernstein_envelope(
    counts: EmpiricalModel,
    v: np.ndarray,
    delta: float,
    variance_model: GameModel | None = None,
) -> np.ndarray:
    """Per-(s, a) deviation bound for |(P - Phat)(s,a) . v|:

        sqrt(2 log(4/delta) Var(s,a)(v) / n) + 2 log(4/delta) / (3 (1-g) n)

    Variances default to the plug-in estimate; pass the truth as
    ``variance_model`` for the exact concentration statement.
    """
    if not 0.0 < delta < 1.0:
        raise DegenerateDelta(delta)
    base = variance_model if variance_model is not None else counts.estimate
    var = one_step_variance(base, v)
    n = counts.n_per_pair
    g = base.discount
    log_term = math.log(4.0 / delta)
    return np.sqrt(2.0 * log_term * var / n) + 2.0 * log_term / (3.0 * (1.0 - g) * n)


@dataclass(frozen=True)
class BernsteinCoverage:
    """Empirical frequency of envelope violations over (entry, seed) cells."""

    delta: float
    n_per_pair: int
    cells: int
    violations: int

    @property
    def frequency(self) -> float:
        return self.violations / self.cells


def bernstein_coverage_experiment(
    model: GameModel,
    n_per_pair: int,
    delta: float,
    n_seeds: int,
    seed: int,
    v: np.ndarray | None = None,
) -> BernsteinCoverage:
    """Resample the empirical model and count, per (s, a) entry, how often
    |(P - Phat) . v| escapes the envelope.  The expected violation rate is
    at most delta per entry."""
    if v is None:
        table, _ = nash_value_iteration(model, 1e-10)
        v = table.v
    violations = 0
    for k in range(n_seeds):
        emp = estimate_model(model, n_per_pair, derive_seed(seed, k))
        dev = np.abs((model.transitions - emp.estimate.transitions) @ v)
        bound = bernstein_envelope(emp, v, delta, variance_model=model)
        violations += int((dev > bound).sum())
    return BernsteinCoverage(
        delta=delta,
        n_per_pair=n_per_pair,
        cells=n_seeds * model.num_pairs,
        violations=violations,
    )


@dataclass(frozen=True)
class SampleSizeQuery:
    """Inputs to the sample-size formulas.

    ``theorem2`` targets an epsilon-approximate equilibrium;
    ``theorem1``/``theorem3`` target exact recovery under a gap, with the
    gap taking epsilon's slot in the formula.
    """

    kind: str
    ns: int
    na: int
    gamma: float
    eps_or_delta_gap: float
    confidence_delta: float
    constant_c: float = DEFAULT_CONSTANT


def sample_size_bound(query: SampleSizeQuery) -> int:
    """N = ceil( C |S||A| / ((1-g)^3 x^2) * log(|S||A| / ((1-g) delta x)) )
    with x the accuracy (epsilon) or the gap, after range checks."""
    if query.kind not in THEOREMS:
        raise ValidationError(f"kind must be one of {THEOREMS}, got {query.kind!r}")
    if not 0.0 <= query.gamma < 1.0:
        raise RangeViolation(query.kind, f"gamma must lie in [0, 1), got {query.gamma!r}")
    if not 0.0 < query.confidence_delta < 1.0:
        raise RangeViolation(
            query.kind, f"confidence delta must lie in (0, 1), got {query.confidence_delta!r}"
        )
    x = query.eps_or_delta_gap
    one_minus = 1.0 - query.gamma
    if query.kind == "theorem1":
        limit = one_minus**-0.5
        name = "gap"
    else:
        limit = one_minus**-1.0
        name = "epsilon" if query.kind == "theorem2" else "gap"
    if not 0.0 < x <= limit * (1.0 + 1e-12):
        raise RangeViolation(
            query.kind, f"{name} must lie in (0, {limit!r}], got {x!r}"
        )
    size = query.ns * query.na
    lead = query.constant_c * size / (one_minus**3 * x * x)
    log_term = math.log(size / (one_minus * query.confidence_delta * x))
    return int(math.ceil(lead * log_term))


@dataclass(frozen=True)
class GapFrequencyReport:
    """How often reward perturbation manufactures the promised gap."""

    xi: float
    delta: float
    trials: int
    seed: int
    threshold_statement: float
    threshold_proof: float
    frequency_statement: float
    frequency_proof: float
    gaps: np.ndarray = field(repr=False)


def gap_frequency_experiment(
    model: GameModel, xi: float, delta: float, trials: int, seed: int
) -> GapFrequencyReport:
    """Perturb, solve exactly, measure the equilibrium gap, and report the
    fraction of trials clearing each published threshold variant."""
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials!r}")
    gaps = np.empty(trials)
    for t in range(trials):
        perturbed, _ = perturb_rewards(model, xi, derive_seed(seed, t))
        table, _ = nash_value_iteration(perturbed, 1e-10)
        gaps[t] = suboptimality_gap_nash(perturbed, table).nash_gap
    thr_statement = perturbation_gap_threshold(
        model.discount, xi, delta, model.num_states, model.num_actions, "statement"
    )
    thr_proof = perturbation_gap_threshold(
        model.discount, xi, delta, model.num_states, model.num_actions, "proof"
    )
    return GapFrequencyReport(
        xi=xi,
        delta=delta,
        trials=trials,
        seed=seed,
        threshold_statement=thr_statement,
        threshold_proof=thr_proof,
        frequency_statement=float(np.mean(gaps >= thr_statement)),
        frequency_proof=float(np.mean(gaps >= thr_proof)),
        gaps=gaps,
    )
