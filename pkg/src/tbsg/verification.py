"""Lemma verification suite: re-checks every analytical claim numerically
over the bundled corpus and emits a machine-readable report.

Identities and inequalities are checked with explicit slack; probabilistic
claims are checked as Monte Carlo frequencies with three standard errors
of slack.  A green report over the bundled corpus is the release gate.
"""

from __future__ import annotations

import math

import numpy as np

from . import corpus
from .analysis import (
    bernstein_coverage_experiment,
    check_lemma1_identity,
    check_variance_bound,
    gap_frequency_experiment,
)
from .generators import GeneratorSpec, generate_game
from .model import MAX, MIN, GameModel, StrategyPair, ValueTable
from .sampling import derive_seed, estimate_model, substream
from .solve import (
    counterstrategy,
    evaluate_pair,
    nash_value_iteration,
    suboptimality_gap_nash,
)
from .transforms import (
    AbsorbingSpec,
    build_cover,
    make_absorbing,
    perturb_rewards,
    trace_nash_q_vs_tau,
    u_for_strategy,
    u_star,
)

SOLVE_TOL = 1e-10


def random_pair(model: GameModel, rng: np.random.Generator) -> StrategyPair:
    acts = rng.integers(0, model.num_actions, size=model.num_states)
    mu = np.where(model.owner == MAX, acts, -1)
    nu = np.where(model.owner == MIN, acts, -1)
    return StrategyPair(mu=mu, nu=nu)


def _random_game(seed: int, ns=4, na=3, gamma=0.9, reward_law="uniform01") -> GameModel:
    return generate_game(
        GeneratorSpec(ns=ns, na=na, gamma=gamma, owner_pattern="random", seed=seed,
                      reward_law=reward_law)
    )


def _solve(model: GameModel) -> tuple[ValueTable, StrategyPair]:
    return nash_value_iteration(model, SOLVE_TOL)


# ---------------------------------------------------------------------------
# Per-lemma checks, reused by the pytest suite.
# ---------------------------------------------------------------------------


def lemma5_sides(truth: GameModel, empirical: GameModel, tol: float = SOLVE_TOL):
    """(|Q* - Qhat*|, one-sided deviation for the maximizer, same for the
    minimizer); the first is bounded by the max of the other two."""
    t_table, t_pair = _solve(truth)
    e_table, _ = _solve(empirical)

    c_mu, emp_mu = counterstrategy(empirical, t_pair.mu, MAX, tol)
    cross_mu = evaluate_pair(truth, StrategyPair(mu=t_pair.mu, nu=c_mu))
    side_mu = float(np.max(np.abs(cross_mu.q - emp_mu.q)))

    c_nu, emp_nu = counterstrategy(empirical, t_pair.nu, MIN, tol)
    cross_nu = evaluate_pair(truth, StrategyPair(mu=c_nu, nu=t_pair.nu))
    side_nu = float(np.max(np.abs(cross_nu.q - emp_nu.q)))

    lhs = float(np.max(np.abs(t_table.q - e_table.q)))
    return lhs, side_mu, side_nu


def lemma6_exact_recovery(truth: GameModel, empirical: GameModel):
    """(applicable, holds): whenever |Q* - Qhat*| < gap/2, the empirical
    equilibrium strategy must equal the true one."""
    t_table, t_pair = _solve(truth)
    e_table, e_pair = _solve(empirical)
    gap = suboptimality_gap_nash(truth, t_table).nash_gap
    dev = float(np.max(np.abs(t_table.q - e_table.q)))
    applicable = math.isfinite(gap) and gap > 0 and dev < gap / 2.0
    holds = (not applicable) or (e_pair == t_pair)
    return applicable, holds


def lemma10_terms(truth: GameModel, n_per_pair: int, xi: float, seed: int,
                  tol: float = SOLVE_TOL):
    """(lhs, term1, term2): deviation of the perturbed empirical equilibrium
    strategy in the truth, and the two perturbed-game deviations that
    bound it up to 4 xi / (1 - gamma)."""
    pseed = derive_seed(seed, 1)
    perturbed_truth, _ = perturb_rewards(truth, xi, pseed)
    emp = estimate_model(truth, n_per_pair, derive_seed(seed, 0))
    perturbed_emp, _ = perturb_rewards(emp.estimate, xi, pseed)

    _, t_pair = _solve(truth)
    _, pe_pair = _solve(perturbed_emp)

    t_table, _ = _solve(truth)
    _, resp_truth = counterstrategy(truth, pe_pair.mu, MAX, tol)
    lhs = float(np.max(np.abs(resp_truth.q - t_table.q)))

    # term1: minimizer responds to mu_hat_p in the perturbed truth; that
    # pair is then valued in the perturbed empirical game.
    c_pt, pt_resp = counterstrategy(perturbed_truth, pe_pair.mu, MAX, tol)
    cross1 = evaluate_pair(perturbed_emp, StrategyPair(mu=pe_pair.mu, nu=c_pt))
    term1 = float(np.max(np.abs(pt_resp.q - cross1.q)))

    # term2: minimizer responds to the true mu* in the perturbed empirical
    # game; that pair is then valued in the perturbed truth.
    c_pe, pe_resp = counterstrategy(perturbed_emp, t_pair.mu, MAX, tol)
    cross2 = evaluate_pair(perturbed_truth, StrategyPair(mu=t_pair.mu, nu=c_pe))
    term2 = float(np.max(np.abs(cross2.q - pe_resp.q)))

    return lhs, term1, term2


def lemma9_membership_trial(truth: GameModel, n_per_pair: int, xi: float,
                            cover, s: int, a: int, seed: int) -> bool:
    """One trial: does the perturbed empirical equilibrium maximizer
    strategy match the absorbing game's at the nearest cover point?"""
    emp = estimate_model(truth, n_per_pair, derive_seed(seed, 0))
    perturbed_emp, _ = perturb_rewards(emp.estimate, xi, derive_seed(seed, 1))
    table, pair = _solve(perturbed_emp)

    idx = perturbed_emp.q_index(s, a)
    g = perturbed_emp.discount
    u_hat = float(
        perturbed_emp.rewards[idx]
        + g * (perturbed_emp.transitions[idx] @ table.v)
        - g * table.v[s]
    )
    absorbing = make_absorbing(perturbed_emp, AbsorbingSpec(s=s, a=a, u=cover.nearest(u_hat)))
    _, abs_pair = _solve(absorbing)
    return bool(np.array_equal(pair.mu, abs_pair.mu))


def _three_se(p: float, n: int) -> float:
    return 3.0 * math.sqrt(p * (1.0 - p) / n)


# ---------------------------------------------------------------------------
# The suite.
# ---------------------------------------------------------------------------


def verify_lemmas(seed: int = 0, scale: float = 1.0) -> dict:
    """Run every lemma check and return a JSON-serializable report.

    ``scale`` multiplies the Monte Carlo trial counts (use < 1 for quick
    smoke runs); deterministic in (seed, scale).
    """
    n = lambda base: max(2, int(round(base * scale)))
    report: dict = {
        "format": "tbsg.lemma-report.v1",
        "seed": seed,
        "scale": scale,
        "lemmas": {},
    }
    lemmas = report["lemmas"]

    corpus_games = [g for g in corpus.bundled_games().values() if g.num_actions >= 2]

    # Lemma 1: both factorizations of Q - Qhat agree with the direct
    # difference.  The published statement's signs/placements disagree with
    # its own derivation; the derivation's form is what is checked here.
    trials = n(40)
    worst = 0.0
    for k in range(trials):
        game = _random_game(derive_seed(seed, 10, k), ns=3, na=2)
        emp = estimate_model(game, 50, derive_seed(seed, 11, k)).estimate
        pair = random_pair(game, substream(seed, 12, k))
        r1, r2 = check_lemma1_identity(game, emp, pair)
        worst = max(worst, r1, r2)
    lemmas["lemma1"] = {
        "pass": worst <= 1e-8,
        "max_residual": worst,
        "threshold": 1e-8,
        "trials": trials,
        "note": "statement carries sign/placement typos; the proof-form identity is checked",
    }

    # Lemma 2: accumulated deviation of the empirical value's variance is
    # bounded by the horizon term plus the value error.
    trials = n(40)
    worst = -math.inf
    for k in range(trials):
        game = _random_game(derive_seed(seed, 20, k), ns=4, na=2)
        emp = estimate_model(game, 30, derive_seed(seed, 21, k)).estimate
        pair = random_pair(game, substream(seed, 22, k))
        lhs, _ = check_variance_bound_on_estimate(game, emp, pair)
        t_q = evaluate_pair(game, pair).q
        e_q = evaluate_pair(emp, pair).q
        g = game.discount
        rhs = math.sqrt(2.0 / (1.0 - g) ** 3) + float(np.max(np.abs(t_q - e_q))) / (1.0 - g)
        worst = max(worst, lhs - rhs)
    lemmas["lemma2"] = {
        "pass": worst <= 1e-8,
        "max_excess": worst,
        "threshold": 1e-8,
        "trials": trials,
    }

    # Lemma 3: high-probability bound, checked only as a frequency.
    trials = n(60)
    hits = 0
    for k in range(trials):
        game = _random_game(derive_seed(seed, 30, k), ns=4, na=2)
        emp = estimate_model(game, 64, derive_seed(seed, 31, k)).estimate
        pair = random_pair(game, substream(seed, 32, k))
        lhs = accumulated_true_variance_under_estimate(game, emp, pair)
        g = game.discount
        if lhs <= 16.0 / math.sqrt((1.0 - g) ** 3):
            hits += 1
    freq = hits / trials
    lemmas["lemma3"] = {
        "pass": freq >= 0.9,
        "frequency": freq,
        "trials": trials,
        "note": "high-probability bound; Monte Carlo frequency only",
    }

    # Lemma 4: absorbing recovery and Lipschitz continuity in u.
    games4 = [g for g in corpus_games if g.num_states >= 2][: n(6)]
    worst_rec = 0.0
    worst_lip = -math.inf
    pairs_checked = 0
    for gi, game in enumerate(games4):
        rng = substream(seed, 40, gi)
        t_table, t_pair = _solve(game)
        for _ in range(2):
            s = int(rng.integers(game.num_states))
            a = int(rng.integers(game.num_actions))
            u0 = u_star(game, s, a, SOLVE_TOL)
            abs_table, _ = _solve(make_absorbing(game, AbsorbingSpec(s, a, u0)))
            worst_rec = max(worst_rec, float(np.max(np.abs(abs_table.q - t_table.q))))

            u_mu = u_for_strategy(game, t_pair.mu, s, a, SOLVE_TOL)
            _, resp = counterstrategy(game, t_pair.mu, MAX, SOLVE_TOL)
            _, abs_resp = counterstrategy(
                make_absorbing(game, AbsorbingSpec(s, a, u_mu)), t_pair.mu, MAX, SOLVE_TOL
            )
            worst_rec = max(worst_rec, float(np.max(np.abs(abs_resp.q - resp.q))))

            bound = 1.0 / (1.0 - game.discount)
            us = rng.uniform(-bound, bound, size=6)
            tables = [
                _solve(make_absorbing(game, AbsorbingSpec(s, a, float(u))))[0] for u in us
            ]
            for i in range(len(us)):
                for j in range(i + 1, len(us)):
                    du = abs(float(us[i] - us[j]))
                    if du < 1e-9:
                        continue
                    dq = float(np.max(np.abs(tables[i].q - tables[j].q)))
                    worst_lip = max(worst_lip, dq / du - bound)
                    pairs_checked += 1
    lemmas["lemma4"] = {
        "pass": worst_rec <= 1e-7 and worst_lip <= 1e-6,
        "max_recovery_error": worst_rec,
        "max_lipschitz_excess": worst_lip,
        "recovery_threshold": 1e-7,
        "pairs_checked": pairs_checked,
    }

    # Lemmas 5 and 6: the max-deviation bound and exact recovery under gap.
    trials = n(50)
    worst5 = -math.inf
    applicable6 = 0
    violations6 = 0
    for k in range(trials):
        game = _random_game(derive_seed(seed, 50, k), ns=4, na=2)
        emp = estimate_model(game, 200, derive_seed(seed, 51, k)).estimate
        lhs, side_mu, side_nu = lemma5_sides(game, emp)
        worst5 = max(worst5, lhs - max(side_mu, side_nu))
        applicable, holds = lemma6_exact_recovery(game, emp)
        applicable6 += int(applicable)
        violations6 += int(not holds)
    lemmas["lemma5"] = {
        "pass": worst5 <= 1e-8,
        "max_excess": worst5,
        "threshold": 1e-8,
        "trials": trials,
    }
    lemmas["lemma6"] = {
        "pass": violations6 == 0,
        "applicable_trials": applicable6,
        "violations": violations6,
        "trials": trials,
    }

    # Lemma 7: perturbation manufactures a gap with the claimed frequency.
    game7 = _random_game(derive_seed(seed, 70), ns=4, na=3)
    trials = n(200)
    rep = gap_frequency_experiment(game7, xi=0.1, delta=0.2, trials=trials,
                                   seed=derive_seed(seed, 71))
    need = 1.0 - rep.delta - _three_se(1.0 - rep.delta, trials)
    lemmas["lemma7"] = {
        "pass": rep.frequency_statement >= need,
        "frequency_statement": rep.frequency_statement,
        "frequency_proof": rep.frequency_proof,
        "threshold_statement": rep.threshold_statement,
        "threshold_proof": rep.threshold_proof,
        "required_frequency": need,
        "trials": trials,
        "note": "statement and proof disagree on |S|,|A| exponents; both variants reported",
    }

    # Lemma 8: piecewise linearity, slope ratio, and monotone growth of the
    # traced entry.
    games8 = n(4)
    worst_fit = 0.0
    worst_ratio = -math.inf
    worst_mono = -math.inf
    for k in range(games8):
        game = _random_game(derive_seed(seed, 80, k), ns=4, na=2, gamma=0.8)
        rng = substream(seed, 81, k)
        s = int(rng.integers(game.num_states))
        a = int(rng.integers(game.num_actions))
        grid = np.linspace(-0.5, 1.5, n(60))
        trace = trace_nash_q_vs_tau(game, s, a, grid, 1e-9)
        worst_fit = max(worst_fit, trace.max_linfit_residual())
        worst_ratio = max(worst_ratio, trace.max_slope_ratio_excess())
        dtau = np.diff(grid)
        worst_mono = max(worst_mono, float(np.max(dtau - trace.target_increments())))
    lemmas["lemma8"] = {
        "pass": worst_fit <= 1e-7 and worst_ratio <= 1e-6 and worst_mono <= 1e-8,
        "max_linfit_residual": worst_fit,
        "max_slope_ratio_excess": worst_ratio,
        "max_monotonicity_deficit": worst_mono,
        "games": games8,
    }

    # Lemma 9: the perturbed empirical equilibrium strategy lands in the
    # absorbing-strategy set of the nearest cover point.
    game9 = _random_game(derive_seed(seed, 90), ns=3, na=2, gamma=0.5)
    xi9, delta9 = 0.5, 0.5
    cover = build_cover(game9.discount, xi9, delta9, game9.num_states, game9.num_actions)
    rng9 = substream(seed, 91)
    s9 = int(rng9.integers(game9.num_states))
    a9 = int(rng9.integers(game9.num_actions))
    trials = n(200)
    hits = sum(
        lemma9_membership_trial(game9, 100, xi9, cover, s9, a9, derive_seed(seed, 92, k))
        for k in range(trials)
    )
    freq = hits / trials
    need = 1.0 - delta9 - _three_se(1.0 - delta9, trials)
    lemmas["lemma9"] = {
        "pass": freq >= need,
        "frequency": freq,
        "required_frequency": need,
        "cover_points": int(cover.points.shape[0]),
        "trials": trials,
    }

    # Lemma 10: deviation of the perturbed empirical equilibrium strategy.
    trials = n(30)
    worst = -math.inf
    for k in range(trials):
        game = _random_game(derive_seed(seed, 100, k), ns=3, na=2)
        xi = 0.05
        lhs, t1, t2 = lemma10_terms(game, 100, xi, derive_seed(seed, 101, k))
        rhs = t1 + t2 + 4.0 * xi / (1.0 - game.discount)
        worst = max(worst, lhs - rhs)
    lemmas["lemma10"] = {
        "pass": worst <= 1e-7,
        "max_excess": worst,
        "threshold": 1e-7,
        "trials": trials,
    }

    # Lemma 11: the variance propagation bound never trips on base games.
    draws = n(100)
    worst = -math.inf
    total = 0
    for gamma in (0.5, 0.9, 0.99):
        for k in range(draws):
            game = _random_game(derive_seed(seed, 110, int(gamma * 100), k), ns=4, na=2,
                                gamma=gamma)
            pair = random_pair(game, substream(seed, 111, int(gamma * 100), k))
            lhs, rhs = check_variance_bound(game, pair)
            worst = max(worst, lhs - rhs)
            total += 1
    lemmas["lemma11"] = {
        "pass": worst <= 1e-9,
        "max_excess": worst,
        "threshold": 1e-9,
        "draws": total,
    }

    # Lemma 13: Bernstein envelope coverage.
    game13 = _random_game(derive_seed(seed, 130), ns=4, na=2)
    seeds13 = max(2, int(round(250 * scale)))
    cov = bernstein_coverage_experiment(game13, 50, 0.1, seeds13, derive_seed(seed, 131))
    allowed = cov.delta + _three_se(cov.delta, cov.cells)
    lemmas["lemma13"] = {
        "pass": cov.frequency <= allowed,
        "violation_frequency": cov.frequency,
        "allowed_frequency": allowed,
        "cells": cov.cells,
    }

    report["overall_pass"] = all(entry["pass"] for entry in lemmas.values())
    return report


def check_variance_bound_on_estimate(
    truth: GameModel, empirical: GameModel, pair: StrategyPair
) -> tuple[float, float]:
    """lhs of the variance bound with the empirical value plugged into the
    truth's variance operator: |(I - g P_pi)^-1 sqrt(Var_P(Vhat^pi))|."""
    from .analysis import one_step_variance
    from .model import induced_matrix

    e_table = evaluate_pair(empirical, pair)
    var = one_step_variance(truth, e_table.v)
    g = truth.discount
    p_pi = induced_matrix(truth, pair.joint)
    x = np.linalg.solve(np.eye(truth.num_pairs) - g * p_pi, np.sqrt(var))
    return float(np.max(np.abs(x))), math.sqrt(2.0 / (1.0 - g) ** 3)


def accumulated_true_variance_under_estimate(
    truth: GameModel, empirical: GameModel, pair: StrategyPair
) -> float:
    """|(I - g Phat_pi)^-1 sqrt(Var_P(V^pi))| for the empirical chain."""
    from .analysis import one_step_variance
    from .model import induced_matrix

    t_table = evaluate_pair(truth, pair)
    var = one_step_variance(truth, t_table.v)
    g = truth.discount
    p_pi = induced_matrix(empirical, pair.joint)
    x = np.linalg.solve(np.eye(truth.num_pairs) - g * p_pi, np.sqrt(var))
    return float(np.max(np.abs(x)))
