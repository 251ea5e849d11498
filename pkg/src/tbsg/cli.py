"""Command-line workbench.

Subcommands: solve, sample, plugin, perturb, gap, trace-tau, scaling,
verify-lemmas, bound.  Every run prints a configuration header it can be
reproduced from, and every output file is a deterministic function of the
flags and seed.  Exit codes: 0 success, 1 validation/usage error,
2 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .analysis import SampleSizeQuery, sample_size_bound
from .errors import SolverError, ValidationError
from .experiments import ScalingConfig, print_summary, run_scaling_study
from .model import MAX, GapReport, load_game, save_game
from .sampling import estimate_model, plug_in_pipeline, save_counts
from .solve import (
    certify_epsilon_nash,
    nash_strategy_iteration,
    nash_value_iteration,
    suboptimality_gap_nash,
)
from .transforms import perturb_rewards, trace_nash_q_vs_tau, trace_to_csv
from .verification import verify_lemmas

CLI_FORMAT_ID = "tbsg.cli.v1"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _header(cmd: str, args: argparse.Namespace) -> str:
    parts = [f"# tbsg {__version__} format={CLI_FORMAT_ID} cmd={cmd}"]
    for name in ("game", "seed", "tol", "xi", "solver", "out"):
        if hasattr(args, name) and getattr(args, name) is not None:
            parts.append(f"{name}={getattr(args, name)}")
    return " ".join(parts)


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sub.add_argument("--tol", type=float, default=1e-9, help="solver tolerance (default 1e-9)")
    sub.add_argument("--xi", type=float, default=0.0, help="reward perturbation magnitude")
    sub.add_argument("--solver", choices=("vi", "si"), default="vi",
                     help="plug-in planner: value or strategy iteration")
    sub.add_argument("--out", default=None, help="output file path")


def _solve_fn(name: str):
    return nash_value_iteration if name == "vi" else nash_strategy_iteration


def _resolve_budget(args, num_pairs: int) -> int:
    if args.n_per_pair is not None:
        return args.n_per_pair
    n = args.n_total // num_pairs
    if n < 1:
        raise ValidationError(
            f"--n-total {args.n_total} gives no samples per pair for {num_pairs} pairs"
        )
    dropped = args.n_total - n * num_pairs
    note = f" ({dropped} samples discarded)" if dropped else ""
    print(
        f"warning: --n-total {args.n_total} floor-divides over {num_pairs} "
        f"state-action pairs to {n} per pair{note}",
        file=sys.stderr,
    )
    return n


def _print_gap(report: GapReport) -> None:
    if report.witness is None:
        print("gap = inf (no state has two actions to compare)")
        return
    s, best, runner = report.witness
    print(f"gap = {report.nash_gap!r}")
    print(f"witness: state {s}, best action {best}, runner-up action {runner}")
    for s, margin in enumerate(report.per_state_margins):
        print(f"margin[{s}] = {margin!r}")


# ---------------------------------------------------------------------------
# Subcommand bodies.
# ---------------------------------------------------------------------------


def _cmd_solve(args) -> int:
    model = load_game(args.game)
    table, pair = _solve_fn(args.solver)(model, args.tol)
    gap = suboptimality_gap_nash(model, table)
    na = model.num_actions
    for s in range(model.num_states):
        owner = "max" if model.owner[s] == MAX else "min"
        acts = " ".join(repr(float(table.q[s * na + a])) for a in range(na))
        chosen = pair.joint[s]
        print(f"state {s} owner={owner} action={chosen} q: {acts} v={table.v[s]!r}")
    _print_gap(gap)
    if args.out:
        doc = {
            "format": "tbsg.solution.v1",
            "q": table.q.tolist(),
            "v": table.v.tolist(),
            "mu": pair.mu.tolist(),
            "nu": pair.nu.tolist(),
            "gap": None if not np.isfinite(gap.nash_gap) else gap.nash_gap,
        }
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_sample(args) -> int:
    model = load_game(args.game)
    n = _resolve_budget(args, model.num_pairs)
    emp = estimate_model(model, n, args.seed)
    print(f"sampled {emp.total_samples} transitions ({n} per pair)")
    if args.out:
        save_counts(emp, args.out)
        print(f"counts written to {args.out}")
    return 0


def _cmd_plugin(args) -> int:
    model = load_game(args.game)
    n = _resolve_budget(args, model.num_pairs)
    result = plug_in_pipeline(model, n, args.xi, args.seed, args.solver)
    qstar, pistar = nash_value_iteration(model, min(args.tol, 1e-10))
    cert = certify_epsilon_nash(
        model, result.strategy, epsilon=args.epsilon or 0.0, tol=args.tol, qstar=qstar
    )
    print(f"samples per pair: {n} (total {result.diagnostics.total_samples})")
    print(f"deviation of maximizer side: {cert.deviation_max_player!r}")
    print(f"deviation of minimizer side: {cert.deviation_min_player!r}")
    print(f"certified deviation: {cert.deviation!r}")
    print(f"exact match with true equilibrium strategy: {int(result.strategy == pistar)}")
    if args.epsilon is not None:
        print(f"epsilon={args.epsilon!r} pass={int(cert.passed)}")
    if args.out:
        doc = {
            "format": "tbsg.plugin.v1",
            "n_per_pair": n,
            "xi": args.xi,
            "seed": args.seed,
            "solver": args.solver,
            "mu": result.strategy.mu.tolist(),
            "nu": result.strategy.nu.tolist(),
            "deviation_max_player": cert.deviation_max_player,
            "deviation_min_player": cert.deviation_min_player,
            "exact_match": bool(result.strategy == pistar),
        }
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_perturb(args) -> int:
    model = load_game(args.game)
    perturbed, spec = perturb_rewards(model, args.xi, args.seed)
    print(f"perturbed {model.num_pairs} rewards with xi={args.xi!r} seed={args.seed}")
    print(f"max noise = {float(spec.zeta.max(initial=0.0))!r}")
    if args.out:
        save_game(perturbed, args.out)
        print(f"perturbed game written to {args.out}")
    return 0


def _cmd_gap(args) -> int:
    model = load_game(args.game)
    table, _ = nash_value_iteration(model, args.tol)
    _print_gap(suboptimality_gap_nash(model, table))
    return 0


def _cmd_trace_tau(args) -> int:
    model = load_game(args.game)
    grid = np.linspace(args.tau_min, args.tau_max, args.points)
    trace = trace_nash_q_vs_tau(model, args.state, args.action, grid, args.tol)
    print(f"pieces: {len(trace.pieces)}")
    print(f"max linear-fit residual: {trace.max_linfit_residual()!r}")
    if args.out:
        trace_to_csv(trace, args.out)
        print(f"trace written to {args.out}")
    return 0


def _cmd_scaling(args) -> int:
    model = load_game(args.game)
    budgets = tuple(int(b) for b in args.budgets.split(","))
    config = ScalingConfig(
        game=model,
        budgets=budgets,
        trials_per_budget=args.trials,
        xi=args.xi,
        solver=args.solver,
        tol=1e-10,
        master_seed=args.seed,
        output_path=args.out,
        workers=args.workers,
        record_timings=args.timings,
    )
    _, summary = run_scaling_study(config)
    print_summary(summary)
    if args.out:
        print(f"rows written to {args.out}")
    return 0


def _cmd_verify_lemmas(args) -> int:
    report = verify_lemmas(seed=args.seed, scale=args.scale)
    for name in sorted(report["lemmas"]):
        entry = report["lemmas"][name]
        status = "PASS" if entry["pass"] else "FAIL"
        print(f"{status} {name}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"report written to {args.out}")
    return 0 if report["overall_pass"] else 1


def _cmd_bound(args) -> int:
    if args.epsilon is None and args.gap is None:
        raise ValidationError("bound requires --epsilon (theorem 2) or --gap (theorems 1/3)")
    x = args.epsilon if args.epsilon is not None else args.gap
    query = SampleSizeQuery(
        kind=f"theorem{args.theorem}",
        ns=args.ns,
        na=args.na,
        gamma=args.gamma,
        eps_or_delta_gap=x,
        confidence_delta=args.confidence,
        constant_c=args.constant,
    )
    print(sample_size_bound(query))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tbsg", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tbsg {__version__}")
    subs = parser.add_subparsers(dest="cmd", required=True)

    p = subs.add_parser("solve", parents=[], help="exact equilibrium of a JSON game")
    p.add_argument("game")
    _common_flags(p)
    p.set_defaults(fn=_cmd_solve)

    p = subs.add_parser("sample", help="estimate the transition model, write counts")
    p.add_argument("game")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--n-per-pair", type=int, default=None)
    group.add_argument("--n-total", type=int, default=None)
    _common_flags(p)
    p.set_defaults(fn=_cmd_sample)

    p = subs.add_parser("plugin", help="sample, plan in the empirical game, certify")
    p.add_argument("game")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--n-per-pair", type=int, default=None)
    group.add_argument("--n-total", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None,
                   help="target accuracy for the pass/fail verdict")
    _common_flags(p)
    p.set_defaults(fn=_cmd_plugin)

    p = subs.add_parser("perturb", help="write a uniformly reward-perturbed copy")
    p.add_argument("game")
    _common_flags(p)
    p.set_defaults(fn=_cmd_perturb)

    p = subs.add_parser("gap", help="equilibrium suboptimality gap report")
    p.add_argument("game")
    _common_flags(p)
    p.set_defaults(fn=_cmd_gap)

    p = subs.add_parser("trace-tau", help="equilibrium values vs one reward increment")
    p.add_argument("game")
    p.add_argument("--state", type=int, required=True)
    p.add_argument("--action", type=int, required=True)
    p.add_argument("--tau-min", type=float, default=0.0)
    p.add_argument("--tau-max", type=float, default=1.0)
    p.add_argument("--points", type=int, default=100)
    _common_flags(p)
    p.set_defaults(fn=_cmd_trace_tau)

    p = subs.add_parser("scaling", help="deviation vs sample budget study")
    p.add_argument("game")
    p.add_argument("--budgets", required=True,
                   help="comma-separated n_per_pair values, strictly increasing")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timings", action="store_true",
                   help="record real wall times in the CSV (breaks byte-reproducibility)")
    _common_flags(p)
    p.set_defaults(fn=_cmd_scaling)

    p = subs.add_parser("verify-lemmas", help="run the lemma verification suite")
    p.add_argument("--scale", type=float, default=1.0,
                   help="multiplier on Monte Carlo trial counts")
    _common_flags(p)
    p.set_defaults(fn=_cmd_verify_lemmas)

    p = subs.add_parser("bound", help="sample-size formula for a target accuracy or gap")
    p.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--ns", type=int, required=True)
    p.add_argument("--na", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--gap", type=float, default=None)
    p.add_argument("--confidence", type=float, default=0.1,
                   help="failure probability delta (default 0.1)")
    p.add_argument("--constant", type=float, default=128.0,
                   help="leading constant C (default 128)")
    _common_flags(p)
    p.set_defaults(fn=_cmd_bound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    print(_header(args.cmd, args))
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
