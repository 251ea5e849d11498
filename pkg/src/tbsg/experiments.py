"""Sample-budget scaling studies over the plug-in pipeline.

Each (budget, trial) cell runs the pipeline and certifies the returned
strategy against the exactly solved truth.  Trial seeds are shared across
budgets, so adjacent budgets are paired samples that refine the same
draw streams.  Rows come out in deterministic (budget, trial) order no
matter how the cells were scheduled.
"""

from __future__ import annotations

import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import GameModel
from .sampling import derive_seed, plug_in_pipeline
from .solve import certify_epsilon_nash, nash_value_iteration, suboptimality_gap_nash

SCALING_CSV_HEADER = "n_per_pair,total_n,seed,deviation_max,exact_match,gap,wall_ms"
CERTIFY_TOL = 1e-9


@dataclass(frozen=True)
class ScalingConfig:
    game: GameModel
    budgets: tuple[int, ...]
    trials_per_budget: int
    xi: float = 0.0
    solver: str = "vi"
    tol: float = 1e-10
    master_seed: int = 0
    output_path: str | None = None
    workers: int = 1
    record_timings: bool = False

    def __post_init__(self):
        budgets = tuple(int(b) for b in self.budgets)
        object.__setattr__(self, "budgets", budgets)
        if len(budgets) == 0 or any(b < 1 for b in budgets):
            raise ValidationError("budgets must be positive integers")
        if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
            raise ValidationError("budgets must be strictly increasing")
        if self.trials_per_budget < 1:
            raise ValidationError("trials_per_budget must be >= 1")


@dataclass(frozen=True)
class ResultRow:
    n_per_pair: int
    total_n: int
    seed: int
    deviation_max: float
    exact_match: bool
    gap: float
    wall_ms: float


@dataclass(frozen=True)
class ScalingSummary:
    slope: float                     # log-log fit of median deviation vs total N
    budgets: tuple[int, ...]
    median_deviation: tuple[float, ...]
    exact_match_rate: tuple[float, ...]
    gap: float
    first_budget_at_90pct_exact: int | None


def _run_cell(args) -> ResultRow:
    game, qstar, pistar, gap, n_per_pair, trial_seed, xi, solver, tol = args
    start = time.perf_counter()
    result = plug_in_pipeline(game, n_per_pair, xi, trial_seed, solver, tol)
    cert = certify_epsilon_nash(game, result.strategy, epsilon=0.0, tol=CERTIFY_TOL, qstar=qstar)
    wall_ms = (time.perf_counter() - start) * 1e3
    return ResultRow(
        n_per_pair=n_per_pair,
        total_n=n_per_pair * game.num_pairs,
        seed=trial_seed,
        deviation_max=cert.deviation,
        exact_match=result.strategy == pistar,
        gap=gap,
        wall_ms=wall_ms,
    )


def run_scaling_study(config: ScalingConfig) -> tuple[list[ResultRow], ScalingSummary]:
    """Run every (budget, trial) cell and summarize the deviation scaling.

    If ``output_path`` is set, rows are flushed to the CSV as they
    complete, so an interrupted run leaves a usable partial file.
    """
    game = config.game
    qstar, pistar = nash_value_iteration(game, min(config.tol, 1e-10))
    gap = suboptimality_gap_nash(game, qstar).nash_gap

    trial_seeds = [derive_seed(config.master_seed, t) for t in range(config.trials_per_budget)]
    cells = [
        (game, qstar, pistar, gap, budget, trial_seeds[t], config.xi, config.solver, config.tol)
        for budget in config.budgets
        for t in range(config.trials_per_budget)
    ]

    rows: list[ResultRow] = []
    writer = _CsvSink(config.output_path, config.record_timings)
    try:
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                for row in pool.map(_run_cell, cells):
                    rows.append(row)
                    writer.write(row)
        else:
            for cell in cells:
                row = _run_cell(cell)
                rows.append(row)
                writer.write(row)
    finally:
        writer.close()

    return rows, summarize(rows, config, gap)


class _CsvSink:
    def __init__(self, path: str | None, record_timings: bool):
        self.record_timings = record_timings
        self._fh = None
        if path is not None:
            self._fh = open(path, "w", newline="")
            self._fh.write(SCALING_CSV_HEADER + "\n")
            self._fh.flush()

    def write(self, row: ResultRow) -> None:
        if self._fh is None:
            return
        wall = row.wall_ms if self.record_timings else 0.0
        self._fh.write(
            f"{row.n_per_pair},{row.total_n},{row.seed},{row.deviation_max!r},"
            f"{int(row.exact_match)},{row.gap!r},{wall!r}\n"
        )
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()


def summarize(rows: list[ResultRow], config: ScalingConfig, gap: float) -> ScalingSummary:
    budgets = config.budgets
    medians = []
    exact_rates = []
    for budget in budgets:
        devs = [r.deviation_max for r in rows if r.n_per_pair == budget]
        matches = [r.exact_match for r in rows if r.n_per_pair == budget]
        medians.append(float(np.median(devs)) if devs else float("nan"))
        exact_rates.append(float(np.mean(matches)) if matches else float("nan"))

    total_ns = np.array([b * config.game.num_pairs for b in budgets], dtype=np.float64)
    med = np.array(medians)
    usable = med > 0
    if usable.sum() >= 2:
        slope = float(np.polyfit(np.log(total_ns[usable]), np.log(med[usable]), 1)[0])
    else:
        slope = float("nan")

    first90 = None
    if np.isfinite(gap) and gap > 0:
        for budget, rate in zip(budgets, exact_rates):
            if rate >= 0.9:
                first90 = budget
                break

    return ScalingSummary(
        slope=slope,
        budgets=budgets,
        median_deviation=tuple(medians),
        exact_match_rate=tuple(exact_rates),
        gap=gap,
        first_budget_at_90pct_exact=first90,
    )


def print_summary(summary: ScalingSummary, file=None) -> None:
    if file is None:
        file = sys.stdout
    print(f"gap = {summary.gap!r}", file=file)
    print(f"log-log slope of median deviation vs total N = {summary.slope!r}", file=file)
    for budget, med, rate in zip(
        summary.budgets, summary.median_deviation, summary.exact_match_rate
    ):
        print(
            f"n_per_pair={budget} median_deviation={med!r} exact_match_rate={rate!r}",
            file=file,
        )
    if summary.first_budget_at_90pct_exact is not None:
        print(
            f"first budget with >=90% exact recovery: {summary.first_budget_at_90pct_exact}",
            file=file,
        )
