"""Generative-model oracle, empirical estimation, and the plug-in pipeline.

Randomness is organized as keyed substreams of a 64-bit master seed:
identical (seed, key) always reproduces the same draws, and distinct keys
give statistically independent streams.  Successor states are drawn by
inverse CDF over the row's cumulative sum in ascending state order, so
every experiment is an exact function of its seeds.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import backend_name, tally
from .errors import GameFormatError, NegativeXi, ValidationError
from .model import GameModel, StrategyPair, ValueTable, validate_game
from .solve import nash_strategy_iteration, nash_value_iteration

COUNTS_FORMAT_ID = "tbsg.counts.v1"
PIPELINE_TOL = 1e-10

# Substream keys reserved by the pipeline.
_KEY_SAMPLING = 0
_KEY_PERTURBATION = 1


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (master_seed, key)."""
    return np.random.default_rng(np.random.SeedSequence((int(master_seed), *map(int, key))))


def derive_seed(master_seed: int, *key: int) -> int:
    """Deterministic 64-bit child seed for (master_seed, key)."""
    words = np.random.SeedSequence((int(master_seed), *map(int, key))).generate_state(2)
    return int(words[0]) << 32 | int(words[1])


@dataclass(frozen=True)
class EmpiricalModel:
    """Per-pair visit counts and the maximum-likelihood game they induce."""

    counts: np.ndarray  # int64, shape (S*A, S)
    n_per_pair: int
    estimate: GameModel

    @property
    def total_samples(self) -> int:
        return self.n_per_pair * self.counts.shape[0]


def sample_transition(model: GameModel, s: int, a: int, rng: np.random.Generator) -> int:
    """One successor draw from P(.|s, a) using a single uniform variate."""
    model.check_indices(s, a)
    cum = np.cumsum(model.transitions[model.q_index(s, a)])
    u = rng.random()
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, model.num_states - 1)


def estimate_model(model: GameModel, n_per_pair: int, seed: int) -> EmpiricalModel:
    """Call the oracle ``n_per_pair`` times on every (s, a) and form the
    maximum-likelihood transition estimate count / n_per_pair.

    Each (s, a) cell samples from its own substream, so cells can be
    drawn in any order (or concurrently) without changing the result.
    """
    if n_per_pair < 1:
        raise ValidationError(f"n_per_pair must be >= 1, got {n_per_pair!r}")
    ns, na = model.num_states, model.num_actions
    counts = np.zeros((ns * na, ns), dtype=np.int64)
    for s in range(ns):
        for a in range(na):
            idx = s * na + a
            cum = np.cumsum(model.transitions[idx])
            u = substream(seed, _KEY_SAMPLING, s, a).random(n_per_pair)
            tally(cum, u, counts[idx])
    estimate = model.replace(transitions=counts / float(n_per_pair))
    validate_game(
        estimate,
        r_max=max(1.0, float(model.rewards.max())),
        r_min=min(0.0, float(model.rewards.min())),
    )
    return EmpiricalModel(counts=counts, n_per_pair=n_per_pair, estimate=estimate)


def rebuild_estimate(model: GameModel, counts: np.ndarray, n_per_pair: int) -> EmpiricalModel:
    """Reconstruct an empirical model from persisted counts (shares the
    truth's rewards, owner, and discount)."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (model.num_pairs, model.num_states):
        raise GameFormatError(
            f"counts must have shape ({model.num_pairs}, {model.num_states}), "
            f"got {counts.shape}"
        )
    if (counts.sum(axis=1) != n_per_pair).any():
        raise GameFormatError("counts rows must each sum to n_per_pair")
    estimate = model.replace(transitions=counts / float(n_per_pair))
    return EmpiricalModel(counts=counts, n_per_pair=n_per_pair, estimate=estimate)


def save_counts(emp: EmpiricalModel, path: str | Path) -> None:
    doc = {
        "format": COUNTS_FORMAT_ID,
        "n_per_pair": emp.n_per_pair,
        "counts": emp.counts.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_counts(path: str | Path, model: GameModel) -> EmpiricalModel:
    try:
        doc = json.loads(Path(path).read_text())
        n_per_pair = int(doc["n_per_pair"])
        counts = doc["counts"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise GameFormatError(f"{path}: malformed counts file ({exc})") from exc
    return rebuild_estimate(model, np.asarray(counts, dtype=np.int64), n_per_pair)


@dataclass(frozen=True)
class PluginDiagnostics:
    n_per_pair: int
    total_samples: int
    xi: float
    solver: str
    seed: int
    tol: float
    backend: str
    wall_ms: float


@dataclass(frozen=True)
class PluginResult:
    strategy: StrategyPair
    empirical_q: ValueTable
    diagnostics: PluginDiagnostics


def plug_in_pipeline(
    model: GameModel,
    n_per_pair: int,
    xi: float,
    seed: int,
    solver: str = "vi",
    tol: float = PIPELINE_TOL,
) -> PluginResult:
    """Estimate the game from equal per-pair sampling, optionally perturb
    its rewards, and plan in the result.

    ``xi = 0`` solves the plain empirical game; ``xi > 0`` adds uniform
    [0, xi] reward noise first.  Sampling and perturbation consume
    independent substreams of ``seed``, so toggling xi changes only the
    rewards of the solved game.
    """
    from .transforms import perturb_rewards  # local import to avoid a cycle

    if solver not in ("vi", "si"):
        raise ValidationError(f"solver must be 'vi' or 'si', got {solver!r}")
    if xi < 0.0:
        raise NegativeXi(xi)
    start = time.perf_counter()
    emp = estimate_model(model, n_per_pair, seed)
    game = emp.estimate
    if xi > 0.0:
        game, _ = perturb_rewards(game, xi, derive_seed(seed, _KEY_PERTURBATION))
    solve = nash_value_iteration if solver == "vi" else nash_strategy_iteration
    table, pair = solve(game, tol)
    wall_ms = (time.perf_counter() - start) * 1e3
    diag = PluginDiagnostics(
        n_per_pair=n_per_pair,
        total_samples=emp.total_samples,
        xi=float(xi),
        solver=solver,
        seed=int(seed),
        tol=tol,
        backend=backend_name(),
        wall_ms=wall_ms,
    )
    return PluginResult(strategy=pair, empirical_q=table, diagnostics=diag)
