"""Backend equivalence: the numba kernels and the numpy fallbacks must be
drop-in replacements for each other."""

import os
import subprocess
import sys

import numpy as np
import pytest

from tbsg import _kernels
from tbsg._kernels import MODE_MAX, MODE_MIN, tally_numpy, value_iterate_numpy

from conftest import make_game


def _random_problem(seed):
    game = make_game(ns=5, na=3, gamma=0.9, seed=seed)
    mode = np.where(game.owner == 0, MODE_MAX, MODE_MIN).astype(np.int64)
    mode[0] = 1  # pin one state to a fixed action to cover that branch
    return game, mode


@pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba backend unavailable")
class TestBackendEquivalence:
    def test_value_iterate_matches_numpy(self):
        for seed in range(5):
            game, mode = _random_problem(seed)
            args = (game.transitions, game.rewards, mode, game.discount, 1e-12, 50_000)
            q_j, it_j, res_j = _kernels.value_iterate_numba(*args)
            q_n, it_n, res_n = value_iterate_numpy(*args)
            assert it_j == it_n
            assert np.max(np.abs(q_j - q_n)) < 1e-12

    def test_tally_matches_numpy_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            ns = int(rng.integers(2, 8))
            row = rng.random(ns)
            row /= row.sum()
            cum = np.cumsum(row)
            u = rng.random(int(rng.integers(1, 2000)))
            c_j = np.zeros(ns, dtype=np.int64)
            c_n = np.zeros(ns, dtype=np.int64)
            _kernels.tally_numba(cum, u, c_j)
            tally_numpy(cum, u, c_n)
            assert np.array_equal(c_j, c_n)

    def test_tally_u_at_one_boundary_clamps(self):
        # cumulative rounding can leave cum[-1] slightly below a draw; both
        # paths must clamp to the last state instead of overflowing
        cum = np.array([0.3, 1.0 - 1e-16])
        u = np.array([1.0 - 1e-17])
        c_j = np.zeros(2, dtype=np.int64)
        c_n = np.zeros(2, dtype=np.int64)
        _kernels.tally_numba(cum, u, c_j)
        tally_numpy(cum, u, c_n)
        assert np.array_equal(c_j, c_n)
        assert c_j[1] == 1


class TestEnvFlag:
    def test_flag_forces_numpy_backend(self):
        env = dict(os.environ, TBSG_NUMBA="0")
        out = subprocess.run(
            [sys.executable, "-c", "import tbsg; print(tbsg.backend_name())"],
            capture_output=True,
            text=True,
            env=env,
            check=True,
        )
        assert out.stdout.strip() == "numpy"

    def test_default_backend_reported(self):
        assert _kernels.backend_name() in ("numba", "numpy")


class TestValueIterateNumpy:
    def test_gamma_zero_returns_rewards(self):
        game, mode = _random_problem(0)
        q, _, resid = value_iterate_numpy(
            game.transitions, game.rewards, mode, 0.0, 0.0, 100
        )
        assert np.array_equal(q, game.rewards)
        assert resid == 0.0

    def test_budget_exhaustion_reports_residual(self):
        game, mode = _random_problem(1)
        q, it, resid = value_iterate_numpy(
            game.transitions, game.rewards, mode, game.discount, 0.0, 3
        )
        assert it == 3
        assert resid > 0.0
