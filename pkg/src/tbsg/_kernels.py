"""Hot numeric kernels: fixed-point value sweeps and sampling tallies.

Both kernels exist twice — a numba ``@njit`` build and a pure-numpy
build.  The active backend is chosen once at import time: numba when it
imports cleanly, unless the environment variable ``TBSG_NUMBA`` is set
to ``0``/``false``/``no`` (then the numpy path is forced).  The two
builds are drop-in equivalent; ``benchmarks/bench_backends.py`` compares
their throughput.

State projection modes for the value sweep, per state:
  MODE_MAX (-1): take the max over actions (maximizer owns the state)
  MODE_MIN (-2): take the min over actions
  a >= 0:        action pinned to ``a`` (evaluation / fixed opponent)
"""

from __future__ import annotations

import os

import numpy as np

MODE_MAX = -1
MODE_MIN = -2

_FLAG = os.environ.get("TBSG_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "no", "")

HAS_NUMBA = False
if _WANT_NUMBA:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False


def value_iterate_numpy(
    p: np.ndarray,
    r: np.ndarray,
    mode: np.ndarray,
    gamma: float,
    stop: float,
    max_iter: int,
) -> tuple[np.ndarray, int, float]:
    """Synchronous fixed-point sweep q <- r + gamma * P v(q).

    Returns (q, iterations, last residual); stops when the sup-norm
    residual drops to ``stop`` or the budget runs out.
    """
    m_size = r.shape[0]
    ns = p.shape[1]
    na = m_size // ns
    rows = np.arange(ns)
    fixed = np.maximum(mode, 0)
    q = np.zeros(m_size)
    it = 0
    resid = np.inf
    while it < max_iter:
        q3 = q.reshape(ns, na)
        v = np.where(
            mode == MODE_MAX,
            q3.max(axis=1),
            np.where(mode == MODE_MIN, q3.min(axis=1), q3[rows, fixed]),
        )
        qn = r + gamma * (p @ v)
        resid = float(np.max(np.abs(qn - q)))
        q = qn
        it += 1
        if resid <= stop:
            break
    return q, it, resid


def tally_numpy(cum: np.ndarray, u: np.ndarray, counts: np.ndarray) -> None:
    """Accumulate inverse-CDF draws into ``counts``.

    Successor of a uniform draw ``x`` is the first state whose cumulative
    probability strictly exceeds ``x`` (clamped to the last state against
    cumulative-sum round-off).
    """
    ns = cum.shape[0]
    idx = np.searchsorted(cum, u, side="right")
    np.minimum(idx, ns - 1, out=idx)
    counts += np.bincount(idx, minlength=ns)


if HAS_NUMBA:

    @njit(cache=True)
    def _value_iterate_jit(p, r, mode, gamma, stop, max_iter):
        m_size = r.shape[0]
        ns = p.shape[1]
        na = m_size // ns
        q = np.zeros(m_size)
        v = np.empty(ns)
        it = 0
        resid = np.inf
        while it < max_iter:
            for s in range(ns):
                md = mode[s]
                base = s * na
                if md == MODE_MAX:
                    best = q[base]
                    for a in range(1, na):
                        x = q[base + a]
                        if x > best:
                            best = x
                    v[s] = best
                elif md == MODE_MIN:
                    best = q[base]
                    for a in range(1, na):
                        x = q[base + a]
                        if x < best:
                            best = x
                    v[s] = best
                else:
                    v[s] = q[base + md]
            qn = r + gamma * np.dot(p, v)
            resid = 0.0
            for i in range(m_size):
                d = abs(qn[i] - q[i])
                if d > resid:
                    resid = d
            q = qn
            it += 1
            if resid <= stop:
                break
        return q, it, resid

    @njit(cache=True)
    def _tally_jit(cum, u, counts):
        ns = cum.shape[0]
        n = u.shape[0]
        for k in range(n):
            x = u[k]
            lo = 0
            hi = ns
            while lo < hi:
                mid = (lo + hi) // 2
                if cum[mid] <= x:
                    lo = mid + 1
                else:
                    hi = mid
            if lo >= ns:
                lo = ns - 1
            counts[lo] += 1

    def value_iterate_numba(p, r, mode, gamma, stop, max_iter):
        q, it, resid = _value_iterate_jit(
            np.ascontiguousarray(p), np.ascontiguousarray(r),
            np.ascontiguousarray(mode), float(gamma), float(stop), int(max_iter),
        )
        return q, int(it), float(resid)

    def tally_numba(cum, u, counts):
        _tally_jit(np.ascontiguousarray(cum), np.ascontiguousarray(u), counts)

    value_iterate = value_iterate_numba
    tally = tally_numba
    BACKEND = "numba"
else:
    value_iterate = value_iterate_numpy
    tally = tally_numpy
    BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND
