"""Synchronous D-DPS iterations, the stacked (compact) cross-check and run diagnostics.

Each agent ``i`` holds an estimate ``x_i`` and a surplus ``y_i``. One round::

    x_i <- P[ sum_j a_ij x_j + eps y_i - alpha_k g_i(x_i) ]
    y_i <- x_i - sum_j a_ij x_j + sum_j b_ij y_j - eps y_i

with every right-hand side read from the previous round. The network-level
accumulation state is ``z_bar = (sum_i x_i + sum_i y_i) / n``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalAbort
from .graph import DirectedGraph
from .oracle import ObjectiveSpec, StepSchedule, global_objective
from .projection import ConstraintSet
from .weights import DEFAULT_EPSILON_CAP, SurplusSystem, fit_log_linear, surplus_system

TRACE_HEADER = ["k", "agent", "x_residual", "consensus_x", "y_norm",
                "g_total", "f_zbar", "f_best", "gap"]
GAP_FLOOR = 1e-14
MIN_RATE_ROWS = 50


@dataclass(frozen=True, eq=False)
class SolverState:
    k: int
    x: np.ndarray
    y: np.ndarray
    z_bar: np.ndarray

    @classmethod
    def from_xy(cls, k, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return cls(k, x, y, accumulation(x, y))


def accumulation(x, y):
    return (x.sum(axis=0) + y.sum(axis=0)) / x.shape[0]


def _check_finite(*arrays, k):
    for a in arrays:
        if not np.isfinite(a).all():
            raise NumericalAbort(f"non-finite state at iteration {k}")


def _advance(state, sys, cset, spec, alpha):
    # returns the new state and the perturbation rows g_1..g_n
    x, y, eps = state.x, state.y, sys.epsilon
    ax = sys.A @ x
    mixed = ax + eps * y
    x_new = cset.project_rows(mixed - alpha * spec.subgradients(x))
    y_new = x - ax + sys.B @ y - eps * y
    _check_finite(x_new, y_new, k=state.k + 1)
    return SolverState.from_xy(state.k + 1, x_new, y_new), x_new - mixed


def step(state: SolverState, sys: SurplusSystem, cset: ConstraintSet,
         spec: ObjectiveSpec, sched: StepSchedule) -> SolverState:
    """One synchronous round for all agents, using ``alpha_k`` with ``k = state.k``."""
    return _advance(state, sys, cset, spec, sched.alpha(state.k))[0]


def perturbation(z, sys: SurplusSystem, cset: ConstraintSet, spec: ObjectiveSpec,
                 alpha: float) -> np.ndarray:
    """Stacked perturbation: projected update minus pure mixing in the top ``n`` rows, zero below."""
    n = sys.n
    top = (sys.M @ z)[:n]
    g = np.zeros_like(z)
    g[:n] = cset.project_rows(top - alpha * spec.subgradients(z[:n])) - top
    return g


def step_compact(z, sys: SurplusSystem, cset: ConstraintSet, spec: ObjectiveSpec,
                 sched: StepSchedule, k: int) -> np.ndarray:
    """Same round on the stacked ``(2n, p)`` state: ``z <- M z + g``."""
    z = np.asarray(z, dtype=float)
    out = sys.M @ z + perturbation(z, sys, cset, spec, sched.alpha(k))
    _check_finite(out, k=k + 1)
    return out


@dataclass(eq=False)
class SolverTrace:
    """Decimated per-agent series plus streaming network diagnostics.

    Row ``r`` corresponds to iteration ``k[r]``. ``f_best`` and ``gap`` are NaN
    at ``k = 0`` (the running best starts at ``k = 1``). The ``sum_*`` columns
    are partial sums over steps ``0 .. k-1``: ``alpha_t g_t``, ``alpha_t^2``
    and ``g_t^2`` with ``g_t = sum_i ||g_i^t||``.
    """

    n: int
    epsilon: float
    f_star: float | None
    k: np.ndarray
    x_residual: np.ndarray
    consensus_x: np.ndarray
    y_norm: np.ndarray
    g_total: np.ndarray
    f_zbar: np.ndarray
    f_best: np.ndarray
    gap: np.ndarray
    sum_alpha_g: np.ndarray
    sum_alpha_sq: np.ndarray
    sum_g_sq: np.ndarray
    window: int
    window_consensus_x: np.ndarray
    window_y_norm: np.ndarray
    conservation_error: float
    final_state: SolverState

    def row_at(self, k: int) -> int:
        hits = np.flatnonzero(self.k == k)
        if hits.size == 0:
            raise KeyError(f"iteration {k} was not recorded")
        return int(hits[0])

    def summability_ratios(self, k: int) -> tuple[float, float]:
        """``(sum alpha g / sum alpha^2, sum g^2 / sum alpha^2)`` through iteration `k`."""
        r = self.row_at(k)
        return (self.sum_alpha_g[r] / self.sum_alpha_sq[r],
                self.sum_g_sq[r] / self.sum_alpha_sq[r])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r, k in enumerate(self.k):
            for i in range(self.n):
                w.writerow([int(k), i, _fmt(self.x_residual[r, i]),
                            _fmt(self.consensus_x[r, i]), _fmt(self.y_norm[r, i]),
                            "", "", "", ""])
            w.writerow([int(k), -1, _fmt(self.x_residual[r].max()),
                        _fmt(self.consensus_x[r].max()), _fmt(self.y_norm[r].max()),
                        _fmt(self.g_total[r]), _fmt(self.f_zbar[r]),
                        _fmt(self.f_best[r]), _fmt(self.gap[r])])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(v):
    return repr(float(v))


def initial_state(n, p, cset=None, init="zero", seed=0):
    """Zero start by default; ``init="consensus"`` puts every agent at one random feasible point."""
    if init == "zero":
        x = np.zeros((n, p))
    elif init == "consensus":
        c = np.random.default_rng(seed).standard_normal(p)
        if cset is not None:
            c = cset.project_rows(c[None])[0]
        x = np.tile(c, (n, 1))
    else:
        raise ValueError(f"unknown init {init!r}")
    return SolverState.from_xy(0, x, np.zeros((n, p)))


def run(g: DirectedGraph, cset: ConstraintSet, spec: ObjectiveSpec, sched: StepSchedule,
        K: int, record_every: int = 1, *, epsilon: float | None = None,
        epsilon_cap: float = DEFAULT_EPSILON_CAP, x_star=None, f_star=None,
        window: int = 100, init: str = "zero", seed: int = 0) -> SolverTrace:
    """Run `K` rounds from the given start and collect a :class:`SolverTrace`.

    Rows are kept at ``k = 0, record_every, 2*record_every, ...`` and at ``K``.
    Conservation (``n z_bar`` advances by exactly the summed perturbation) is
    checked at every step and its worst violation stored.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if spec.n != g.n:
        raise ValueError(f"objective has {spec.n} agents, graph has {g.n}")
    sys = surplus_system(g, epsilon=epsilon, epsilon_cap=epsilon_cap)
    n, p = g.n, spec.p
    state = initial_state(n, p, cset, init, seed)
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float).reshape(p)

    rec_k = sorted(set(range(0, K + 1, record_every)) | {K})
    R = len(rec_k)
    t = _TraceBuffers(R, n)
    n_windows = K // window
    win_cx = np.zeros(n_windows)
    win_y = np.zeros(n_windows)

    f_best = math.inf
    s_ag = s_aa = s_gg = 0.0
    g_last = 0.0
    cons_err = 0.0
    r = 0

    def record(state, f_z):
        nonlocal r
        x, y, z = state.x, state.y, state.z_bar
        t.k[r] = state.k
        t.cx[r] = np.linalg.norm(x - z, axis=1)
        t.yn[r] = np.linalg.norm(y, axis=1)
        t.res[r] = np.linalg.norm(x - x_star, axis=1) if x_star is not None else np.nan
        t.g[r] = g_last
        t.fz[r] = f_z
        t.fb[r] = f_best if state.k > 0 else np.nan
        t.gap[r] = (f_best - f_star) if (state.k > 0 and f_star is not None) else np.nan
        t.sag[r], t.saa[r], t.sgg[r] = s_ag, s_aa, s_gg
        r += 1

    record(state, global_objective(spec, state.z_bar))
    for k in range(K):
        alpha = sched.alpha(k)
        new, pert = _advance(state, sys, cset, spec, alpha)
        drift = n * new.z_bar - n * state.z_bar - pert.sum(axis=0)
        cons_err = max(cons_err, float(np.abs(drift).max()))
        g_last = float(np.linalg.norm(pert, axis=1).sum())
        s_ag += alpha * g_last
        s_aa += alpha * alpha
        s_gg += g_last * g_last
        state = new
        f_z = global_objective(spec, state.z_bar)
        if not (math.isfinite(f_z) and math.isfinite(g_last)):
            # iterates are finite but their norms or the objective overflowed
            raise NumericalAbort(f"overflow in objective or perturbation at iteration {k + 1}")
        f_best = min(f_best, f_z)
        w = k // window
        if w < n_windows:
            win_cx[w] += np.linalg.norm(state.x - state.z_bar, axis=1).max()
            win_y[w] += np.linalg.norm(state.y, axis=1).max()
        if r < R and rec_k[r] == state.k:
            record(state, f_z)

    return SolverTrace(
        n=n, epsilon=sys.epsilon, f_star=f_star, k=t.k, x_residual=t.res,
        consensus_x=t.cx, y_norm=t.yn, g_total=t.g, f_zbar=t.fz, f_best=t.fb,
        gap=t.gap, sum_alpha_g=t.sag, sum_alpha_sq=t.saa, sum_g_sq=t.sgg,
        window=window, window_consensus_x=win_cx / window, window_y_norm=win_y / window,
        conservation_error=cons_err, final_state=state,
    )


class _TraceBuffers:
    def __init__(self, R, n):
        self.k = np.zeros(R, dtype=np.int64)
        self.res = np.zeros((R, n))
        self.cx = np.zeros((R, n))
        self.yn = np.zeros((R, n))
        self.g = np.zeros(R)
        self.fz = np.zeros(R)
        self.fb = np.zeros(R)
        self.gap = np.zeros(R)
        self.sag = np.zeros(R)
        self.saa = np.zeros(R)
        self.sgg = np.zeros(R)


def rate_fit_series(ks, gaps) -> tuple[float, float]:
    """Slope and r^2 of ``log gap`` against ``log(ln K / sqrt K)`` over the second half of rows.

    Rows with ``K < 2`` (where the envelope is zero) are dropped first. Gaps
    must be positive. Zero or negative values mean the optimum estimate is
    too high or the run reached the optimum exactly; either way the fit is refused.
    """
    ks = np.asarray(ks, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    keep = ks >= 2
    ks, gaps = ks[keep], gaps[keep]
    if ks.size < MIN_RATE_ROWS:
        raise ValueError(f"insufficient rows: {ks.size} < {MIN_RATE_ROWS}")
    if not np.isfinite(gaps).all():
        raise ValueError("gap series contains non-finite values")
    if (gaps <= 0).any():
        raise NumericalAbort(
            f"nonpositive gaps ({int((gaps <= 0).sum())} rows, min {gaps.min():.3g}); "
            "the optimum estimate is too high or the run reached it exactly"
        )
    half = ks.size // 2
    ks, gaps = ks[half:], np.maximum(gaps[half:], GAP_FLOOR)
    envelope = np.log(np.log(ks) / np.sqrt(ks))
    _, slope, r2 = fit_log_linear(envelope, gaps)
    return slope, r2


def rate_fit(trace: SolverTrace) -> tuple[float, float]:
    if trace.f_star is None:
        raise ValueError("trace has no optimum value; gaps unavailable")
    return rate_fit_series(trace.k, trace.gap)


def read_trace_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """``(k, gap)`` from the network rows (``agent == -1``) of a trace CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        ks, gaps = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_HEADER):
                raise ValueError(f"{path}: line {lineno}: expected {len(TRACE_HEADER)} fields")
            if row[1] != "-1":
                continue
            try:
                k, gap = int(row[0]), float(row[8])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed numbers") from None
            if k >= 1:
                ks.append(k)
                gaps.append(gap)
    return np.array(ks), np.array(gaps)
