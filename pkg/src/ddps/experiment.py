"""Turn a :class:`RunConfig` into a graph, problem and solver run."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import ConfigError, GraphError
from .graph import DirectedGraph, is_strongly_connected, random_strongly_connected, read_edge_list
from .oracle import (ObjectiveSpec, StepSchedule, SumOfDistances, load_anchors_csv,
                     load_logistic_csv, optimum, synthetic_logistic)
from .projection import Ball, Box, WholeSpace
from .solver import SolverTrace, run


@dataclass(eq=False)
class Problem:
    graph: DirectedGraph
    spec: ObjectiveSpec
    cset: object
    schedule: StepSchedule


@dataclass(eq=False)
class RunResult:
    trace: SolverTrace
    x_star: np.ndarray
    f_star: float
    provenance: str
    wall_time: float

    def summary(self) -> dict:
        t = self.trace
        return {
            "iters": int(t.k[-1]),
            "epsilon": t.epsilon,
            "final_max_residual": float(t.x_residual[-1].max()),
            "final_consensus": float(t.consensus_x[-1].max()),
            "final_surplus": float(t.y_norm[-1].max()),
            "f_star": self.f_star,
            "f_star_source": self.provenance,
            "final_f_zbar": float(t.f_zbar[-1]),
            "final_gap": float(t.gap[-1]),
            "conservation_error": t.conservation_error,
            "wall_time_s": self.wall_time,
        }


def _seeds(seed):
    # independent streams for graph, data, reference solver and initial state
    children = np.random.SeedSequence(seed).spawn(4)
    return [int(c.generate_state(1)[0]) for c in children]


def _resolve(path, base_dir):
    p = Path(path)
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    if not p.exists():
        raise ConfigError(f"referenced file does not exist: {p}")
    return p


def parse_anchors(text: str, n: int) -> ObjectiveSpec:
    groups = text.split(";")
    if len(groups) != n:
        raise ConfigError(f"anchors lists {len(groups)} agent groups, graph has {n} agents")
    parsed = []
    for g in groups:
        try:
            parsed.append([[float(c) for c in tok.split(",")] for tok in g.split()])
        except ValueError:
            raise ConfigError(f"bad anchor group {g.strip()!r}") from None
    dims = {len(a) for grp in parsed for a in grp}
    if len(dims) != 1:
        raise ConfigError("anchors must all have the same dimension")
    p = dims.pop()
    return ObjectiveSpec(tuple(SumOfDistances(np.array(grp, dtype=float).reshape(-1, p))
                               for grp in parsed))


def build_constraint(cfg: RunConfig, p: int):
    if cfg.constraint == "none":
        return WholeSpace(p)
    if cfg.constraint == "ball":
        center = np.zeros(p) if not cfg.ball_center else np.array(cfg.ball_center)
        if center.size == 1 and p > 1:
            center = np.full(p, center[0])
        if center.size != p:
            raise ConfigError(f"ball_center has {center.size} entries, problem dimension is {p}")
        return Ball(center, cfg.ball_radius)
    lo, hi = np.array(cfg.box_lower), np.array(cfg.box_upper)
    if lo.size == 1 and p > 1:
        lo, hi = np.full(p, lo[0]), np.full(p, hi[0])
    if lo.size != p:
        raise ConfigError(f"box bounds have {lo.size} entries, problem dimension is {p}")
    return Box(lo, hi)


def build_problem(cfg: RunConfig, base_dir=None) -> Problem:
    cfg.validate()
    s_graph, s_data, _, _ = _seeds(cfg.seed)
    if cfg.graph_file:
        try:
            g = read_edge_list(_resolve(cfg.graph_file, base_dir), undirected=cfg.graph_undirected)
        except GraphError as exc:
            raise ConfigError(str(exc)) from None
    else:
        g = random_strongly_connected(cfg.graph_nodes, cfg.graph_extra_edge_prob, s_graph)
    if not is_strongly_connected(g):
        raise ConfigError("communication graph is not strongly connected")

    try:
        if cfg.problem == "logistic":
            if cfg.data_file:
                spec = load_logistic_csv(_resolve(cfg.data_file, base_dir), g.n)
            else:
                spec = synthetic_logistic(g.n, cfg.samples_per_agent, cfg.dim, s_data,
                                          flip=cfg.label_flip)
        elif cfg.data_file:
            spec = load_anchors_csv(_resolve(cfg.data_file, base_dir), g.n)
        else:
            spec = parse_anchors(cfg.anchors, g.n)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot build problem data: {exc}") from None

    cset = build_constraint(cfg, spec.p)
    return Problem(g, spec, cset, StepSchedule(cfg.step_a, cfg.step_exponent))


def run_config(cfg: RunConfig, base_dir=None) -> RunResult:
    """Build the problem, obtain the optimum and execute the solver."""
    prob = build_problem(cfg, base_dir)
    _, _, s_ref, s_init = _seeds(cfg.seed)
    budget = cfg.reference_budget or 10 * cfg.iters
    start = time.perf_counter()
    x_star, f_star, source = optimum(prob.spec, prob.cset, budget, seed=s_ref)
    trace = run(prob.graph, prob.cset, prob.spec, prob.schedule, cfg.iters, cfg.record_every,
                epsilon=cfg.epsilon, epsilon_cap=cfg.epsilon_cap, x_star=x_star, f_star=f_star,
                window=cfg.window, init=cfg.init, seed=s_init)
    return RunResult(trace, x_star, f_star, source, time.perf_counter() - start)
