"""Command line entry point: ``gen-graph``, ``run``, ``analyze-matrix``, ``rate``.

Exit codes: 0 success, 1 configuration or input error, 2 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigError, GraphError, NumericalAbort
from .experiment import run_config
from .graph import is_strongly_connected, random_strongly_connected, read_edge_list, write_edge_list
from .solver import rate_fit_series, read_trace_csv
from .weights import (build_weights, choose_epsilon, assemble_m, epsilon_upper_bound,
                      estimate_gamma, limit_error_series, DEFAULT_EPSILON_CAP)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

ANALYSIS_HEADER = ["k", "limit_error", "fitted_gamma", "fitted_Gamma", "epsilon", "upsilon_bound"]
RATE_HEADER = ["log_envelope", "log_gap"]


def cmd_gen_graph(n, extra_edge_prob, seed, out_path):
    g = random_strongly_connected(n, extra_edge_prob, seed)
    write_edge_list(g, out_path)
    print(f"n={g.n} edges={len(g.edges)} strongly_connected={is_strongly_connected(g)} -> {out_path}")
    return g


def _run_one(config_path, overrides):
    cfg = load_config(config_path)
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides).validate()
    result = run_config(cfg, base_dir=Path(config_path).parent)
    out = Path(cfg.out)
    if not out.is_absolute() and "out" not in overrides:
        out = Path(config_path).parent / out
    result.trace.write_csv(out)
    return str(out), result.summary()


def cmd_run(config_paths, overrides=None, jobs=1):
    """Execute each config; returns a list of ``(trace_path, summary)``."""
    overrides = overrides or {}
    if jobs > 1 and len(config_paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, p, overrides) for p in config_paths]
            results = [f.result() for f in futures]
    else:
        results = [_run_one(p, overrides) for p in config_paths]
    for path, summary in results:
        print(f"trace -> {path}")
        for key, value in summary.items():
            print(f"  {key}: {value}")
    return results


def cmd_analyze_matrix(graph_path, epsilon, k_max, out_path, epsilon_cap=DEFAULT_EPSILON_CAP):
    g = read_edge_list(graph_path)
    A, B = build_weights(g)
    eps = choose_epsilon(B, epsilon_cap) if epsilon is None else epsilon
    M = assemble_m(A, B, eps)
    errors = limit_error_series(M, k_max)
    Gamma, gamma = estimate_gamma(M, k_max)
    upsilon = epsilon_upper_bound(A, B) if g.n >= 2 else None
    bottom = float(np.abs(np.linalg.matrix_power(M, k_max)[g.n:]).max())
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ANALYSIS_HEADER)
        for k, e in enumerate(errors):
            w.writerow([k, repr(float(e)), repr(gamma), repr(Gamma), repr(float(eps)),
                        "" if upsilon is None else repr(upsilon)])
    print(f"n={g.n} epsilon={eps:.6g} upsilon_bound={upsilon}")
    print(f"fitted Gamma={Gamma:.6g} gamma={gamma:.8f}")
    print(f"limit_error k=1: {errors[1]:.6g}  k={k_max}: {errors[-1]:.6g}")
    print(f"max |bottom block| of M^{k_max}: {bottom:.3g}")
    return {"epsilon": eps, "Gamma": Gamma, "gamma": gamma, "upsilon": upsilon,
            "errors": errors, "bottom_block_max": bottom}


def cmd_rate(trace_path, out_path=None):
    ks, gaps = read_trace_csv(trace_path)
    slope, r2 = rate_fit_series(ks, gaps)
    print(f"slope={slope:.6f} r_squared={r2:.6f} (envelope ln K / sqrt K has slope 1)")
    if out_path:
        keep = (ks >= 2) & (gaps > 0)
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RATE_HEADER)
            for k, gap in zip(ks[keep], gaps[keep]):
                w.writerow([repr(float(np.log(np.log(k) / np.sqrt(k)))), repr(float(np.log(gap)))])
    return slope, r2


def _epsilon_arg(text):
    if text.lower() == "auto":
        return None
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="ddps", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="write a random strongly connected digraph")
    p.add_argument("--nodes", "-n", type=int, required=True)
    p.add_argument("--extra-edge-prob", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run D-DPS from one or more config files")
    p.add_argument("configs", nargs="*", metavar="CONFIG")
    p.add_argument("--config", action="append", default=[], help="config file (repeatable)")
    p.add_argument("--out", help="trace CSV path (single config only)")
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--record-every", type=int)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("analyze-matrix", help="powers of M: limit error and geometric fit")
    p.add_argument("--graph", required=True)
    p.add_argument("--epsilon", type=_epsilon_arg, default=None, help="value or 'auto'")
    p.add_argument("--epsilon-cap", type=float, default=DEFAULT_EPSILON_CAP)
    p.add_argument("--k-max", type=int, default=2000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rate", help="fit the optimality gap against ln K / sqrt K")
    p.add_argument("trace", nargs="?")
    p.add_argument("--trace", dest="trace_opt")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-graph":
            cmd_gen_graph(args.nodes, args.extra_edge_prob, args.seed, args.out)
        elif args.command == "run":
            paths = list(args.configs) + list(args.config)
            if not paths:
                raise ConfigError("no config given")
            if args.out and len(paths) > 1:
                raise ConfigError("--out applies to a single config only")
            overrides = {k: v for k, v in (("out", args.out), ("seed", args.seed),
                                           ("iters", args.iters),
                                           ("record_every", args.record_every)) if v is not None}
            cmd_run(paths, overrides, jobs=args.jobs)
        elif args.command == "analyze-matrix":
            cmd_analyze_matrix(args.graph, args.epsilon, args.k_max, args.out, args.epsilon_cap)
        elif args.command == "rate":
            path = args.trace or args.trace_opt
            if not path:
                raise ConfigError("no trace given")
            cmd_rate(path, args.out)
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
