"""Clipped-median instance across graph seeds and epsilon caps.

Prints the worst agent residual and the accumulation-state objective gap
f(z_bar^K) - f* for every (seed, cap) pair. Used to size the bias that the
surplus variables leave in z_bar.

    python3 scripts/epsilon_sweep.py --seeds 0 1 2 3 --caps 1e-3 1e-2 1e-1 --jobs 4
"""

import argparse
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ddps.config import load_config
from ddps.experiment import run_config

DEFAULT = Path(__file__).parent.parent / "configs" / "clipped_median.cfg"


def one(args):
    cfg, seed, cap = args
    res = run_config(dataclasses.replace(cfg, seed=seed, epsilon_cap=cap))
    t = res.trace
    return (seed, cap, t.epsilon, float(np.abs(t.final_state.x - res.x_star).max()),
            float(t.f_zbar[-1] - res.f_star), float(t.gap[-1]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=DEFAULT)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3])
    ap.add_argument("--caps", type=float, nargs="+", default=[1e-3, 1e-2, 1e-1])
    ap.add_argument("--iters", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.iters:
        cfg = dataclasses.replace(cfg, iters=args.iters)
    jobs = [(cfg, s, c) for c in args.caps for s in args.seeds]
    print("seed,cap,epsilon,max_residual,f_zbar_gap,best_gap")
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = map(one, jobs)
    for row in rows:
        print(",".join(repr(v) if isinstance(v, float) else str(v) for v in row), flush=True)


if __name__ == "__main__":
    main()
