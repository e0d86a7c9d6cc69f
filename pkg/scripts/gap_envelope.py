"""Fit the best-value gap of a run against ln K / sqrt K and write the plotting CSV.

    python3 scripts/gap_envelope.py [--config configs/median_interior.cfg] [--out DIR]
"""

import argparse
from pathlib import Path

from ddps.cli import cmd_rate
from ddps.config import load_config
from ddps.experiment import run_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=Path(__file__).parent.parent / "configs" / "median_interior.cfg")
    ap.add_argument("--out", default=".")
    args = ap.parse_args()

    cfg = load_config(args.config)
    res = run_config(cfg, base_dir=Path(args.config).parent)
    trace = Path(args.out) / cfg.out
    res.trace.write_csv(trace)
    print(f"trace -> {trace}; final gap {res.trace.gap[-1]:.3g}")
    cmd_rate(trace, Path(args.out) / (trace.stem + "_rate.csv"))


if __name__ == "__main__":
    main()
