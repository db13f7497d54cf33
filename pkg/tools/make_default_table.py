"""Regenerate the shipped critical-value table.

    python tools/make_default_table.py [--reps 100000] [--out PATH]

Equivalent to ``modecert simulate-null --dist normal:0,1 --n 10000 --reps 100000
--seed 20240521 --alpha dense --out PATH``.
"""

import argparse
from pathlib import Path

import numpy as np

from modecert.distributions import parse_dist
from modecert.io import write_json
from modecert.montecarlo import estimate_critical_values

DENSE_ALPHAS = np.round(np.arange(1, 1000) / 1000.0, 3)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=20240521)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/modecert/tables/d_alpha_default.json"))
    args = ap.parse_args()
    table = estimate_critical_values(parse_dist("normal:0,1"), args.n, args.reps, DENSE_ALPHAS, args.seed)
    write_json(table.to_dict(), args.out)


if __name__ == "__main__":
    main()
