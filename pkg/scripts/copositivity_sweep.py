"""Sweep the exact copositivity decider against a simplex-lattice minimum.

Reports agreement by dimension and the time per decision.
"""
from __future__ import annotations

import argparse
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from matsn.linalg import is_copositive
from matsn.selftest import random_copositivity_inputs


@dataclass
class SweepConfig:
    count: int = 500
    resolution: int = 200
    margin: float = 1e-2
    seed: int = 707
    dims: tuple[int, ...] = (2, 3, 4)


def run(cfg: SweepConfig) -> Counter:
    rng = np.random.default_rng(cfg.seed)
    inputs = random_copositivity_inputs(rng, cfg.count, cfg.dims, cfg.resolution, cfg.margin)
    tally: Counter = Counter()
    spent = 0.0
    for a, low in inputs:
        start = time.perf_counter()
        verdict = is_copositive(a)
        spent += time.perf_counter() - start
        d = a.shape[0]
        tally[(d, "total")] += 1
        tally[(d, "copositive")] += verdict.copositive
        tally[(d, "agree")] += verdict.copositive == (low > 0)
    for d in cfg.dims:
        print(f"d={d}: {tally[(d, 'agree')]}/{tally[(d, 'total')]} agree, "
              f"{tally[(d, 'copositive')]} copositive")
    print(f"{1e3 * spent / max(len(inputs), 1):.2f} ms per decision")
    return tally


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--resolution", type=int, default=200)
    ap.add_argument("--seed", type=int, default=707)
    args = ap.parse_args()
    run(SweepConfig(count=args.count, resolution=args.resolution, seed=args.seed))


if __name__ == "__main__":
    main()
