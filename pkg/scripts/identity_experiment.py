"""Compare both sides of the integral identity on the preregistered triples.

    python scripts/identity_experiment.py --nodes 16 --mc-per-node 200000 --out identity.json
"""
from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass

from matsn.identity import preregistered_cases, verify_identity


@dataclass
class IdentityExperiment:
    lambda_nodes: int = 16
    mc_per_node: int = 200_000
    lhs_samples: int | None = None
    seed: int = 5000
    convergence: bool = True


def run(cfg: IdentityExperiment) -> dict:
    rows = []
    for k, case in enumerate(preregistered_cases()):
        start = time.perf_counter()
        rep = verify_identity(case.f, case.x, case.y, cfg.lambda_nodes, cfg.mc_per_node, cfg.seed + k,
                              cfg.lhs_samples, cfg.convergence)
        rows.append({"case": case.name, "seconds": time.perf_counter() - start, **rep.to_dict()})
        print(f"{case.name:22s} lhs {rep.lhs.value:+.5f} rhs {rep.rhs.value:+.5f} z {rep.z:5.2f} "
              f"{'pass' if rep.passed else 'FAIL'}")
    return {"config": asdict(cfg), "cases": rows}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=16)
    ap.add_argument("--mc-per-node", type=int, default=200_000)
    ap.add_argument("--lhs-samples", type=int)
    ap.add_argument("--seed", type=int, default=5000)
    ap.add_argument("--out")
    args = ap.parse_args()
    cfg = IdentityExperiment(args.nodes, args.mc_per_node, args.lhs_samples, args.seed)
    result = run(cfg)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result, fh, indent=2)


if __name__ == "__main__":
    main()
