"""Run every order decider on the constructed positive and negative pairs and attach Monte Carlo evidence."""
from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass

from matsn.cases import negative_cases, positive_cases
from matsn.orders import check_order, family_for_order, mc_order_evidence


@dataclass
class EvidenceExperiment:
    draws: int = 100_000
    family_size: int = 8
    seed: int = 6000


def run(cfg: EvidenceExperiment) -> list[dict]:
    rows = []
    for k, case in enumerate(positive_cases() + negative_cases()):
        verdict = check_order(case.order, case.x, case.y)
        family = family_for_order(case.order, case.x.n, case.x.p, cfg.family_size, seed=k)
        ev = mc_order_evidence(case.x, case.y, family, cfg.draws, seed=cfg.seed + k, claimed=verdict.status)
        z = ev.z_scores()
        print(f"{case.order.value:4s} {case.name:34s} {verdict.status.value:16s} "
              f"expected {case.expected.value:16s} min z {z.min():8.2f}")
        rows.append({"case": case.name, "expected": case.expected.value, "verdict": verdict.to_dict(),
                     "evidence": ev.to_dict()})
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=100_000)
    ap.add_argument("--family-size", type=int, default=8)
    ap.add_argument("--seed", type=int, default=6000)
    ap.add_argument("--out")
    args = ap.parse_args()
    cfg = EvidenceExperiment(args.draws, args.family_size, args.seed)
    rows = run(cfg)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"config": asdict(cfg), "cases": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
