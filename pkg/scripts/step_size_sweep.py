#!/usr/bin/env python3
"""Step-size sweep at fixed leg span on an anisotropic gaussian.

Holds the leg span L*dt constant while sweeping dt, so every configuration
proposes over the same time horizon at different integration accuracy.  Prints
the ESS of the stiffest coordinate and the slot fractions per dt; larger steps
buy more transitions per force evaluation until rejections take over.

Usage:
    python scripts/step_size_sweep.py
    python scripts/step_size_sweep.py --dts 0.1 0.2 0.4 0.8 --extra-chances 3
"""

import argparse
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from xchmc import parse_spec, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dts", type=float, nargs="+",
                    default=[0.15, 0.25, 0.4, 0.6, 0.9])
    ap.add_argument("--leg-span", type=float, default=2.0,
                    help="L*dt, held fixed across the sweep")
    ap.add_argument("--variances", type=float, nargs="+",
                    default=[1.0, 4.0, 9.0])
    ap.add_argument("--sin-psi", type=float, default=1.0)
    ap.add_argument("--extra-chances", type=int, default=0)
    ap.add_argument("--replicas", type=int, default=6)
    ap.add_argument("--budget", type=int, default=90_000,
                    help="force evaluations per replica")
    ap.add_argument("--seed", type=int, default=20)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None, help="directory for CSVs and summary.json")
    args = ap.parse_args()

    spec = parse_spec({
        "target": {"name": "gaussian",
                   "params": {"dims": len(args.variances),
                              "variances": args.variances}},
        "sweep": {"axis": "dt", "values": args.dts},
        "fixed": {"leg_span": args.leg_span, "sin_psi": args.sin_psi,
                  "K": args.extra_chances, "jitter": 0.05},
        "replicas": args.replicas, "budget_force_evals": args.budget,
        "burn_in": 300, "observable": "x0", "seed": args.seed,
        "out_dir": args.out,
    })
    report = run_experiment(spec, workers=args.workers)

    print(f"gaussian{tuple(args.variances)}, leg span {args.leg_span}, "
          f"K={args.extra_chances}, {args.replicas} replicas x {args.budget} evals")
    for block in report.results:
        agg = block["aggregate"]
        ess = np.array([e["ess"] for e in block["replicas"] if "error" not in e])
        steps = max(1, round(args.leg_span / block["value"]))
        slots = " ".join(f"{k}={v:.3f}" for k, v in sorted(agg["slot_means"].items()))
        print(f"dt={block['value']:<5} L={steps:<3}: ESS {ess.mean():8.1f} +- "
              f"{ess.std(ddof=1) / math.sqrt(ess.size):6.1f}   {slots}")
    if args.out:
        print(f"wrote {Path(args.out) / 'summary.json'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
