"""Command-line interface.

Exit codes: 0 success, 1 usage/configuration error, 2 verification failure,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from xchmc.diagnostics import ess_initial_monotone, slot_stats, ZeroVarianceError
from xchmc.harness import (SpecError, load_spec, run_experiment, write_chain_csv)
from xchmc.integrator import LegSpec
from xchmc.phase import PhaseState, builtin_target
from xchmc.rng import chain_rng
from xchmc.sampler import Budget, SamplerConfig, run_chain
from xchmc.verification import SUITES, verify

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xchmc",
        description="Extra-chance generalized hybrid Monte Carlo sampler and benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="run a single chain on a built-in target")
    p.add_argument("--target", required=True, help="gaussian, double_well, or banana")
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--dt", type=float, required=True, help="integration step size")
    p.add_argument("--steps", type=int, required=True, help="Verlet steps per leg (L)")
    p.add_argument("--sin-psi", type=float, default=1.0,
                   help="sine of the momentum refresh angle, in (0, 1]")
    p.add_argument("--extra-chances", type=int, default=0,
                   help="extra candidate legs offered before a momentum flip (K)")
    p.add_argument("--jitter", type=float, default=0.05,
                   help="relative step-size jitter per transition")
    p.add_argument("--budget", type=int, default=100_000, help="force-evaluation budget")
    p.add_argument("--burn-in", type=int, default=500, help="discarded warmup transitions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout summary)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--momenta", action="store_true", help="include momenta in CSV output")
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("sweep", help="run a replica sweep from a JSON spec file")
    p.add_argument("--spec", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("verify", help="run the exact-identity verification suites")
    p.add_argument("--suite", default="all", choices=sorted(SUITES) + ["all"])
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("ess", help="effective sample size of a CSV column")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--column", required=True)
    p.set_defaults(handler=_cmd_ess)

    p = sub.add_parser("plot-data", help="emit plot-ready aggregates from a sweep summary")
    p.add_argument("--summary", type=Path, required=True, help="summary.json from a sweep")
    p.add_argument("--out", type=Path, default=None, help="output CSV (default: stdout)")
    p.set_defaults(handler=_cmd_plot_data)

    return parser


def _cmd_sample(args) -> int:
    model = builtin_target(args.target, args.dims)
    if not 0.0 < args.sin_psi <= 1.0:
        raise ValueError("--sin-psi must lie in (0, 1]")
    config = SamplerConfig(
        leg=LegSpec(dt=args.dt, steps=args.steps),
        psi=math.asin(args.sin_psi),
        extra_chances=args.extra_chances,
        jitter_fraction=args.jitter,
        seed=args.seed,
    )
    rng = chain_rng(args.seed, 0)
    y0 = model.mass.sqrt_apply(rng.standard_normal(args.dims))
    z0 = PhaseState(np.zeros(args.dims), y0)
    record = run_chain(model, config, z0,
                       Budget(force_evals=args.budget, burn_in=args.burn_in), rng=rng)
    stats = slot_stats(record)
    if args.out is not None:
        if args.format == "csv":
            write_chain_csv(record, args.out, include_momenta=args.momenta)
        else:
            payload = {
                "target": args.target, "dims": args.dims,
                "dt": args.dt, "steps": args.steps, "sin_psi": args.sin_psi,
                "extra_chances": args.extra_chances, "jitter": args.jitter,
                "seed": args.seed, "burn_in": args.burn_in,
                "transitions": record.transitions,
                "force_evals": record.total_force_evals,
                "slots": record.slots.tolist(),
                "dt_used": record.dt_used.tolist(),
                "positions": record.positions.tolist(),
                "momenta": record.momenta.tolist(),
            }
            args.out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    fractions = " ".join(
        f"a{k}={stats.acceptance_fractions[k]:.4f}"
        for k in range(stats.acceptance_fractions.size))
    print(f"transitions={record.transitions} force_evals={record.total_force_evals} "
          f"{fractions} flip={stats.flip_fraction:.4f}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    report = run_experiment(spec, workers=args.workers)
    for block in report.results:
        agg = block["aggregate"]
        ess_mean = agg["ess_mean"]
        ess_txt = "n/a" if ess_mean is None else f"{ess_mean:.1f}"
        print(f"{spec.sweep_axis}={block['value']}: ess_mean={ess_txt} "
              f"slot_means={agg['slot_means']}")
    if spec.out_dir:
        print(f"summary written to {Path(spec.out_dir) / 'summary.json'}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = verify(args.suite)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY


def _cmd_ess(args) -> int:
    with open(args.input, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if args.column not in header:
        raise ValueError(f"column {args.column!r} not in {args.input} (have: {header})")
    idx = header.index(args.column)
    values = np.array([float(row[idx]) for row in rows if row[idx] != ""])
    try:
        ess = ess_initial_monotone(values)
        stderr = float(values.std(ddof=1) * math.sqrt(1.0 / ess))
        payload = {"column": args.column, "n": int(values.size), "mean": float(values.mean()),
                   "ess": ess, "stderr": stderr}
    except ZeroVarianceError:
        payload = {"column": args.column, "n": int(values.size), "mean": float(values.mean()),
                   "ess": None, "stderr": None, "note": "zero variance; ESS undefined"}
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _cmd_plot_data(args) -> int:
    summary = json.loads(Path(args.summary).read_text())
    axis = summary["spec"]["sweep_axis"]
    rows = [(block["value"], block["aggregate"]["ess_mean"], block["aggregate"]["ess_std"])
            for block in summary["results"]]
    lines = [f"{axis},ess_mean,ess_std"]
    lines += [f"{v},{m},{s}" for v, m, s in rows]
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; remap
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.handler(args)
    except (SpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - unexpected failures
        print(f"unexpected failure: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
