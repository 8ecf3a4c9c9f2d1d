"""Command line front end: ``qreading {plan,setup,sweep,run,verify}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .experiment import (
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    Noise,
    RunConfig,
    SetupRef,
    column_name,
    deviation_report,
    frequencies,
    run_counts,
    sweep_reflectances,
)
from .reading import AMBIGUOUS, MODES, PERFECT, UNAMBIGUOUS, delta_from_amplitude, plan_probe, plan_ambiguous, plan_unambiguous
from .records import (
    ConfigError,
    RunLedgerEntry,
    append_ledger,
    default_out_dir,
    load_run_config,
    run_config_to_dict,
    write_sweep_csv,
)
from .setups import HYPOTHESES, InfeasibleSetupError, build

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


def _emit(record: dict, fmt: str, out=None):
    out = out or sys.stdout
    if fmt == "json":
        print(json.dumps(record, indent=2, default=str), file=out)
    elif fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(record)
        writer.writerow(record.values())
    else:
        width = max(len(k) for k in record)
        for k, v in record.items():
            print(f"{k:<{width}}  {v}", file=out)


def _emit_rows(rows: list[dict], fmt: str, out=None):
    out = out or sys.stdout
    if not rows:
        return
    if fmt == "json":
        print(json.dumps(rows, indent=2, default=str), file=out)
        return
    writer = csv.writer(out, lineterminator="\n", delimiter="," if fmt == "csv" else "\t")
    writer.writerow(rows[0])
    for row in rows:
        writer.writerow(f"{v:.4f}" if isinstance(v, float) else v for v in row.values())


def _check_q(q: float, mode: str):
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"--q must lie in [0, 1], got {q}")
    if mode == AMBIGUOUS and q > 0.5:
        raise ValueError(f"ambiguous reading needs --q <= 0.5, got {q}")
    if mode == PERFECT and q != 0.0:
        raise ValueError("perfect reading has no failure budget; drop --q or pass 0")


def cmd_plan(args) -> int:
    _check_q(args.q, args.mode)
    if args.delta is None and args.ru is None:
        raise ValueError("one of --delta or --ru is required")
    if args.delta is not None:
        delta = args.delta
    else:
        if not -1.0 <= args.ru <= 1.0:
            raise ValueError("--ru must lie in [-1, 1]")
        delta = delta_from_amplitude(args.ru)
    if args.mode == UNAMBIGUOUS:
        plan = plan_unambiguous(delta, args.q)
    elif args.mode == AMBIGUOUS:
        plan = plan_ambiguous(delta, args.q)
    else:
        plan = plan_probe(delta, 0.0, PERFECT, 0.0)
    _emit(plan.to_dict(), args.format)
    if not plan.feasible:
        print(f"infeasible: {plan.violated_bound}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_setup(args) -> int:
    _check_q(args.q, args.kind)
    pair = build(args.kind, r_v=args.rv, r_u=args.ru, q=args.q, strict=not args.lenient)
    record = {"kind": args.kind, "r_u": pair.spec.r_u, "r_v": pair.spec.r_v, "q": args.q}
    record.update(pair.spec.intensities())
    for h in HYPOTHESES:
        for label, p in pair.closed_form[h].probabilities.items():
            record[f"p_{column_name(label)}|{h}"] = p
    record["energy_at_device"] = pair.device_energy("U")
    record["max_deviation"] = pair.max_deviation()
    _emit(record, args.format)
    return EXIT_OK


def _noise(args) -> Noise:
    return Noise(args.noise_phase, args.noise_splitting, args.noise_polarization, args.dark_count)


def cmd_sweep(args) -> int:
    if args.steps < 2:
        raise ValueError("--steps must be at least 2")
    _check_q(args.q, args.kind)
    base = RunConfig(SetupRef(args.kind, r_v=1.0, r_u=-1.0, q=args.q), "U", args.trials, args.seed, _noise(args))
    reflectances = tuple(round(k / (args.steps - 1), 12) for k in range(args.steps))
    table = sweep_reflectances(base, reflectances, workers=args.workers)
    out_dir = Path(args.out) if args.out else default_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    config = run_config_to_dict(base)
    config["reflectances"] = list(reflectances)
    paths = []
    for h, rows in table.items():
        if not rows:
            continue
        stem = f"{args.kind}_q{args.q:g}_seed{args.seed}_{h}"
        paths.append(write_sweep_csv(rows, out_dir / f"{stem}.csv"))
        paths.append(write_sweep_csv(rows, out_dir / f"{stem}_full.csv", decimals=None))
    for path in paths:
        append_ledger(out_dir, RunLedgerEntry.now(config, args.seed, path))
    flagged = {h: deviation_report(rows).flagged for h, rows in table.items()}
    if args.format == "json":
        _emit({"files": [str(p) for p in paths], "flagged_rows": flagged,
               "rows": {h: [r.as_dict() for r in rows] for h, rows in table.items()}}, "json")
    else:
        for h, rows in table.items():
            print(f"# hypothesis {h}")
            _emit_rows([r.as_dict() for r in rows], args.format)
        for p in paths:
            print(f"# wrote {p}", file=sys.stderr)
        if any(flagged.values()):
            print(f"# rows beyond 4 sigma: {flagged}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = load_run_config(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {args.config}: {exc}") from exc
    pair = config.setup.build()
    rec = run_counts(config, pair, workers=args.workers)
    freq = frequencies(rec)
    theory = pair.closed_form[config.hypothesis].probabilities
    record = {"hypothesis": config.hypothesis, "trials": rec.trials}
    for label in rec.counts:
        name = column_name(label)
        record[f"n_{name}"] = rec[label]
        record[f"f_{name}"] = freq[label]
        record[f"p_{name}"] = theory[label]
    _emit(record, args.format)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(sys.stdout if args.format == "text" else None)
    if args.format != "text":
        _emit_rows([{"check": r.name, "passed": r.passed, "residual": r.residual, "tolerance": r.tolerance,
                     "seconds": r.seconds} for r in results], args.format)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qreading", description=__doc__)
    parser.add_argument("--format", choices=("text", "json", "csv"), default="text")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="minimum-energy probe for a device")
    p.add_argument("--mode", choices=MODES, default=UNAMBIGUOUS)
    target = p.add_mutually_exclusive_group()
    target.add_argument("--delta", type=float, help="eigenphase in (0, pi]")
    target.add_argument("--ru", type=float, help="reflection amplitude of the device")
    p.add_argument("--q", type=float, default=0.0, help="failure (or error) budget")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("setup", help="coupler settings and click tables of a reading setup")
    p.add_argument("--kind", choices=MODES, required=True)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--rv", type=float)
    target.add_argument("--ru", type=float)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--lenient", action="store_true", help="only enforce the physical feasibility bound")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("sweep", help="theory and Monte Carlo columns over the device reflectance")
    p.add_argument("--kind", choices=MODES, default=PERFECT)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--noise-phase", type=float, default=0.0, help="phase jitter sigma (rad)")
    p.add_argument("--noise-splitting", type=float, default=0.0, help="reflectivity error sigma")
    p.add_argument("--noise-polarization", type=float, default=0.0, help="incoherent fraction")
    p.add_argument("--dark-count", type=float, default=0.0, help="per-trial dark-click probability")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory (default $QREADING_OUT or ./qreading_out)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("run", help="count clicks for a JSON run config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the exit checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InfeasibleSetupError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
