"""Command-line entry point.

Subcommands:
    run       one simulation from a ``[run]`` config
    exp1      the quadratic hyperparameter sweep with KS analysis
    exp2      the federated MLP comparison
    validate  parse and cross-check a config without running it

Exit codes: 0 success, 1 config error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path

from .config import ConfigError, build_federated, build_run, build_sweep, config_kind, load_config
from .experiments import run_experiment1, run_experiment2
from .output import append_summary_csv, summary_row, write_json, write_summary_csv, atomic_write_text
from .simulator import CONVERGED, DIVERGED, NOT_CONVERGED, run

log = logging.getLogger("frodo")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _safe(label):
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", label)


def _parser():
    parser = argparse.ArgumentParser(prog="frodo", description="Fractional-order distributed optimization simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "single simulation"),
        ("exp1", "ill-conditioned quadratic sweep"),
        ("exp2", "federated MLP comparison"),
        ("validate", "check a config without running"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML or JSON config file")
        if name != "validate":
            p.add_argument("--out", default="results", help="output directory (default: results)")
            p.add_argument("--parallel", type=int, default=None,
                           help="worker processes (default: available cores)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--verbose", "-v", action="count", default=0)
    return parser


def _build(raw, kind, seed):
    if kind == "run":
        return build_run(raw, seed)
    if kind == "exp1":
        return build_sweep(raw, seed)
    return build_federated(raw, seed)


def _cmd_validate(args, raw, kind):
    _build(raw, kind, args.seed)
    print(f"{args.config}: ok ({kind})")
    return EXIT_OK


def _cmd_run(args, raw):
    cfg = _build(raw, "run", args.seed)
    record = run(cfg)
    out = Path(args.out)
    opt = cfg.meta["optimizer"]
    start = ",".join(f"{v:g}" for v in cfg.meta["x0"])
    write_json(out / "runs" / f"run_{opt['variant']}_seed{cfg.seed}.json", record.to_dict())
    row = summary_row(opt["variant"], opt, start, cfg.seed, record.iterations, record.final_error, record.status)
    append_summary_csv(out / "summary.csv", [row])
    print(f"{record.status}: iterations={record.iterations} final_error={record.final_error!r}")
    return EXIT_OK


def _cmd_exp1(args, raw):
    spec, opts = _build(raw, "exp1", args.seed)
    report, records = run_experiment1(spec, parallel=args.parallel, keep_records=True)
    out = Path(args.out)
    rows = []
    for compact, full in zip(report["runs"], _align(report["runs"], records)):
        rows.append(summary_row(compact["variant"], compact["optimizer"], compact["start_label"], spec.seed,
                                compact["iterations"], compact["final_error"], compact["status"]))
        if opts["write_runs"]:
            name = f"{compact['variant']}_d{compact['draw']:03d}_{_safe(compact['start_label'])}.json"
            write_json(out / "runs" / name, full)
    write_summary_csv(out / "summary.csv", rows)
    write_json(out / "report.json", report)
    for variant, groups in report["summaries"].items():
        it = (groups.get("uniform") or {}).get("iterations")
        if it:
            print(f"{variant:>11}: {it['mean']:.1f} +/- {it['std']:.1f} iterations (uniform starts, n={it['count']})")
    for variant, res in report["ks"]["steepest_vs_flattest"].items():
        print(f"{variant:>11}: steepest vs flattest KS D={res['statistic']:.3f} p={res['p_value']:.3g}")
    return EXIT_OK


def _align(compact_runs, records):
    """Reorder full records to match the report's sorted compact runs."""
    key = {}
    for rec in records:
        cfg = rec["config"]
        key[(cfg["variant"], cfg["draw"], cfg["start_label"])] = rec
    return [key[(r["variant"], r["draw"], r["start_label"])] for r in compact_runs]


def _cmd_exp2(args, raw):
    spec, opts = _build(raw, "exp2", args.seed)
    report = run_experiment2(spec, parallel=args.parallel)
    out = Path(args.out)
    rows, curve_lines = [], ["variant,repetition,round,mean_loss"]
    for r in report["runs"]:
        opt = report["spec"]["optimizers"][r["variant"]]
        if r["status"] == DIVERGED:
            status = DIVERGED
        else:
            status = CONVERGED if r["rounds_to_target"] is not None else NOT_CONVERGED
        rows.append(summary_row(r["variant"], opt, f"rep{r['repetition']}", spec.seed, r["rounds_to_target"],
                                r["final_loss"], status))
        curve_lines.extend(f"{r['variant']},{r['repetition']},{k},{v!r}" for k, v in enumerate(r["loss_curve"]))
        if opts["write_runs"]:
            write_json(out / "runs" / f"{r['variant']}_rep{r['repetition']}.json", r)
    write_summary_csv(out / "summary.csv", rows)
    atomic_write_text(out / "curves.csv", "\n".join(curve_lines) + "\n")
    write_json(out / "report.json", report)
    print(f"target loss {report['target_loss']:.4g} ({report['target_rule']}); data: {', '.join(report['data_sources'])}")
    for variant, s in report["per_variant"].items():
        print(f"{variant:>11}: rounds to target {s['rounds_to_target']}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "parallel", None) is None and args.command != "validate":
        args.parallel = os.cpu_count() or 1
    try:
        raw = load_config(args.config)
        kind = config_kind(raw)
        if args.command == "validate":
            return _cmd_validate(args, raw, kind)
        if kind != args.command:
            raise ConfigError(f"config: subcommand {args.command!r} needs a [{args.command}] table, found [{kind}]")
        if args.command == "run":
            return _cmd_run(args, raw)
        if args.command == "exp1":
            return _cmd_exp1(args, raw)
        return _cmd_exp2(args, raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level boundary maps everything else to exit 2
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
