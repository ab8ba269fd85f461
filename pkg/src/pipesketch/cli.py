"""Command-line entry point.

Subcommands: generate (synthetic traces), run (sweep experiments),
compare (table schemes head-to-head), topk (exact oracle answer), and
inspect (trace file facts).  Exit codes: 0 success, 1 usage or
configuration error, 2 I/O or format error.

Flag values resolve as explicit flag > --config file entry > built-in
default; the seed additionally falls back to the PIPESKETCH_SEED
environment variable before its default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigError, TraceFormatError
from .flows import Granularity, decode_key, format_ip
from .harness import (SCHEMES, SWEEP_AXES, ExperimentSpec, compare_idealized,
                      run_experiment)
from .metrics import memory_to_slots
from .traceio import (ZipfSpec, generate_zipf, load_csv, load_pcap,
                      records_from_encoded, write_csv)

_DEFAULTS = {
    "granularity": "five_tuple",
    "weight_mode": "packets",
    "schemes": ",".join(SCHEMES),
    "stages": 6,
    "slots": 4500,
    "k": 150,
    "factor": 1.0,
    "sweep": "none",
    "trials": 10,
    "alpha": 1.0,
    "flows": 10_000,
    "packets": 1_000_000,
    "oversampling": 1.0,
    "jobs": 1,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if getattr(args, "backend", None):
        os.environ["PIPESKETCH_BACKEND"] = args.backend
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TraceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pipesketch",
        description="Streaming top-k flow measurement: staged hash tables, "
                    "space saving, and sampling/sketching baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic Zipf trace as CSV")
    gen.add_argument("--zipf-alpha", type=float, default=1.0)
    gen.add_argument("--flows", type=int, default=_DEFAULTS["flows"])
    gen.add_argument("--packets", type=int, default=_DEFAULTS["packets"])
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--granularity", choices=[g.value for g in Granularity],
                     default=_DEFAULTS["granularity"])
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_generate)

    for name, func, help_text in (
            ("run", _cmd_run, "run an experiment sweep and write reports"),
            ("compare", _cmd_compare, "compare the table schemes head-to-head")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="JSON file of flag defaults")
        cmd.add_argument("--trace", help="CSV or pcap input (default: synthetic Zipf)")
        cmd.add_argument("--schemes", help=f"comma list from: {', '.join(SCHEMES)}")
        cmd.add_argument("--stages", "-d", type=int, dest="stages")
        size = cmd.add_mutually_exclusive_group()
        size.add_argument("--slots", type=int)
        size.add_argument("--memory-bytes", type=int, dest="memory_bytes")
        cmd.add_argument("--k", type=int)
        cmd.add_argument("--factor", type=float, help="overreport factor")
        cmd.add_argument("--sweep", choices=SWEEP_AXES)
        cmd.add_argument("--sweep-values", dest="sweep_values",
                         help="comma list of sweep points")
        cmd.add_argument("--trials", type=int)
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--granularity", choices=[g.value for g in Granularity])
        cmd.add_argument("--weight-mode", dest="weight_mode",
                         choices=["packets", "bytes"])
        cmd.add_argument("--zipf-alpha", type=float, dest="alpha")
        cmd.add_argument("--flows", type=int)
        cmd.add_argument("--packets", type=int)
        cmd.add_argument("--oversampling", type=float)
        cmd.add_argument("--jobs", type=int)
        cmd.add_argument("--backend", choices=["auto", "compiled", "python"])
        cmd.add_argument("--out", help="report CSV path")
        cmd.add_argument("--json-out", dest="json_out", help="report JSON path")
        cmd.set_defaults(func=func)

    top = sub.add_parser("topk", help="exact top-k flows of a trace (no sketch)")
    top.add_argument("--trace", required=True)
    top.add_argument("--k", type=int, default=10)
    top.add_argument("--granularity", choices=[g.value for g in Granularity],
                     default=_DEFAULTS["granularity"])
    top.add_argument("--weight-mode", dest="weight_mode",
                     choices=["packets", "bytes"], default="packets")
    top.set_defaults(func=_cmd_topk)

    ins = sub.add_parser("inspect", help="summarize a trace file")
    ins.add_argument("--trace", required=True)
    ins.add_argument("--granularity", choices=[g.value for g in Granularity],
                     default=_DEFAULTS["granularity"])
    ins.add_argument("--weight-mode", dest="weight_mode",
                     choices=["packets", "bytes"], default="packets")
    ins.set_defaults(func=_cmd_inspect)
    return parser


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("PIPESKETCH_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"PIPESKETCH_SEED is not an integer: {env!r}") from None
    return 1


def _load_trace(path, granularity, weight_mode):
    if str(path).endswith((".pcap", ".cap", ".pcapng")):
        return load_pcap(path, granularity, weight_mode)
    return load_csv(path, granularity, weight_mode)


def _cmd_generate(args) -> int:
    spec = ZipfSpec(num_flows=args.flows, num_packets=args.packets,
                    alpha=args.zipf_alpha, seed=_resolve_seed(args.seed),
                    granularity=Granularity(args.granularity))
    records = records_from_encoded(generate_zipf(spec))
    for rec in records:
        rec.ts = rec.seq * 1e-6
    write_csv(args.out, records, spec.granularity)
    print(f"wrote {len(records)} packets, {spec.num_flows} flows -> {args.out}")
    return 0


def _spec_from_args(args) -> ExperimentSpec:
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")

    def pick(key, default=None):
        v = getattr(args, key, None)
        if v is not None:
            return v
        if key in config:
            return config[key]
        return _DEFAULTS.get(key, default)

    granularity = Granularity(pick("granularity"))
    slots = pick("slots")
    memory_bytes = pick("memory_bytes")
    if getattr(args, "slots", None) is not None and getattr(args, "memory_bytes", None) is not None:
        raise ConfigError("--slots and --memory-bytes are mutually exclusive")
    if memory_bytes is not None and getattr(args, "slots", None) is None:
        if "slots" in config and "memory_bytes" in config:
            raise ConfigError("config gives both slots and memory_bytes")
        slots = memory_to_slots(int(memory_bytes), granularity)
    schemes = pick("schemes")
    if isinstance(schemes, str):
        schemes = tuple(s.strip() for s in schemes.split(",") if s.strip())
    sweep_values = pick("sweep_values", ())
    if isinstance(sweep_values, str):
        sweep_values = tuple(float(v) for v in sweep_values.split(",") if v.strip())
    return ExperimentSpec(
        schemes=tuple(schemes),
        slots=int(slots),
        d=int(pick("stages")),
        k=int(pick("k")),
        overreport_factor=float(pick("factor")),
        sweep_axis=pick("sweep"),
        sweep_values=tuple(float(v) for v in sweep_values),
        trials=int(pick("trials")),
        base_seed=_resolve_seed(pick("seed")),
        granularity=granularity,
        trace_path=pick("trace"),
        weight_mode=pick("weight_mode"),
        num_flows=int(pick("flows")),
        num_packets=int(pick("packets")),
        alpha=float(pick("alpha")),
        oversampling=float(pick("oversampling")),
        jobs=int(pick("jobs")),
    )


def _print_summary(report) -> None:
    print(f"config {report.config_hash}: {len(report.rows)} rows")
    print(f"{'scheme':<14} {'sweep':<24} {'mean FN%':>9} {'mean FP%':>9} {'dup%':>7}")
    for key, cell in report.summary.items():
        scheme, axis, value = key.split("|")
        label = "-" if axis == "none" else f"{axis}={value}"
        fn = f"{100 * cell['fn_mean']:.2f}" if cell["fn_mean"] is not None else "n/a"
        fp = f"{100 * cell['fp_mean']:.4f}" if cell["fp_mean"] is not None else "n/a"
        dup = f"{100 * cell['dup_mean']:.2f}" if cell["dup_mean"] is not None else "n/a"
        print(f"{scheme:<14} {label:<24} {fn:>9} {fp:>9} {dup:>7}")
        if cell["errors"]:
            print(f"{'':<14} {label:<24} {cell['errors']} infeasible trial(s)")


def _write_reports(report, args) -> None:
    if getattr(args, "out", None):
        report.write_csv(args.out)
        print(f"report -> {args.out}")
    if getattr(args, "json_out", None):
        report.write_json(args.json_out)
        print(f"report -> {args.json_out}")


def _cmd_run(args) -> int:
    report = run_experiment(_spec_from_args(args))
    _print_summary(report)
    _write_reports(report, args)
    return 0


def _cmd_compare(args) -> int:
    report = compare_idealized(_spec_from_args(args))
    _print_summary(report)
    ccdf = report.distributions.get("hashpipe_evicted_ccdf")
    if ccdf:
        tail = ", ".join(f">{t}: {p:.3f}" for t, p in enumerate(ccdf[:6]))
        print(f"evicted-count CCDF ({report.distributions['hashpipe_eviction_samples']}"
              f" samples): {tail}")
    _write_reports(report, args)
    return 0


def _cmd_topk(args) -> int:
    granularity = Granularity(args.granularity)
    load = _load_trace(args.trace, granularity, args.weight_mode)
    from .flows import exact_topk

    top = exact_topk(load.records, args.k)
    print(f"{'rank':>4} {'count':>10}  {'src':<15} {'dst':<15} {'proto':>5} {'sport':>5} {'dport':>5}")
    for rank, (key, count) in enumerate(top, 1):
        src, dst, proto, sport, dport = decode_key(granularity, key)
        print(f"{rank:>4} {count:>10}  {format_ip(src):<15} {format_ip(dst):<15}"
              f" {proto:>5} {sport:>5} {dport:>5}")
    return 0


def _cmd_inspect(args) -> int:
    granularity = Granularity(args.granularity)
    load = _load_trace(args.trace, granularity, args.weight_mode)
    from .flows import ExactCounts

    counts = ExactCounts.from_records(load.records)
    print(f"file:           {args.trace}")
    print(f"rows:           {load.rows}")
    print(f"records:        {len(load.records)}")
    print(f"skipped:        {load.skipped}")
    print(f"distinct flows: {len(counts)}")
    print(f"total weight:   {counts.total}")
    if load.records and load.records[0].ts is not None:
        span = load.records[-1].ts - load.records[0].ts
        print(f"time span:      {span:.6f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
