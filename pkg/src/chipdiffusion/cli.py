"""Command-line driver: run, verify, scan, search-fn, gen."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import errors
from .analysis import detect_period, dumps_record, report_record, verify_theorem
from .engine import Configuration, edge_labels, trace
from .errors import DiffusionError, InvalidParams
from .experiments import (
    FamilySpec,
    default_jobs,
    fn_lower_bound_search,
    read_config,
    scan_transients,
    write_summary_csv,
)
from .graph import FAMILIES, MultiGraph, generate, read_edge_list, serialize_edge_list

EXIT_CODES = f"""\
exit codes:
  0   success (verify/scan: every check passed)
  {errors.CHECK_FAILED}   a verification check failed
  {errors.USAGE}   bad command-line arguments
  {errors.MalformedLine.exit_code}   malformed line in a graph or configuration
  {errors.SelfLoop.exit_code}   self-loop in a graph
  {errors.IndexOutOfRange.exit_code}   vertex index outside 1..n
  {errors.CountMismatch.exit_code}   edge-line count differs from the header
  {errors.InvalidParams.exit_code}   invalid parameters
  {errors.LengthMismatch.exit_code}   configuration length does not match the graph
  {errors.ArithmeticOverflow.exit_code}   64-bit overflow (retry with --mode bigint)
  {errors.CapExceeded.exit_code}  step cap exceeded
  {errors.TraceTooShort.exit_code}  trace too short
  {errors.SinkWriteFailure.exit_code}  could not write scan output
  {errors.IO_ERROR}  could not read or write a file

CHIPDIFFUSION_JOBS sets the default for --jobs (otherwise: CPU count).
"""


def parse_graph_spec(spec: str, seed: int = 0) -> MultiGraph:
    """``file:PATH`` or ``family:args`` such as ``path:3``, ``gnp:20,0.3``, ``random_multi:10,0.5,3``."""
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise InvalidParams(f"graph spec {spec!r} must look like file:PATH or family:ARGS")
    if kind == "file":
        return read_edge_list(rest)
    if kind not in FAMILIES:
        raise InvalidParams(f"unknown graph family {kind!r}; choose file or one of {', '.join(FAMILIES)}")
    args = [a for a in rest.split(",") if a]
    try:
        n = int(args[0])
        p = float(args[1]) if len(args) > 1 else None
        max_mult = int(args[2]) if len(args) > 2 else None
    except (IndexError, ValueError):
        raise InvalidParams(f"bad arguments in graph spec {spec!r}") from None
    return generate(kind, n, p=p, max_mult=max_mult, seed=seed)


def parse_init_spec(spec: str, n: int, mode: str, seed: int = 0) -> Configuration:
    """``file:PATH``, ``random:LO,HI`` or an inline label list."""
    if spec.startswith("file:"):
        with open(spec[5:], encoding="utf-8") as fh:
            text = fh.read()
    elif spec.startswith("random:"):
        try:
            lo, hi = (int(x) for x in spec[7:].split(","))
        except ValueError:
            raise InvalidParams(f"random init needs random:LO,HI, got {spec!r}") from None
        if lo > hi:
            raise InvalidParams("random init needs LO <= HI")
        rng = np.random.default_rng(seed)
        text = " ".join(str(x) for x in rng.integers(lo, hi, size=n, endpoint=True))
    else:
        text = spec
    if mode in ("int64", "bigint") and "/" in text:
        raise InvalidParams(f"fractional labels need --mode rational (or auto), not {mode}")
    wide = {"auto": None, "int64": False, "bigint": True, "rational": True}[mode]
    return Configuration.parse(text, wide=wide)


def _load(args) -> tuple[MultiGraph, Configuration]:
    g = parse_graph_spec(args.graph, args.seed)
    w0 = parse_init_spec(args.init, g.n, args.mode, args.seed)
    if w0.n != g.n:
        raise errors.LengthMismatch(f"configuration has {w0.n} labels, graph has {g.n} vertices")
    return g, w0


def _print_report(g: MultiGraph, rep) -> None:
    print(f"graph: n={g.n} pairs={g.num_pairs} edges={g.num_edges}")
    print(f"transient: {rep.transient}")
    print(f"period: {rep.period}")
    print(f"T (potential stabilization): {rep.potential_stabilization}")
    print(f"T' (label stabilization): {rep.label_stabilization}")
    print(f"final potential: {rep.final_potential}")
    print(f"minimum label: {rep.min_label}")


def _write_trace(path: str, g: MultiGraph, w0: Configuration, steps: int, record: set[str]) -> None:
    tr = trace(g, w0, max(1, steps), record={"configs", "potentials"} | record)
    with open(path, "w", encoding="utf-8") as fh:
        for t, cfg in enumerate(tr.configurations):
            row = {
                "t": t,
                "w": [int(x) for x in cfg.numerators] if cfg.denominator == 1 else cfg.format().split(),
                "P": None,
            }
            if t < len(tr.potentials):
                p = tr.potentials[t]
                row["P"] = f"{p.numerator}/{p.denominator}"
                if "labelings" in record:
                    row["labels"] = [[u, v, x, y] for (u, v), (x, y) in edge_labels(g, cfg, tr.configurations[t + 1]).items()]
            fh.write(json.dumps(row) + "\n")


def cmd_run(args) -> int:
    g, w0 = _load(args)
    rep = detect_period(g, w0, args.cap)
    _print_report(g, rep)
    if args.trace:
        _write_trace(args.trace, g, w0, rep.steps, set(args.record))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dumps_record(report_record(args.id, g, rep)) + "\n")
    return 0


def cmd_verify(args) -> int:
    g, w0 = _load(args)
    ver = verify_theorem(g, w0, args.cap)
    _print_report(g, ver.period)
    for c in ver.checks:
        where = "" if c.passed else f"  (first failure at t={c.first_failure})"
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}{where}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dumps_record(report_record(args.id, g, ver.period, ver.passed)) + "\n")
    if not ver.passed:
        first = ver.failures()[0]
        print(f"verification failed: {first.name} at t={first.first_failure}", file=sys.stderr)
        return errors.CHECK_FAILED
    return 0


def _family_spec(args) -> FamilySpec:
    values = read_config(args.config) if args.config else {}
    count = int(values.pop("count", 1))
    seed = int(values.pop("seed", 0))
    if args.count is not None:
        count = args.count
    if args.seed is not None:
        seed = args.seed
    for key in ("family", "n", "p", "max_mult", "label_min", "label_max", "labels"):
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    if "family" not in values or "n" not in values:
        raise InvalidParams("scan needs a family and n (via --config or flags)")
    args.count, args.seed = count, seed
    return FamilySpec.from_mapping(values)


def cmd_scan(args) -> int:
    spec = _family_spec(args)
    jobs = args.jobs or default_jobs()
    sink = open(args.output, "w", encoding="utf-8") if args.output else None
    try:
        summary = scan_transients(spec, args.count, args.seed, sink, jobs=jobs,
                                  keep_records=bool(args.summary_csv))
    finally:
        if sink is not None:
            sink.close()
    if args.summary_csv:
        write_summary_csv(summary.records, args.summary_csv)
    print(f"instances: {summary.count}")
    print(f"period counts: {summary.period_counts}")
    print(f"max transient: {summary.max_transient}")
    print(f"max required offset: {summary.offset_max}")
    print(f"mean edge count: {summary.m_mean:.3f}")
    if summary.violations or not summary.periods_ok:
        print(f"check failures on {len(summary.violations)} instance(s): {summary.violations[:5]}", file=sys.stderr)
        return errors.CHECK_FAILED
    return 0


def cmd_search_fn(args) -> int:
    jobs = args.jobs or default_jobs()
    sink = open(args.output, "w", encoding="utf-8") if args.output else None

    def improved(res):
        if sink is not None:
            sink.write(json.dumps(res.to_record()) + "\n")

    try:
        best = fn_lower_bound_search(args.n, args.strategy, args.budget, args.seed or 0,
                                     K=args.K, jobs=jobs, on_improve=improved)
    finally:
        if sink is not None:
            sink.close()
    print(f"explored: {best.explored}")
    print(f"best_offset: {best.offset}")
    print(f"witness edges: {[list(e[:2]) for e in best.graph.edges]}")
    print(f"witness profile: {best.profile.format()}")
    return 0


def cmd_gen(args) -> int:
    g = generate(args.family, args.n, p=args.p, max_mult=args.max_mult, seed=args.seed)
    text = serialize_edge_list(g)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chipdiffusion",
        description="Simulate and verify diffusion (synchronous chip-firing with negative labels allowed).",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def run_args(p):
        p.add_argument("--graph", required=True, help="file:PATH or family:ARGS, e.g. path:3, gnp:20,0.3")
        p.add_argument("--init", required=True, help='inline labels ("0 5 0", "1/2 0"), file:PATH or random:LO,HI')
        p.add_argument("--mode", choices=("auto", "int64", "bigint", "rational"), default="auto",
                       help="numeric mode; auto picks int64 for integers, rational for num/den input")
        p.add_argument("--seed", type=int, default=0, help="seed for random graphs / labels")
        p.add_argument("--cap", type=int, default=None, help="step cap (default: derived from the potential range)")
        p.add_argument("--output", help="write a machine-readable report line here")
        p.add_argument("--id", default="run", help="instance id for --output")

    p = sub.add_parser("run", help="run to periodicity and report")
    run_args(p)
    p.add_argument("--trace", help="write the trace as line-delimited JSON")
    p.add_argument("--record", nargs="*", default=[], choices=("labelings",),
                   help="extra series for --trace")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run and check every step-wise invariant")
    run_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", help="verify a batch of generated instances")
    p.add_argument("--config", help="key = value file with family, n, p, max_mult, label_min, label_max, labels, count, seed")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--max-mult", dest="max_mult", type=int)
    p.add_argument("--label-min", dest="label_min", type=int)
    p.add_argument("--label-max", dest="label_max", type=int)
    p.add_argument("--labels", help="fixed initial labels for every instance")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--output", help="line-delimited scan records")
    p.add_argument("--summary-csv", dest="summary_csv", help="per-n CSV summary")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("search-fn", help="search for instances needing a large uniform offset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--strategy", choices=("exhaustive", "random"), default="exhaustive")
    p.add_argument("--K", type=int, default=2, help="label window for profiles 0..K")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--output", help="stream each improvement as a JSON line")
    p.set_defaults(func=cmd_search_fn)

    p = sub.add_parser("gen", help="write a generated graph as an edge list")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--max-mult", dest="max_mult", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DiffusionError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return errors.IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
