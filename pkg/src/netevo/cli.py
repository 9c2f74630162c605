"""Command-line driver: ingest, likelihood, fit, grow, stats, compare.

Data goes to stdout (or ``--out``), logs and errors to stderr. Exit codes:
0 success, 1 usage error, 2 bad input data, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .errors import DataError, NumericError
from .estimation import FitConfig, FitResult, fit_model
from .events import EventFile, format_events, parse_events, replay, seed_graph
from .generator import Replay, empirical_outer_from, grow
from .ingest import FORMATS, IngestConfig, ingest_text, source_hash, warmup_size
from .likelihood import INTERNAL, NEW_NODE, SpecPair, reports_to_csv, score_many
from .models import parse_spec
from .stats import CSV_COLUMNS, even_checkpoints, to_csv, trajectory

log = logging.getLogger("netevo")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- shared helpers ---------------------------------------------------------------


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str) -> EventFile:
    return parse_events(_read(path))


def _g0_count(ef: EventFile, warmup: float | None) -> int:
    """Events that build G0: ``--warmup`` if given, else the file header, else the seed edge."""
    n = len(ef.events)
    if warmup is not None:
        k = warmup_size(n, warmup)
    elif ef.g0_events is not None:
        k = ef.g0_events
    else:
        k = min(1, n)
    if not 0 <= k <= n:
        raise DataError(f"g0_events={k} outside the stream of {n} events")
    return k


def _split(ef: EventFile, warmup: float | None):
    k = _g0_count(ef, warmup)
    g0 = replay(ef.events[:k], seed_graph())
    return g0, ef.events[k:], k


def _spec_pairs(args) -> list[SpecPair]:
    pairs = [SpecPair.same(parse_spec(s)) for s in args.spec or ()]
    if args.spec_new or args.spec_int:
        if not (args.spec_new and args.spec_int):
            raise UsageError("--spec-new and --spec-int go together")
        pairs.append(SpecPair(parse_spec(args.spec_new), parse_spec(args.spec_int)))
    return pairs


def _threads(value: int | None) -> int:
    return value if value and value > 0 else (os.cpu_count() or 1)


# -- subcommands --------------------------------------------------------------------


def cmd_ingest(args) -> int:
    config = IngestConfig(
        warmup=args.warmup if args.warmup is not None else 0.05,
        final_window_cutoff=args.cutoff,
        delay_disconnected=not args.no_delay,
        dedupe=not args.keep_duplicates,
        max_clique=args.max_clique,
    )
    texts = [_read(p) for p in args.raw]
    text = "\n".join(texts)
    result = ingest_text(text, args.format, config)
    if not result.events:
        raise DataError("no edges in the input")
    k = warmup_size(len(result.events), config.warmup)
    meta = {
        "source": source_hash(text),
        "format": args.format,
        "warmup": config.warmup,
        "cutoff": config.final_window_cutoff if config.final_window_cutoff is not None else "none",
        "delay_disconnected": config.delay_disconnected,
        "dedupe": config.dedupe,
        "max_clique": config.max_clique,
        "g0_events": k,
        "residual": len(result.residual),
    }
    _emit(format_events(result.events, meta), args.out)
    if args.names:
        Path(args.names).write_text("".join(f"{i} {name}\n" for i, name in enumerate(result.names)))
    summary = " ".join(f"{k}={v}" for k, v in result.summary().items())
    print(f"ingest: {summary}", file=sys.stderr)
    for r in result.residual[: args.show_residual]:
        print(f"residual: line {r.line}: {r.src} {r.dst}", file=sys.stderr)
    return 0


def cmd_likelihood(args) -> int:
    pairs = _spec_pairs(args)
    if not pairs:
        raise UsageError("likelihood needs --spec or --spec-new/--spec-int")
    g0, tail, _ = _split(_load(args.events), args.warmup)
    role = None if args.role == "both" else args.role
    reports = score_many(pairs, g0, tail, ordered=args.ordered, role=role)
    if args.keyvalue:
        _emit("\n".join(r.to_keyvalue() for r in reports), args.out)
    else:
        _emit(reports_to_csv(reports), args.out)
    return 0


def _fit_one(g0, tail, config: FitConfig) -> FitResult:
    return fit_model(g0, tail, config)


def cmd_fit(args) -> int:
    config = FitConfig.from_file(args.fit_config) if args.fit_config else FitConfig()
    g0, tail, _ = _split(_load(args.events), args.warmup)
    configs = [config.with_role(NEW_NODE), config.with_role(INTERNAL)]
    if _threads(args.threads) > 1:
        with ProcessPoolExecutor(max_workers=2) as pool:
            fits = list(pool.map(_fit_one, [g0, g0], [tail, tail], configs))
    else:
        fits = [_fit_one(g0, tail, c) for c in configs]
    out = io.StringIO()
    for role, fit in zip((NEW_NODE, INTERNAL), fits):
        out.write(f"[{role}]\n")
        out.write(f"spec={fit.spec}\n")
        out.write(fit.report.to_keyvalue())
        for group in fit.degenerate:
            out.write("degenerate=" + " = ".join(map(str, group)) + "\n")
        out.write("trace=" + ",".join(repr(x) for x in fit.trace) + "\n\n")
    _emit(out.getvalue(), args.out)
    return 0


def cmd_grow(args) -> int:
    pairs = _spec_pairs(args)
    if len(pairs) != 1:
        raise UsageError("grow needs exactly one spec (--spec, or --spec-new with --spec-int)")
    if args.seed is None:
        raise UsageError("grow requires an explicit --seed")
    source = _load(args.events)
    if args.g0:
        g0_file = _load(args.g0)
        k = g0_file.g0_events if g0_file.g0_events is not None else len(g0_file.events)
        g0_events = g0_file.events[:k]
        tail = _split(source, args.warmup)[1]
    else:
        _, tail, k = _split(source, args.warmup)
        g0_events = source.events[:k]
    g0 = replay(g0_events, seed_graph())
    if args.outer == "replay":
        outer = Replay.from_events(tail)
    else:
        outer = empirical_outer_from(tail)
    target = args.target_edges
    if target is None:
        target = g0.n_edges + sum(ev.choices for ev in tail)
    res = grow(g0, outer, pairs[0], target, args.seed)
    if res.skipped_internal:
        log.info("%d internal edge(s) skipped on a complete graph", res.skipped_internal)
    meta = {
        "g0_events": len(g0_events),
        "spec_new": pairs[0].new_node,
        "spec_int": pairs[0].internal,
        "outer": args.outer,
        "seed": args.seed,
        "target_edges": target,
    }
    _emit(format_events(list(g0_events) + res.events, meta), args.out)
    return 0


def cmd_stats(args) -> int:
    ef = _load(args.events)
    total = sum(ev.choices for ev in ef.events)
    if args.checkpoints:
        try:
            cps = [int(x) for x in args.checkpoints.split(",") if x.strip()]
        except ValueError:
            raise UsageError("--checkpoints takes comma-separated integers") from None
    else:
        cps = even_checkpoints(total, args.n_checkpoints)
    _emit(to_csv(trajectory(seed_graph(), ef.events, cps)), args.out)
    return 0


def _read_trajectory(path: str) -> list[dict[str, str]]:
    lines = [ln for ln in _read(path).splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise DataError(f"{path}: not a trajectory CSV (expected columns {','.join(CSV_COLUMNS)})")
    return list(reader)


def cmd_compare(args) -> int:
    """Long-form merge; row i of every file is checkpoint i, so sources line
    up on ``checkpoint`` even when their exact edge counts differ."""
    if len(args.trajectories) < 2:
        raise UsageError("compare needs at least two trajectory CSVs")
    long_rows = []
    labels: list[str] = []
    for item in args.trajectories:
        label, sep, path = item.partition("=")
        if not sep:
            label, path = Path(item).stem, item
        labels.append(label)
        for i, row in enumerate(_read_trajectory(path)):
            for stat in CSV_COLUMNS[1:]:
                long_rows.append((CSV_COLUMNS.index(stat), i, len(labels) - 1, label, row["edges"], stat, row[stat]))
    long_rows.sort()
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("statistic", "checkpoint", "source", "edges", "value"))
    for _, i, _, label, edges, stat, value in long_rows:
        w.writerow((stat, i, label, edges, value))
    _emit(out.getvalue(), args.out)
    return 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="netevo", description="Likelihood-based fitting and growth of evolving networks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def spec_flags(sp):
        sp.add_argument("--spec", action="append", help="same spec for both roles; repeatable")
        sp.add_argument("--spec-new", help="spec for new-node targets")
        sp.add_argument("--spec-int", help="spec for internal edges")

    def common(sp, events=True):
        if events:
            sp.add_argument("--events", required=True, help="canonical event file")
        sp.add_argument("--warmup", type=float, help="fraction of events forming G0 (overrides the file header)")
        sp.add_argument("--threads", type=int, help="worker count (default: all cores)")
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("ingest", help="raw edges or co-authorship records to an event file")
    sp.add_argument("--raw", action="append", required=True, help="raw input file; repeatable, concatenated")
    sp.add_argument("--format", choices=FORMATS, default="edges2")
    sp.add_argument("--cutoff", type=float, help="drop records last seen before this time (edges4)")
    sp.add_argument("--max-clique", type=int, default=59, help="skip papers with more authors")
    sp.add_argument("--no-delay", action="store_true", help="report disconnected edges instead of delaying them")
    sp.add_argument("--keep-duplicates", action="store_true", help="do not merge repeated pairs before ordering")
    sp.add_argument("--names", help="write the node id to external name map here")
    sp.add_argument("--show-residual", type=int, default=20, help="residual records listed on stderr")
    common(sp, events=False)
    sp.set_defaults(run=cmd_ingest)

    sp = sub.add_parser("likelihood", help="score an event file under one or more specs")
    spec_flags(sp)
    sp.add_argument("--role", choices=("both", NEW_NODE, INTERNAL), default="both")
    sp.add_argument("--ordered", action="store_true", help="score internal edges as ordered pairs")
    sp.add_argument("--keyvalue", action="store_true", help="key=value reports instead of CSV")
    common(sp)
    sp.set_defaults(run=cmd_likelihood)

    sp = sub.add_parser("fit", help="search for the best spec of each role")
    sp.add_argument("--fit-config", help="key=value FitConfig file")
    common(sp)
    sp.set_defaults(run=cmd_fit)

    sp = sub.add_parser("grow", help="grow a network from G0 with a spec pair")
    spec_flags(sp)
    sp.add_argument("--g0", help="event file holding G0 (default: the warm-up of --events)")
    sp.add_argument("--outer", choices=("replay", "empirical"), default="replay")
    sp.add_argument("--target-edges", type=int, help="default: edge count of --events")
    sp.add_argument("--seed", type=int, help="random seed (required)")
    common(sp)
    sp.set_defaults(run=cmd_grow)

    sp = sub.add_parser("stats", help="statistics trajectory of an event file")
    sp.add_argument("--checkpoints", help="comma-separated edge counts")
    sp.add_argument("--n-checkpoints", type=int, default=20, help="evenly spaced checkpoints when none given")
    common(sp)
    sp.set_defaults(run=cmd_stats)

    sp = sub.add_parser("compare", help="merge trajectory CSVs into long form")
    sp.add_argument("trajectories", nargs="+", help="CSV files, optionally as label=path")
    sp.add_argument("--out", help="output file (default: stdout)")
    sp.set_defaults(run=cmd_compare)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        return args.run(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())
