"""Raw edge lists and co-authorship records to canonical event streams.

Pipeline: parse -> (optional last-seen filter) -> order by first sighting ->
greedy connected introduction with a pending buffer -> warm-up split.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from itertools import combinations
from typing import Iterable, Sequence

from .errors import DataError, ParseError, SelfLoopRecord, WarmupTooLarge
from .events import EdgeEvent, InternalEdge, NewNode, replay, seed_graph
from .graph import EvolvingGraph

log = logging.getLogger(__name__)

FORMATS = ("edges2", "edges3", "edges4", "coauth")
_COLUMNS = {"edges2": 2, "edges3": 3, "edges4": 4}
DEFAULT_MAX_CLIQUE = 59


@dataclass(frozen=True)
class RawEdgeRecord:
    src: str
    dst: str
    first_seen: float | None = None
    last_seen: float | None = None
    line: int = 0

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst) if self.src <= self.dst else (self.dst, self.src)


@dataclass(frozen=True)
class IngestConfig:
    warmup: float = 0.05
    final_window_cutoff: float | None = None
    delay_disconnected: bool = True
    dedupe: bool = True
    max_clique: int = DEFAULT_MAX_CLIQUE

    def __post_init__(self):
        if not (0.0 <= self.warmup < 1.0):
            raise DataError(f"warmup must lie in [0, 1), got {self.warmup}")
        if self.max_clique < 2:
            raise DataError("max_clique must be at least 2")


# -- parsing ----------------------------------------------------------------------


def parse_time(text: str) -> float:
    """Numeric timestamps as-is; ISO dates as POSIX seconds."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text).timestamp()
    except ValueError:
        raise ValueError(f"bad timestamp {text!r}") from None


def _body(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def parse_edge_stream(text: str, fmt: str | None = None, dedupe: bool = False) -> list[RawEdgeRecord]:
    """Records of a whitespace-separated edge list, in file order.

    ``fmt`` fixes the column count (edges2/3/4); by default each line may
    carry 2 to 4 columns but all lines must agree. With ``dedupe`` only the
    earliest sighting of each unordered pair is kept (file order on ties,
    last_seen merged to the latest).
    """
    want = _COLUMNS.get(fmt) if fmt else None
    if fmt and want is None:
        raise DataError(f"not an edge-list format: {fmt}")
    records: list[RawEdgeRecord] = []
    width = want
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = _body(raw)
        if not body:
            continue
        parts = body.split()
        if width is None:
            width = len(parts)
            if width not in (2, 3, 4):
                raise ParseError(lineno, f"expected 2 to 4 columns, got {width}")
        if len(parts) != width:
            raise ParseError(lineno, f"expected {width} columns, got {len(parts)}")
        src, dst = parts[0], parts[1]
        if src == dst:
            raise SelfLoopRecord(lineno, f"self-loop on {src!r}")
        try:
            first = parse_time(parts[2]) if width >= 3 else None
            last = parse_time(parts[3]) if width == 4 else None
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        records.append(RawEdgeRecord(src, dst, first, last, lineno))
    return dedupe_records(records) if dedupe else records


def dedupe_records(records: Iterable[RawEdgeRecord]) -> list[RawEdgeRecord]:
    best: dict[tuple[str, str], RawEdgeRecord] = {}
    for r in records:
        k = r.key
        old = best.get(k)
        if old is None:
            best[k] = r
            continue
        keep = old
        if r.first_seen is not None and old.first_seen is not None and r.first_seen < old.first_seen:
            keep = RawEdgeRecord(r.src, r.dst, r.first_seen, old.last_seen, r.line)
        if r.last_seen is not None and (keep.last_seen is None or r.last_seen > keep.last_seen):
            keep = RawEdgeRecord(keep.src, keep.dst, keep.first_seen, r.last_seen, keep.line)
        best[k] = keep
    # dict order follows first appearance in the file
    return list(best.values())


def node_ids(records: Iterable[RawEdgeRecord]) -> dict[str, int]:
    """Dense ids in order of first appearance."""
    ids: dict[str, int] = {}
    for r in records:
        for x in (r.src, r.dst):
            if x not in ids:
                ids[x] = len(ids)
    return ids


def filter_final_window(records: Iterable[RawEdgeRecord], cutoff: float) -> list[RawEdgeRecord]:
    """Drop records whose last sighting precedes ``cutoff``."""
    out = []
    for r in records:
        if r.last_seen is None:
            raise DataError(f"line {r.line}: a cutoff needs the last-seen column (edges4)")
        if r.last_seen >= cutoff:
            out.append(r)
    return out


# -- co-authorship ---------------------------------------------------------------------


@dataclass(frozen=True)
class Paper:
    paper_id: str
    authors: tuple[str, ...]
    timestamp: float | None = None


def normalize_author(name: str) -> str:
    """Reduce a name to lower-case first initial and surname.

    ``"Smith, John A."`` and ``"John A. Smith"`` both give ``"j smith"``.
    """
    name = " ".join(name.replace(".", " ").split())
    if "," in name:
        surname, _, given = name.partition(",")
        given = given.strip()
    else:
        *given_parts, surname = name.split(" ")
        given = " ".join(given_parts)
    surname = surname.strip().lower()
    return f"{given[0].lower()} {surname}" if given else surname


def parse_coauthorship(text: str, normalize: bool = True) -> list[Paper]:
    """``paper_id|timestamp|author1;author2;...`` lines; timestamp may be empty."""
    papers = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = _body(raw)
        if not body:
            continue
        parts = body.split("|")
        if len(parts) != 3:
            raise ParseError(lineno, "expected paper_id|timestamp|authors")
        pid, ts, names = (p.strip() for p in parts)
        try:
            when = parse_time(ts) if ts else None
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        authors = [a.strip() for a in names.split(";") if a.strip()]
        if not authors:
            raise ParseError(lineno, f"paper {pid!r} has no authors")
        if normalize:
            authors = [normalize_author(a) for a in authors]
        papers.append(Paper(pid, tuple(dict.fromkeys(authors)), when))
    return papers


def expand_coauthorship(
    papers: Sequence[Paper | tuple],
    max_clique: int = DEFAULT_MAX_CLIQUE,
    dedupe: bool = True,
    skipped: list | None = None,
) -> list[RawEdgeRecord]:
    """All author pairs of every paper with at most ``max_clique`` authors.

    Larger papers are skipped and logged (and appended to ``skipped`` when
    given). Papers are taken in timestamp order, file order on ties, so with
    ``dedupe`` each pair keeps the time it first appeared.
    """
    papers = [p if isinstance(p, Paper) else Paper(p[0], tuple(p[1]), p[2]) for p in papers]
    order = sorted(range(len(papers)), key=lambda i: _time_key(papers[i].timestamp))
    out: list[RawEdgeRecord] = []
    seen: set[tuple[str, str]] = set()
    for i in order:
        p = papers[i]
        if not p.authors:
            raise DataError(f"paper {p.paper_id!r} has no authors")
        if len(p.authors) > max_clique:
            log.info("skipping paper %s: %d authors exceed max_clique=%d", p.paper_id, len(p.authors), max_clique)
            if skipped is not None:
                skipped.append(p)
            continue
        for a, b in combinations(p.authors, 2):
            rec = RawEdgeRecord(a, b, p.timestamp, None, i + 1)
            if dedupe:
                if rec.key in seen:
                    continue
                seen.add(rec.key)
            out.append(rec)
    return out


def _time_key(t):
    return -math.inf if t is None else t


# -- ordering -------------------------------------------------------------------------


@dataclass
class IngestResult:
    events: list[EdgeEvent]
    names: list[str]  # external id of each canonical node
    residual: list[RawEdgeRecord] = field(default_factory=list)
    duplicates: int = 0
    delayed: int = 0
    skipped_papers: int = 0

    def summary(self) -> dict[str, int]:
        return {
            "events": len(self.events),
            "nodes": len(self.names),
            "edges": sum(ev.choices for ev in self.events),
            "residual": len(self.residual),
            "duplicates": self.duplicates,
            "delayed": self.delayed,
            "skipped_papers": self.skipped_papers,
        }


def order_and_delay(records: Sequence[RawEdgeRecord], config: IngestConfig | None = None) -> IngestResult:
    """Canonical events from raw records, keeping the growing graph connected.

    Records are stably sorted by first sighting. The first record seeds the
    graph. A record with neither endpoint present waits in a buffer; after
    each applied edge the earliest buffered record that has become
    applicable goes next. A new node's first edge gives a ``NewNode``; its
    further edges join the same event while they are applied back to back
    with the same timestamp. Records still buffered at the end are returned
    as residuals. Without ``delay_disconnected`` such records are residual
    straight away.
    """
    config = config or IngestConfig()
    recs = list(records)
    if config.final_window_cutoff is not None:
        recs = filter_final_window(recs, config.final_window_cutoff)
    n_raw = len(recs)
    if config.dedupe:
        recs = dedupe_records(recs)
    if any(r.first_seen is not None for r in recs):
        if any(r.first_seen is None for r in recs):
            raise DataError("either every record or none carries a first-seen time")
        recs.sort(key=lambda r: r.first_seen)
    result = IngestResult([], [], duplicates=n_raw - len(recs))
    if not recs:
        return result

    ids: dict[str, int] = {}
    present: set[tuple[str, str]] = set()
    waiting: dict[str, list[int]] = {}  # node -> buffered record positions
    ready: list[int] = []  # heap of buffered positions now applicable
    buffered: set[int] = set()
    events = result.events
    last = None  # (new node name, timestamp) of the open NewNode event

    def add_node(name):
        ids[name] = len(ids)
        result.names.append(name)
        for j in waiting.pop(name, ()):
            if j in buffered:
                heapq.heappush(ready, j)

    def apply(r: RawEdgeRecord):
        nonlocal last
        if r.key in present:
            result.duplicates += 1
            return
        present.add(r.key)
        a_in, b_in = r.src in ids, r.dst in ids
        if a_in and b_in:
            if last is not None and r.first_seen is not None and last[1] == r.first_seen and last[0] in r.key:
                other = r.dst if r.src == last[0] else r.src
                prev = events[-1]
                events[-1] = NewNode(prev.targets + (ids[other],), original_index=prev.original_index)
                return
            events.append(InternalEdge(ids[r.src], ids[r.dst], original_index=len(events)))
            last = None
            return
        new, old = (r.dst, r.src) if a_in else (r.src, r.dst)
        target = ids[old]
        add_node(new)
        events.append(NewNode((target,), original_index=len(events)))
        last = (new, r.first_seen)

    def drain():
        while ready:
            j = heapq.heappop(ready)
            if j in buffered:
                buffered.discard(j)
                apply(recs[j])

    first = recs[0]
    add_node(first.src)
    apply(first)
    for i in range(1, len(recs)):
        r = recs[i]
        if r.src in ids or r.dst in ids:
            apply(r)
            drain()
        elif not config.delay_disconnected:
            result.residual.append(r)
        else:
            buffered.add(i)
            result.delayed += 1
            waiting.setdefault(r.src, []).append(i)
            waiting.setdefault(r.dst, []).append(i)
    result.residual.extend(recs[j] for j in sorted(buffered))
    result.delayed -= len(buffered)
    if result.residual:
        log.warning("%d record(s) never connect to the main component", len(result.residual))
    return result


def split_warmup(events: Sequence[EdgeEvent], config: IngestConfig | float) -> tuple[EvolvingGraph, list[EdgeEvent]]:
    """Build G0 from the first max(1, floor(warmup * len)) events; return it with the rest."""
    warmup = config.warmup if isinstance(config, IngestConfig) else float(config)
    if not (0.0 <= warmup < 1.0):
        raise DataError(f"warmup must lie in [0, 1), got {warmup}")
    n = warmup_size(len(events), warmup)
    if n >= len(events):
        raise WarmupTooLarge(f"warm-up takes {n} of {len(events)} events, nothing left to score")
    g0 = replay(events[:n], seed_graph())
    return g0, list(events[n:])


def warmup_size(n_events: int, warmup: float) -> int:
    # the first event is the seed edge, so G0 always holds at least one edge
    return max(1, math.floor(warmup * n_events))


def source_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def ingest_text(text: str, fmt: str, config: IngestConfig | None = None) -> IngestResult:
    """Parse raw text of format ``fmt`` and order it into canonical events."""
    config = config or IngestConfig()
    skipped: list = []
    if fmt == "coauth":
        records = expand_coauthorship(parse_coauthorship(text), config.max_clique, False, skipped)
    elif fmt in _COLUMNS or fmt is None:
        records = parse_edge_stream(text, fmt)
    else:
        raise DataError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    result = order_and_delay(records, config)
    result.skipped_papers = len(skipped)
    return result
