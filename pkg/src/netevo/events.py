"""Edge-event stream types and the canonical event file format.

A canonical file describes a growth history starting from a single node
(node 0)::

    # netevo-events v1
    # g0_events=1
    N 0
    N 0 1
    I 1 2

``N t1 t2 ...`` adds the next node id and links it to the listed targets in
order; ``I a b`` links two existing nodes. ``# key=value`` lines form the
header metadata.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DataError, MalformedStream, ParseError
from .graph import EvolvingGraph

MAGIC = "# netevo-events v1"


@dataclass(frozen=True)
class NewNode:
    targets: tuple[int, ...]
    original_index: int = field(default=-1, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

    @property
    def choices(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class InternalEdge:
    a: int
    b: int
    original_index: int = field(default=-1, compare=False)

    choices = 1


EdgeEvent = Union[NewNode, InternalEdge]


def seed_graph() -> EvolvingGraph:
    """The single-node graph every canonical stream starts from."""
    g = EvolvingGraph()
    g.add_node()
    return g


def check_event(g: EvolvingGraph, ev: EdgeEvent) -> None:
    """Raise DataError if ``ev`` cannot be applied to ``g``."""
    n = g.n_nodes
    if isinstance(ev, NewNode):
        if not ev.targets:
            raise DataError("new node without targets")
        if len(set(ev.targets)) != len(ev.targets):
            raise DataError(f"repeated target in {ev.targets}")
        for t in ev.targets:
            if not 0 <= t < n:
                raise DataError(f"target {t} does not exist (graph has {n} nodes)")
    elif isinstance(ev, InternalEdge):
        if ev.a == ev.b:
            raise DataError(f"self-loop on node {ev.a}")
        for x in (ev.a, ev.b):
            if not 0 <= x < n:
                raise DataError(f"node {x} does not exist (graph has {n} nodes)")
        if g.has_edge(ev.a, ev.b):
            raise DataError(f"edge ({ev.a}, {ev.b}) already present")
    else:
        raise DataError(f"not an edge event: {ev!r}")


def apply_event(g: EvolvingGraph, ev: EdgeEvent) -> None:
    """Apply ``ev`` and record the chosen nodes as selections."""
    if isinstance(ev, NewNode):
        new = g.add_node()
        for t in ev.targets:
            g.add_edge(new, t)
        for t in ev.targets:
            g.recency.append(t)
    else:
        g.add_edge(ev.a, ev.b)
        g.recency.append(ev.a)
        g.recency.append(ev.b)


def replay(events: Iterable[EdgeEvent], g: EvolvingGraph | None = None) -> EvolvingGraph:
    """Apply ``events`` in order to ``g`` (a fresh seed graph by default), in place."""
    if g is None:
        g = seed_graph()
    for i, ev in enumerate(events):
        try:
            check_event(g, ev)
        except DataError as exc:
            raise MalformedStream(_index(ev, i), str(exc)) from None
        apply_event(g, ev)
    return g


def _index(ev, i):
    return ev.original_index if ev.original_index >= 0 else i


def format_event(ev: EdgeEvent) -> str:
    if isinstance(ev, NewNode):
        return "N " + " ".join(map(str, ev.targets))
    return f"I {ev.a} {ev.b}"


def flatten(events: Sequence[EdgeEvent]) -> tuple[list[int], list[int]]:
    """Target count per event (0 for an internal edge) and the flat list of
    selected nodes: the targets of a new node, both endpoints of an edge."""
    ks: list[int] = []
    ends: list[int] = []
    for i, ev in enumerate(events):
        if isinstance(ev, NewNode):
            if not ev.targets:
                raise MalformedStream(_index(ev, i), "new node without targets")
            ks.append(len(ev.targets))
            ends.extend(ev.targets)
        else:
            ks.append(0)
            ends.append(ev.a)
            ends.append(ev.b)
    return ks, ends


def flat_hash(ks: Sequence[int], ends: Sequence[int], g0: EvolvingGraph | None = None) -> str:
    h = hashlib.sha256()
    if g0 is not None:
        h.update(g0.fingerprint().encode())
    h.update(np.asarray(ks, dtype=np.int64).tobytes())
    h.update(b"|")
    h.update(np.asarray(ends, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


def stream_hash(events: Sequence[EdgeEvent], g0: EvolvingGraph | None = None) -> str:
    """Short digest identifying a stream (and its starting graph)."""
    return flat_hash(*flatten(events), g0)


@dataclass
class EventFile:
    events: list[EdgeEvent]
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def g0_events(self) -> int | None:
        v = self.meta.get("g0_events")
        return None if v is None else int(v)


def parse_events(text: str) -> EventFile:
    events: list[EdgeEvent] = []
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and not events:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        parts = line.split()
        try:
            if parts[0] == "N":
                if len(parts) < 2:
                    raise ValueError("new node needs at least one target")
                ev = NewNode(tuple(int(p) for p in parts[1:]), original_index=len(events))
            elif parts[0] == "I":
                if len(parts) != 3:
                    raise ValueError("internal edge needs exactly two nodes")
                ev = InternalEdge(int(parts[1]), int(parts[2]), original_index=len(events))
            else:
                raise ValueError(f"unknown operation {parts[0]!r}")
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        events.append(ev)
    return EventFile(events, meta)


def format_events(events: Iterable[EdgeEvent], meta: dict | None = None) -> str:
    lines = [MAGIC]
    for k, v in (meta or {}).items():
        lines.append(f"# {k}={v}")
    lines.extend(format_event(ev) for ev in events)
    return "\n".join(lines) + "\n"


def read_events(path) -> EventFile:
    with open(path) as fh:
        return parse_events(fh.read())


def write_events(path, events: Iterable[EdgeEvent], meta: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(format_events(events, meta))
