"""Graph statistics for comparing real and grown networks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DataError, MalformedStream
from .events import EdgeEvent, apply_event, check_event
from .graph import EvolvingGraph

CSV_COLUMNS = ("edges", "nodes", "d1", "d2", "maxd", "meansqd", "clustering", "assortativity")
CSV_NOTE = (
    "# clustering: global transitivity, 3*triangles / connected triples; "
    "assortativity: Newman degree correlation over edges, nan when degree variance is zero"
)


@dataclass(frozen=True)
class StatsSnapshot:
    n_nodes: int
    n_edges: int
    d1_fraction: float
    d2_fraction: float
    max_degree: int
    mean_sq_degree: float
    clustering: float
    assortativity: float

    @property
    def mean_degree(self) -> float:
        return 2.0 * self.n_edges / self.n_nodes

    def csv_row(self) -> list[str]:
        return [
            str(self.n_edges),
            str(self.n_nodes),
            repr(self.d1_fraction),
            repr(self.d2_fraction),
            str(self.max_degree),
            repr(self.mean_sq_degree),
            repr(self.clustering),
            repr(self.assortativity),
        ]


def snapshot(g: EvolvingGraph) -> StatsSnapshot:
    """Statistics of the current graph state, from its running counters plus
    one pass over the edges for the degree correlation."""
    n = g.n_nodes
    if n == 0:
        raise DataError("statistics of an empty graph")
    m = g.n_edges
    triples = (g.sq_degree_sum - 2 * m) // 2  # sum of C(d, 2)
    clustering = g.triangle_sum / triples if triples else 0.0
    return StatsSnapshot(
        n_nodes=n,
        n_edges=m,
        d1_fraction=len(g.singletons) / n,
        d2_fraction=len(g.doubletons) / n,
        max_degree=g.max_degree,
        mean_sq_degree=g.sq_degree_sum / n,
        clustering=clustering,
        assortativity=assortativity(g),
    )


def assortativity(g: EvolvingGraph) -> float:
    """Pearson correlation of the degrees at either end of an edge.

    Computed on exact integer sums, so a zero variance is detected exactly
    and reported as nan.
    """
    m = g.n_edges
    if m == 0:
        return math.nan
    deg = g.degree
    s1 = g.sq_degree_sum  # sum over edges of (j + k)
    s2 = sum(d * d * d for d in deg)  # sum over edges of (j^2 + k^2)
    prod = 0
    for a, nb in enumerate(g.adj):
        da = deg[a]
        prod += da * sum(map(deg.__getitem__, nb))
    prod //= 2  # each edge counted from both ends
    num = 4 * m * prod - s1 * s1
    den = 2 * m * s2 - s1 * s1
    if den == 0:
        return math.nan
    return num / den


def trajectory(
    g0: EvolvingGraph, events: Sequence[EdgeEvent], checkpoints: Iterable[int]
) -> list[tuple[int, StatsSnapshot]]:
    """Snapshots at increasing edge-count checkpoints while replaying ``events``
    on a copy of ``g0``. A checkpoint is reported once the edge count reaches
    it; checkpoints beyond the end of the stream are not reported."""
    cps = list(checkpoints)
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise DataError("checkpoints must be strictly increasing")
    g = g0.copy()
    out: list[tuple[int, StatsSnapshot]] = []
    i = 0

    def emit():
        nonlocal i
        if i < len(cps) and g.n_edges >= cps[i]:
            snap = snapshot(g)
            while i < len(cps) and g.n_edges >= cps[i]:
                out.append((cps[i], snap))
                i += 1

    emit()
    for k, ev in enumerate(events):
        if i == len(cps):
            break
        try:
            check_event(g, ev)
        except DataError as exc:
            raise MalformedStream(ev.original_index if ev.original_index >= 0 else k, str(exc)) from None
        apply_event(g, ev)
        emit()
    return out


def even_checkpoints(total_edges: int, n: int) -> list[int]:
    """``n`` checkpoints evenly spaced up to ``total_edges``, ending on it."""
    if n < 1 or total_edges < 1:
        return []
    pts = sorted({max(1, round(total_edges * (i + 1) / n)) for i in range(n)})
    return pts


def to_csv(rows: Iterable[tuple[int, StatsSnapshot] | StatsSnapshot]) -> str:
    buf = io.StringIO()
    buf.write(CSV_NOTE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        snap = r[1] if isinstance(r, tuple) else r
        w.writerow(snap.csv_row())
    return buf.getvalue()
