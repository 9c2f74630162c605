"""Grow artificial networks from an outer model and a pair of inner specs.

The outer model decides *what* happens next (a new node with k targets, or
an internal edge); the inner specs decide *which* nodes are involved.
Sampling is exact with respect to :func:`netevo.models.node_probability`:
a mixture term is picked with its renormalised weight, then a node is drawn
from that term's law restricted to the choice set.
"""

from __future__ import annotations

import bisect
import logging
import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .errors import DataError, EmptyStream, Exhausted, Stuck
from .events import EdgeEvent, InternalEdge, NewNode, apply_event
from .fenwick import FenwickTree
from .graph import EvolvingGraph
from .likelihood import SpecPair, as_pair
from .models import DEGREE, DOUBLETON, NULL, PFP, RECENT, SINGLETON, ChoiceDistribution, ModelSpec, partner_exclusion

log = logging.getLogger(__name__)

# below this fraction of a term's mass left in the choice set, enumerate
# instead of rejection sampling
REJECTION_FLOOR = 0.25


# -- outer models --------------------------------------------------------------


@dataclass(frozen=True)
class Replay:
    """Operation skeleton of an observed stream: target counts, choices stripped."""

    skeleton: tuple[int, ...]  # k >= 1 for a new node with k targets, 0 for an internal edge

    @classmethod
    def from_events(cls, events: Sequence[EdgeEvent]) -> "Replay":
        return cls(tuple(len(ev.targets) if isinstance(ev, NewNode) else 0 for ev in events))

    def operations(self, rng) -> Iterator[int]:
        return iter(self.skeleton)


@dataclass(frozen=True)
class Empirical:
    targets: Mapping[int, float]  # targets per new node
    internal: Mapping[int, float]  # internal edges after each new node

    def __post_init__(self):
        for name, dist, lo in (("targets", self.targets, 1), ("internal", self.internal, 0)):
            if not dist:
                raise DataError(f"empty {name} distribution")
            if any(int(k) != k or k < lo for k in dist):
                raise DataError(f"{name} support must be integers >= {lo}")
            if any(p < 0 for p in dist.values()) or abs(sum(dist.values()) - 1.0) > 1e-9:
                raise DataError(f"{name} distribution must sum to 1")

    def operations(self, rng) -> Iterator[int]:
        tk, tc = _cdf(self.targets)
        ik, ic = _cdf(self.internal)
        while True:
            yield tk[min(bisect.bisect_right(tc, rng.random() * tc[-1]), len(tk) - 1)]
            m = ik[min(bisect.bisect_right(ic, rng.random() * ic[-1]), len(ik) - 1)]
            for _ in range(m):
                yield 0


OuterModel = Replay | Empirical


def _cdf(dist):
    keys = sorted(k for k, p in dist.items() if p > 0)
    acc, cum = 0.0, []
    for k in keys:
        acc += dist[k]
        cum.append(acc)
    return keys, cum


def empirical_outer_from(events: Sequence[EdgeEvent]) -> Empirical:
    """Empirical distributions of new-node target counts and of internal-edge
    runs following each new node."""
    targets: dict[int, int] = {}
    runs: dict[int, int] = {}
    run = None
    for ev in events:
        if isinstance(ev, NewNode):
            if run is not None:
                runs[run] = runs.get(run, 0) + 1
            k = len(ev.targets)
            targets[k] = targets.get(k, 0) + 1
            run = 0
        elif run is not None:
            run += 1
    if run is None:
        raise EmptyStream("stream has no new-node events")
    runs[run] = runs.get(run, 0) + 1
    nt, nr = sum(targets.values()), sum(runs.values())
    return Empirical(
        {k: v / nt for k, v in sorted(targets.items())},
        {k: v / nr for k, v in sorted(runs.items())},
    )


# -- node sampling --------------------------------------------------------------


class _DegreeWeights:
    """Fenwick tree over a per-node weight that depends on degree only."""

    def __init__(self, g: EvolvingGraph, weight):
        self.weight = weight
        self.tree = FenwickTree(weight(d) for d in g.degree)

    def degree_changed(self, node, old, new):
        tree = self.tree
        while len(tree) <= node:
            tree.append(0.0)
        tree.set(node, self.weight(new))

    def resync(self, g):
        self.tree.rebuild()


class _TriangleWeights:
    def __init__(self, g: EvolvingGraph):
        self.tree = FenwickTree(float(t) for t in g.triangles)

    def degree_changed(self, node, old, new):
        while len(self.tree) <= node:
            self.tree.append(0.0)

    def triangles_changed(self, node, old, new):
        while len(self.tree) <= node:
            self.tree.append(0.0)
        self.tree.set(node, float(new))

    def resync(self, g):
        self.tree.rebuild()


def _tree_for(g: EvolvingGraph, comp) -> FenwickTree:
    s = g.samplers.get(comp)
    if s is None:
        if comp.kind == DEGREE:
            s = _DegreeWeights(g, float)
        elif comp.kind == PFP:
            s = _DegreeWeights(g, g.pfp_total(comp.param).weight)
        else:
            s = _TriangleWeights(g)
        g.samplers[comp] = s
        g.watch(s)
    return s.tree


def _uniform(pool, excluded, rng, size):
    """Uniform pick from ``pool`` (an indexable sequence) minus ``excluded``."""
    n = len(pool)
    if size * 2 >= n:
        while True:
            x = pool[int(rng.random() * n)]
            if x not in excluded:
                return x
    allowed = sorted(x for x in pool if x not in excluded)
    return allowed[int(rng.random() * len(allowed))]


def _draw_term(term, g: EvolvingGraph, excluded, rng) -> int:
    kind = term.comp.kind
    if kind == NULL:
        return _uniform(range(g.n_nodes), excluded, rng, g.n_nodes - len(excluded))
    if kind == SINGLETON:
        return _uniform(g.singletons.items, excluded, rng, int(term.z))
    if kind == DOUBLETON:
        return _uniform(g.doubletons.items, excluded, rng, int(term.z))
    if kind == RECENT:
        allowed = sorted(term.support - excluded) if excluded else sorted(term.support)
        return allowed[int(rng.random() * len(allowed))]
    tree = _tree_for(g, term.comp)
    if term.z >= REJECTION_FLOOR * tree.total:
        while True:
            x = tree.sample(rng)
            if x not in excluded:
                return x
    # most of the mass is excluded: walk the choice set directly
    w = tree.weights
    u = rng.random() * term.z
    last = None
    for i in range(len(w)):
        if w[i] > 0.0 and i not in excluded:
            last = i
            u -= w[i]
            if u < 0.0:
                return i
    return last


def sample_node(spec: ModelSpec, g: EvolvingGraph, excluded=(), rng=None) -> int:
    """Draw a node with probability ``node_probability(spec, node, g, excluded)``."""
    rng = rng or random.Random()
    dist = ChoiceDistribution(spec, g, excluded)
    excluded = dist.excluded
    terms = dist.terms
    if not terms:
        return _uniform(range(g.n_nodes), excluded, rng, dist.size)
    term = terms[-1]
    if len(terms) > 1:
        u = rng.random()
        for t in terms:
            u -= t.beta
            if u < 0.0:
                term = t
                break
    return _draw_term(term, g, excluded, rng)


def sample_edge(spec: ModelSpec, g: EvolvingGraph, rng) -> tuple[int, int]:
    """Ordered pair (a, b): a among nodes with a free partner, b among a's non-neighbours."""
    if g.is_complete():
        raise Stuck("graph is complete")
    a = sample_node(spec, g, g.saturated(), rng)
    b = sample_node(spec, g, partner_exclusion(g, a), rng)
    return a, b


# -- growth ---------------------------------------------------------------------


@dataclass
class GrowthResult:
    graph: EvolvingGraph
    events: list[EdgeEvent]
    rng_seed: int
    skipped_internal: int = 0
    meta: dict = field(default_factory=dict)


def grow(
    g0: EvolvingGraph,
    outer: OuterModel,
    specs,
    target_edges: int,
    seed: int,
) -> GrowthResult:
    """Grow a copy of ``g0`` until it has ``target_edges`` edges.

    New-node target counts are truncated so the edge target is hit exactly.
    Internal edges requested on a complete graph are skipped and counted.
    """
    pair: SpecPair = as_pair(specs)
    if g0.n_nodes == 0:
        raise DataError("growth needs a nonempty starting graph")
    if target_edges <= g0.n_edges:
        raise DataError(f"target_edges={target_edges} must exceed the {g0.n_edges} edges of G0")
    rng = random.Random(seed)
    g = g0.copy()
    events: list[EdgeEvent] = []
    skipped = 0
    ops = outer.operations(rng)
    while g.n_edges < target_edges:
        try:
            k = next(ops)
        except StopIteration:
            raise Exhausted(
                f"replay skeleton ended at {g.n_edges} edges, target {target_edges}"
            ) from None
        if k > 0:
            k = min(k, target_edges - g.n_edges, g.n_nodes)
            chosen: list[int] = []
            excluded: set[int] = set()
            for _ in range(k):
                x = sample_node(pair.new_node, g, excluded, rng)
                chosen.append(x)
                excluded.add(x)
            ev = NewNode(tuple(chosen), original_index=len(events))
        else:
            if g.is_complete():
                skipped += 1
                log.info("internal edge skipped at %d edges: graph is complete", g.n_edges)
                continue
            a, b = sample_edge(pair.internal, g, rng)
            ev = InternalEdge(a, b, original_index=len(events))
        apply_event(g, ev)
        events.append(ev)
    for s in list(g.samplers.values()):
        g.unwatch(s)
    g.samplers.clear()
    return GrowthResult(g, events, seed, skipped)
