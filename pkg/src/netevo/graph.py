"""Growing simple undirected graph with incrementally maintained node attributes.

The graph only ever grows. Every attribute a selection component needs
(degree, triangle count, degree-1 / degree-2 membership, recency log and
the running sums used as normalisers) is updated in O(1) amortised time per
edge, apart from the triangle update which costs O(min(d_a, d_b)).
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from typing import Iterable, Iterator

from .errors import DuplicateEdge, SelfLoop, UnknownNode

# exact recomputation of floating-point running sums after this many edges
RESYNC_INTERVAL = 1 << 16


def pfp_weight(d: int, delta: float) -> float:
    """Positive-feedback weight ``d ** (1 + delta * log10(d))``; zero for d = 0."""
    if d <= 0:
        return 0.0
    if d == 1:
        return 1.0
    return d ** (1.0 + delta * math.log10(d))


class IndexedSet:
    """Set of ints with O(1) add, remove and uniform random pick by position."""

    __slots__ = ("items", "_pos")

    def __init__(self):
        self.items: list[int] = []
        self._pos: dict[int, int] = {}

    def add(self, x: int) -> None:
        if x not in self._pos:
            self._pos[x] = len(self.items)
            self.items.append(x)

    def discard(self, x: int) -> None:
        i = self._pos.pop(x, None)
        if i is None:
            return
        last = self.items.pop()
        if last != x:
            self.items[i] = last
            self._pos[last] = i

    def __contains__(self, x) -> bool:
        return x in self._pos

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def copy(self) -> "IndexedSet":
        other = IndexedSet()
        other.items = list(self.items)
        other._pos = dict(self._pos)
        return other


class PfpTotal:
    """Running sum of ``pfp_weight(d_i, delta)`` over all nodes for one delta."""

    __slots__ = ("delta", "total", "_cache")

    def __init__(self, delta: float, degrees: Iterable[int]):
        self.delta = float(delta)
        self._cache: list[float] = [0.0, 1.0]
        self.resync(degrees)

    def weight(self, d: int) -> float:
        cache = self._cache
        while len(cache) <= d:
            cache.append(pfp_weight(len(cache), self.delta))
        return cache[d]

    def degree_changed(self, node: int, old: int, new: int) -> None:
        self.total += self.weight(new) - self.weight(old)

    def resync(self, degrees: Iterable[int]) -> None:
        self.total = math.fsum(self.weight(d) for d in degrees)

    def copy(self) -> "PfpTotal":
        other = PfpTotal.__new__(PfpTotal)
        other.delta = self.delta
        other.total = self.total
        other._cache = list(self._cache)
        return other


class EvolvingGraph:
    """Simple undirected graph that never loses nodes or edges.

    Nodes are dense integers assigned in arrival order. Objects registered
    through :meth:`watch` receive ``degree_changed(node, old, new)`` and,
    if they define it, ``triangles_changed(node, old, new)`` callbacks.
    """

    def __init__(self):
        self.adj: list[set[int]] = []
        self.degree: list[int] = []
        self.triangles: list[int] = []
        self.recency: list[int] = []
        self.n_edges = 0
        self.triangle_sum = 0  # sum of per-node counts, 3x the triangle total
        self.sq_degree_sum = 0
        self.max_degree = 0
        self.n_wired = 0  # nodes with degree >= 1
        self.singletons = IndexedSet()
        self.doubletons = IndexedSet()
        self._pfp: dict[float, PfpTotal] = {}
        self._watchers: list = []
        self._tri_watchers: list = []
        self._since_resync = 0
        self.samplers: dict = {}  # per-component samplers, owned by the generator

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], n_nodes: int | None = None) -> "EvolvingGraph":
        """Build a graph from an edge list; nodes are created up to the largest id seen."""
        g = cls()
        edges = list(edges)
        top = max((max(a, b) for a, b in edges), default=-1) + 1
        for _ in range(max(top, n_nodes or 0)):
            g.add_node()
        for a, b in edges:
            g.add_edge(a, b)
        return g

    # -- size ---------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.degree)

    @property
    def degree_sum(self) -> int:
        return 2 * self.n_edges

    def __len__(self) -> int:
        return len(self.degree)

    def __contains__(self, node) -> bool:
        return isinstance(node, int) and 0 <= node < len(self.degree)

    def _check(self, node: int) -> None:
        if not (isinstance(node, int) and 0 <= node < len(self.degree)):
            raise UnknownNode(f"unknown node {node!r}")

    # -- mutation -----------------------------------------------------------

    def add_node(self) -> int:
        """Append an isolated node and return its id.

        The caller must wire it up before the graph is considered connected again.
        """
        self.adj.append(set())
        self.degree.append(0)
        self.triangles.append(0)
        return len(self.degree) - 1

    def add_edge(self, a: int, b: int) -> None:
        self._check(a)
        self._check(b)
        if a == b:
            raise SelfLoop(f"self-loop on node {a}")
        adj_a, adj_b = self.adj[a], self.adj[b]
        if b in adj_a:
            raise DuplicateEdge(f"edge ({a}, {b}) already present")

        common = adj_a & adj_b if len(adj_a) <= len(adj_b) else adj_b & adj_a
        if common:
            k = len(common)
            tri = self.triangles
            watchers = self._tri_watchers
            for c in common:
                tri[c] += 1
                for w in watchers:
                    w.triangles_changed(c, tri[c] - 1, tri[c])
            tri[a] += k
            tri[b] += k
            for w in watchers:
                w.triangles_changed(a, tri[a] - k, tri[a])
                w.triangles_changed(b, tri[b] - k, tri[b])
            self.triangle_sum += 3 * k

        adj_a.add(b)
        adj_b.add(a)
        self.n_edges += 1
        self._bump_degree(a)
        self._bump_degree(b)

        self._since_resync += 1
        if self._since_resync >= RESYNC_INTERVAL:
            self.resync()

    def _bump_degree(self, node: int) -> None:
        old = self.degree[node]
        new = old + 1
        self.degree[node] = new
        self.sq_degree_sum += 2 * old + 1
        if new > self.max_degree:
            self.max_degree = new
        if new == 1:
            self.n_wired += 1
            self.singletons.add(node)
        elif new == 2:
            self.singletons.discard(node)
            self.doubletons.add(node)
        elif new == 3:
            self.doubletons.discard(node)
        for p in self._pfp.values():
            p.total += p.weight(new) - p.weight(old)
        for w in self._watchers:
            w.degree_changed(node, old, new)

    def record_selection(self, node: int) -> None:
        self._check(node)
        self.recency.append(node)

    # -- queries ------------------------------------------------------------

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adj[a]

    def neighbors(self, node: int) -> set[int]:
        self._check(node)
        return self.adj[node]

    def edges(self) -> Iterator[tuple[int, int]]:
        for a, nbrs in enumerate(self.adj):
            for b in nbrs:
                if a < b:
                    yield a, b

    def recent_set(self, window: int) -> set[int]:
        """Distinct nodes among the last ``window`` recorded selections."""
        if window <= 0:
            return set()
        return set(self.recency[-window:])

    def saturated(self) -> set[int]:
        """Nodes already adjacent to every other node (no legal partner left)."""
        n = len(self.degree)
        if self.max_degree < n - 1 or n < 2:
            return set()
        return {i for i, d in enumerate(self.degree) if d == n - 1}

    def is_complete(self) -> bool:
        n = len(self.degree)
        return self.n_edges == n * (n - 1) // 2

    def is_connected(self) -> bool:
        """True iff all wired nodes form one component.

        Degree-0 nodes are ignored unless they are the only node.
        """
        wired = [i for i, d in enumerate(self.degree) if d > 0]
        if not wired:
            return len(self.degree) <= 1
        seen = {wired[0]}
        queue = deque(seen)
        while queue:
            x = queue.popleft()
            for y in self.adj[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return len(seen) == len(wired)

    # -- running sums -------------------------------------------------------

    def pfp_total(self, delta: float) -> PfpTotal:
        """Running PFP normaliser for ``delta``; starts being tracked on first use."""
        delta = float(delta)
        tracker = self._pfp.get(delta)
        if tracker is None:
            tracker = self._pfp[delta] = PfpTotal(delta, self.degree)
        return tracker

    def watch(self, watcher) -> None:
        self._watchers.append(watcher)
        if hasattr(watcher, "triangles_changed"):
            self._tri_watchers.append(watcher)

    def unwatch(self, watcher) -> None:
        self._watchers.remove(watcher)
        if watcher in self._tri_watchers:
            self._tri_watchers.remove(watcher)

    def resync(self) -> None:
        self._since_resync = 0
        for p in self._pfp.values():
            p.resync(self.degree)
        for w in self._watchers:
            if hasattr(w, "resync"):
                w.resync(self)

    # -- copying / identity -------------------------------------------------

    def copy(self) -> "EvolvingGraph":
        """Independent copy of the graph state. Watchers are not carried over."""
        g = EvolvingGraph()
        g.adj = [set(s) for s in self.adj]
        g.degree = list(self.degree)
        g.triangles = list(self.triangles)
        g.recency = list(self.recency)
        g.n_edges = self.n_edges
        g.triangle_sum = self.triangle_sum
        g.sq_degree_sum = self.sq_degree_sum
        g.max_degree = self.max_degree
        g.n_wired = self.n_wired
        g.singletons = self.singletons.copy()
        g.doubletons = self.doubletons.copy()
        g._pfp = {k: v.copy() for k, v in self._pfp.items()}
        g._since_resync = self._since_resync
        return g

    def fingerprint(self) -> str:
        """Hash of node count, sorted edge set and recency log."""
        h = hashlib.sha256()
        h.update(f"n={self.n_nodes};".encode())
        for a, b in sorted(self.edges()):
            h.update(f"{a},{b};".encode())
        h.update(("r=" + ",".join(map(str, self.recency))).encode())
        return h.hexdigest()

    def __repr__(self) -> str:
        return f"EvolvingGraph(nodes={self.n_nodes}, edges={self.n_edges})"
