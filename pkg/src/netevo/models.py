"""Inner-model components, mixture specs and selection probabilities.

A :class:`ModelSpec` is a convex combination of :class:`Component` terms.
Each component assigns a node an unnormalised weight; normalisers come from
running sums on :class:`~netevo.graph.EvolvingGraph` so a probability query
costs O(terms + |excluded|).

Internal edges are chosen by two node draws from the same spec: the first
among nodes that still have a legal partner, the second excluding the first
node and its neighbours. The unordered edge probability sums both orders.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    BadWeights,
    DuplicateComponent,
    DuplicateEdge,
    EmptyChoiceSet,
    SelfLoop,
    SpecSyntaxError,
    UnknownNode,
)
from .graph import EvolvingGraph, pfp_weight

NULL = "null"
DEGREE = "degree"
TRIANGLE = "triangle"
SINGLETON = "singleton"
DOUBLETON = "doubleton"
RECENT = "recent"
PFP = "pfp"

KINDS = (NULL, DEGREE, TRIANGLE, SINGLETON, DOUBLETON, RECENT, PFP)
PARAMETRIC = (RECENT, PFP)

WEIGHT_TOL = 1e-9


@dataclass(frozen=True, order=True)
class Component:
    kind: str
    param: float | int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecSyntaxError(f"unknown component {self.kind!r}")
        if self.kind == RECENT:
            if self.param is None or int(self.param) != self.param or self.param < 1:
                raise SpecSyntaxError(f"recent window must be a positive integer, got {self.param!r}")
            object.__setattr__(self, "param", int(self.param))
        elif self.kind == PFP:
            if self.param is None or not math.isfinite(float(self.param)):
                raise SpecSyntaxError(f"pfp delta must be finite, got {self.param!r}")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise SpecSyntaxError(f"{self.kind} takes no parameter")

    def __str__(self) -> str:
        if self.kind == RECENT:
            return f"recent({self.param})"
        if self.kind == PFP:
            return f"pfp({self.param!r})"
        return self.kind


def null() -> Component:
    return Component(NULL)


def degree() -> Component:
    return Component(DEGREE)


def triangle() -> Component:
    return Component(TRIANGLE)


def singleton() -> Component:
    return Component(SINGLETON)


def doubleton() -> Component:
    return Component(DOUBLETON)


def recent(window: int) -> Component:
    return Component(RECENT, window)


def pfp(delta: float) -> Component:
    return Component(PFP, delta)


def validate_spec(terms) -> None:
    """Raise unless ``terms`` form a valid mixture.

    Accepts a :class:`ModelSpec` or a sequence of ``(beta, component)`` pairs.
    """
    if isinstance(terms, ModelSpec):
        terms = terms.terms
    terms = list(terms)
    if not terms:
        raise BadWeights("a spec needs at least one term")
    seen = set()
    for beta, comp in terms:
        if not (0.0 <= beta <= 1.0) or math.isnan(beta):
            raise BadWeights(f"weight {beta} of {comp} outside [0, 1]")
        if comp in seen:
            raise DuplicateComponent(f"{comp} appears twice")
        seen.add(comp)
    total = math.fsum(b for b, _ in terms)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise BadWeights(f"weights sum to {total!r}, not 1")


@dataclass(frozen=True)
class ModelSpec:
    terms: tuple[tuple[float, Component], ...]

    def __post_init__(self):
        terms = tuple((float(b), c) for b, c in self.terms)
        object.__setattr__(self, "terms", terms)
        validate_spec(terms)

    @classmethod
    def pure(cls, comp: Component) -> "ModelSpec":
        return cls(((1.0, comp),))

    @classmethod
    def mixture(cls, pairs: Iterable[tuple[float, Component]]) -> "ModelSpec":
        return cls(tuple(pairs))

    @property
    def components(self) -> tuple[Component, ...]:
        return tuple(c for _, c in self.terms)

    @property
    def betas(self) -> tuple[float, ...]:
        return tuple(b for b, _ in self.terms)

    def n_free_params(self) -> int:
        """Free mixture weights plus one per pfp delta or recent window."""
        return len(self.terms) - 1 + sum(c.kind in PARAMETRIC for c in self.components)

    def format(self, digits: int | None = None) -> str:
        if len(self.terms) == 1 and self.terms[0][0] == 1.0:
            return str(self.terms[0][1])
        parts = []
        for b, c in self.terms:
            w = repr(b) if digits is None else f"{b:.{digits}g}"
            parts.append(f"{w}*{c}")
        return " + ".join(parts)

    def __str__(self) -> str:
        return self.format()


NULL_SPEC = ModelSpec.pure(null())

_TERM = re.compile(
    r"^(?:(?P<w>[0-9eE.+-]+)\s*\*)?\s*(?P<name>[a-zA-Z_]+)\s*(?:\(\s*(?P<arg>[^()]*?)\s*\))?$"
)


# '+' between terms, but not the sign of an exponent such as 1e+3
_PLUS = re.compile(r"(?<![0-9.][eE])\+")


def _split_terms(text: str) -> list[str]:
    return [p.strip() for p in _PLUS.split(text)]


def parse_component(text: str) -> Component:
    m = _TERM.match(text.strip())
    if not m or m.group("w"):
        raise SpecSyntaxError(f"cannot parse component {text!r}")
    return _component(m.group("name"), m.group("arg"), text)


def _component(name: str, arg: str | None, text: str) -> Component:
    name = name.lower()
    if name not in KINDS:
        raise SpecSyntaxError(f"unknown component {name!r} in {text!r}")
    if name in PARAMETRIC:
        if not arg:
            raise SpecSyntaxError(f"{name} needs a parameter in {text!r}")
        try:
            value = int(arg) if name == RECENT else float(arg)
        except ValueError:
            raise SpecSyntaxError(f"bad parameter {arg!r} in {text!r}") from None
        return Component(name, value)
    if arg:
        raise SpecSyntaxError(f"{name} takes no parameter in {text!r}")
    return Component(name)


def parse_spec(text: str) -> ModelSpec:
    """Parse the textual form, e.g. ``0.5*degree + 0.4*pfp(0.05) + 0.1*singleton``."""
    chunks = _split_terms(text)
    if not chunks or any(not c for c in chunks):
        raise SpecSyntaxError(f"empty term in {text!r}")
    terms = []
    for chunk in chunks:
        m = _TERM.match(chunk)
        if not m:
            raise SpecSyntaxError(f"cannot parse term {chunk!r}")
        comp = _component(m.group("name"), m.group("arg"), chunk)
        if m.group("w") is None:
            if len(chunks) > 1:
                raise SpecSyntaxError(f"term {chunk!r} needs an explicit weight")
            w = 1.0
        else:
            try:
                w = float(m.group("w"))
            except ValueError:
                raise SpecSyntaxError(f"bad weight in {chunk!r}") from None
        terms.append((w, comp))
    return ModelSpec(tuple(terms))


# -- weights and normalisers ---------------------------------------------------


def component_weight(c: Component, node: int, g: EvolvingGraph) -> float:
    """Unnormalised weight the component gives ``node`` in the current state."""
    if node not in g:
        raise UnknownNode(f"unknown node {node!r}")
    return _weight(c, g, node, g.recent_set(c.param) if c.kind == RECENT else None)


def _weight(c: Component, g: EvolvingGraph, node: int, support) -> float:
    kind = c.kind
    if kind == DEGREE:
        return float(g.degree[node])
    if kind == PFP:
        return g.pfp_total(c.param).weight(g.degree[node])
    if kind == NULL:
        return 1.0
    if kind == SINGLETON:
        return 1.0 if g.degree[node] == 1 else 0.0
    if kind == DOUBLETON:
        return 1.0 if g.degree[node] == 2 else 0.0
    if kind == RECENT:
        return 1.0 if node in support else 0.0
    return float(g.triangles[node])


def component_total(c: Component, g: EvolvingGraph) -> float:
    """Normaliser of the component over every node, from the running sums."""
    kind = c.kind
    if kind == DEGREE:
        return float(2 * g.n_edges)
    if kind == PFP:
        return g.pfp_total(c.param).total
    if kind == NULL:
        return float(g.n_nodes)
    if kind == SINGLETON:
        return float(len(g.singletons))
    if kind == DOUBLETON:
        return float(len(g.doubletons))
    if kind == RECENT:
        return float(len(g.recent_set(c.param)))
    return float(g.triangle_sum)


def _support_size(c: Component, g: EvolvingGraph, support, excluded) -> int:
    """Number of non-excluded nodes with positive weight."""
    kind = c.kind
    if kind == NULL:
        return g.n_nodes - len(excluded)
    if kind in (DEGREE, PFP):
        return g.n_wired - sum(1 for x in excluded if g.degree[x] > 0)
    if kind == SINGLETON:
        return len(g.singletons) - sum(1 for x in excluded if g.degree[x] == 1)
    if kind == DOUBLETON:
        return len(g.doubletons) - sum(1 for x in excluded if g.degree[x] == 2)
    if kind == RECENT:
        return len(support) - sum(1 for x in excluded if x in support)
    return -1  # triangle: decided from the integer normaliser


@dataclass
class ActiveTerm:
    beta: float  # renormalised over surviving terms
    comp: Component
    z: float  # normaliser over the choice set
    support: set | None = None


class ChoiceDistribution:
    """Selection law of a spec over the nodes of ``g`` minus ``excluded``.

    Terms whose support is empty on the choice set are dropped and the
    remaining weights renormalised; with no surviving term the law falls
    back to uniform.
    """

    def __init__(self, spec: ModelSpec, g: EvolvingGraph, excluded: Iterable[int] = ()):
        self.spec = spec
        self.g = g
        self.excluded = excluded if isinstance(excluded, (set, frozenset)) else set(excluded)
        for x in self.excluded:
            if x not in g:
                raise UnknownNode(f"unknown node {x!r}")
        self.size = g.n_nodes - len(self.excluded)
        if self.size <= 0:
            raise EmptyChoiceSet("no node left to choose from")
        terms = []
        for beta, c in spec.terms:
            if beta <= 0.0:
                continue
            support = g.recent_set(c.param) if c.kind == RECENT else None
            z = _normaliser(c, g, support, self.excluded)
            if z > 0.0:
                terms.append(ActiveTerm(beta, c, z, support))
        total = math.fsum(t.beta for t in terms)
        for t in terms:
            t.beta /= total
        self.terms = terms

    @property
    def uniform_fallback(self) -> bool:
        return not self.terms

    def prob(self, node: int) -> float:
        if node in self.excluded:
            return 0.0
        if not self.terms:
            return 1.0 / self.size
        g = self.g
        p = 0.0
        for t in self.terms:
            w = _weight(t.comp, g, node, t.support)
            if w:
                p += t.beta * w / t.z
        return p

    def probs(self) -> list[float]:
        """Probability of every node, by id (excluded nodes get 0)."""
        return [self.prob(i) for i in range(self.g.n_nodes)]


def _normaliser(c: Component, g: EvolvingGraph, support, excluded) -> float:
    kind = c.kind
    if kind == NULL:
        return float(g.n_nodes - len(excluded))
    if kind == TRIANGLE:
        tri = g.triangles
        return float(g.triangle_sum - sum(tri[x] for x in excluded))
    if _support_size(c, g, support, excluded) <= 0:
        return 0.0
    total = component_total(c, g)
    if not excluded:
        return total
    removed = math.fsum(_weight(c, g, x, support) for x in excluded)
    z = total - removed
    if kind == PFP and z <= WEIGHT_TOL * total:
        # cancellation: recompute over the choice set directly
        z = math.fsum(_weight(c, g, i, None) for i in range(g.n_nodes) if i not in excluded)
    return z


def node_probability(
    spec: ModelSpec, node: int, g: EvolvingGraph, excluded: Iterable[int] = ()
) -> float:
    """Probability that ``spec`` picks ``node`` among all nodes minus ``excluded``."""
    if node not in g:
        raise UnknownNode(f"unknown node {node!r}")
    return ChoiceDistribution(spec, g, excluded).prob(node)


def partner_exclusion(g: EvolvingGraph, a: int) -> set[int]:
    """Nodes that cannot be the second endpoint once ``a`` is drawn."""
    ex = set(g.adj[a])
    ex.add(a)
    return ex


def edge_probability(
    spec: ModelSpec, a: int, b: int, g: EvolvingGraph, ordered: bool = False
) -> float:
    """Probability of the internal edge {a, b} under two sequential draws.

    With ``ordered=True`` only the draw order a-then-b counts.
    """
    if a not in g or b not in g:
        raise UnknownNode(f"unknown node in ({a!r}, {b!r})")
    if a == b:
        raise SelfLoop(f"self-loop on node {a}")
    if g.has_edge(a, b):
        raise DuplicateEdge(f"edge ({a}, {b}) already present")
    first = ChoiceDistribution(spec, g, g.saturated())
    p = first.prob(a) * ChoiceDistribution(spec, g, partner_exclusion(g, a)).prob(b)
    if not ordered:
        p += first.prob(b) * ChoiceDistribution(spec, g, partner_exclusion(g, b)).prob(a)
    return p


# -- oracles' view of the running sums ----------------------------------------


@dataclass
class WeightSums:
    n_nodes: int
    degree_sum: float
    triangle_sum: float
    singletons: int
    doubletons: int
    recent: dict[int, int] = field(default_factory=dict)
    pfp: dict[float, float] = field(default_factory=dict)

    @classmethod
    def running(cls, g: EvolvingGraph, deltas: Sequence[float] = (), windows: Sequence[int] = ()):
        """Read the incrementally maintained sums."""
        return cls(
            n_nodes=g.n_nodes,
            degree_sum=float(2 * g.n_edges),
            triangle_sum=float(g.triangle_sum),
            singletons=len(g.singletons),
            doubletons=len(g.doubletons),
            recent={w: len(g.recent_set(w)) for w in windows},
            pfp={d: g.pfp_total(d).total for d in deltas},
        )

    @classmethod
    def brute_force(cls, g: EvolvingGraph, deltas: Sequence[float] = (), windows: Sequence[int] = ()):
        """Recompute every sum from adjacency alone (no maintained counters)."""
        degs = [len(nbrs) for nbrs in g.adj]
        tri = []
        for i, nbrs in enumerate(g.adj):
            nb = sorted(nbrs)
            tri.append(sum(1 for x in range(len(nb)) for y in range(x + 1, len(nb)) if nb[y] in g.adj[nb[x]]))
        log = g.recency
        return cls(
            n_nodes=len(degs),
            degree_sum=float(sum(degs)),
            triangle_sum=float(sum(tri)),
            singletons=sum(d == 1 for d in degs),
            doubletons=sum(d == 2 for d in degs),
            recent={w: len(set(log[max(0, len(log) - w):])) for w in windows},
            pfp={dl: math.fsum(pfp_weight(d, dl) for d in degs) for dl in deltas},
        )
