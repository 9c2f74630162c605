"""Sequence likelihood of an observed growth history under a pair of specs.

Every event is scored against the graph state *before* it is applied; the
uniform (null) model is scored over exactly the same choice sets, which
gives the per-choice likelihood ratio

    c0 = exp((logL - logL_null) / t)

where ``t`` counts one choice per new-node target and one per internal edge.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import IncomparableReports
from .events import EdgeEvent, NewNode, check_event
from .graph import EvolvingGraph
from .models import NULL_SPEC, ChoiceDistribution, ModelSpec, null, partner_exclusion
from .steps import StepTable, collect_steps, edge_step_probs, node_step_probs

NEW_NODE = "new_node"
INTERNAL = "internal"

CSV_FIELDS = ("spec_new", "spec_int", "logL", "nullLogL", "t", "c0", "deviance", "aic", "zeroEvents")


@dataclass(frozen=True)
class SpecPair:
    new_node: ModelSpec
    internal: ModelSpec

    @classmethod
    def same(cls, spec: ModelSpec) -> "SpecPair":
        return cls(spec, spec)

    def n_free_params(self) -> int:
        return self.new_node.n_free_params() + self.internal.n_free_params()


def as_pair(specs) -> SpecPair:
    if isinstance(specs, SpecPair):
        return specs
    if isinstance(specs, ModelSpec):
        return SpecPair.same(specs)
    new, internal = specs
    return SpecPair(new, internal)


@dataclass
class LikelihoodReport:
    spec_new: str
    spec_int: str
    log_likelihood: float
    null_log_likelihood: float
    t: int
    c0: float
    deviance: float
    aic: float
    k: int
    zero_probability_events: list[int] = field(default_factory=list)
    stream_hash: str = ""
    role: str = "both"

    @classmethod
    def build(cls, pair: SpecPair, logl, null_logl, t, zeros, digest, role="both"):
        if role == NEW_NODE:
            k = pair.new_node.n_free_params()
        elif role == INTERNAL:
            k = pair.internal.n_free_params()
        else:
            k = pair.n_free_params()
        if zeros:
            c0 = 0.0
        elif t == 0:
            c0 = math.nan
        else:
            c0 = math.exp((logl - null_logl) / t)
        return cls(
            spec_new=str(pair.new_node),
            spec_int=str(pair.internal),
            log_likelihood=logl,
            null_log_likelihood=null_logl,
            t=t,
            c0=c0,
            deviance=-2.0 * logl,
            aic=2.0 * k - 2.0 * logl,
            k=k,
            zero_probability_events=list(zeros),
            stream_hash=digest,
            role=role,
        )

    def to_keyvalue(self) -> str:
        rows = [
            ("spec_new", self.spec_new),
            ("spec_int", self.spec_int),
            ("role", self.role),
            ("logL", repr(self.log_likelihood)),
            ("nullLogL", repr(self.null_log_likelihood)),
            ("t", str(self.t)),
            ("c0", repr(self.c0)),
            ("deviance", repr(self.deviance)),
            ("aic", repr(self.aic)),
            ("aic_k", str(self.k)),
            ("zeroEvents", ";".join(map(str, self.zero_probability_events))),
            ("stream", self.stream_hash),
            ("t_convention", "one choice per new-node target, one per internal edge"),
        ]
        return "".join(f"{k}={v}\n" for k, v in rows)

    def csv_row(self) -> list[str]:
        return [
            self.spec_new,
            self.spec_int,
            repr(self.log_likelihood),
            repr(self.null_log_likelihood),
            str(self.t),
            repr(self.c0),
            repr(self.deviance),
            repr(self.aic),
            ";".join(map(str, self.zero_probability_events)),
        ]


def reports_to_csv(reports: Iterable[LikelihoodReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else -math.inf


def _edge_prob(spec, g, a, b, sat, ex_a, ex_b, ordered) -> float:
    first = ChoiceDistribution(spec, g, sat)
    p = first.prob(a) * ChoiceDistribution(spec, g, ex_a).prob(b)
    if not ordered:
        p += first.prob(b) * ChoiceDistribution(spec, g, ex_b).prob(a)
    return p


def step_log_likelihood(specs, g: EvolvingGraph, ev: EdgeEvent, ordered: bool = False) -> tuple[float, int]:
    """Log-probability of one event under ``specs`` and its number of choices.

    ``g`` is not modified. A zero-probability event returns ``-inf``.
    """
    pair = as_pair(specs)
    check_event(g, ev)
    if isinstance(ev, NewNode):
        excluded: set[int] = set()
        total = 0.0
        for tgt in ev.targets:
            total += _log(ChoiceDistribution(pair.new_node, g, excluded).prob(tgt))
            excluded.add(tgt)
        return total, len(ev.targets)
    sat = g.saturated()
    p = _edge_prob(
        pair.internal, g, ev.a, ev.b, sat, partner_exclusion(g, ev.a), partner_exclusion(g, ev.b), ordered
    )
    return _log(p), 1


def score_many(
    specs: Sequence,
    g0: EvolvingGraph,
    events: Sequence[EdgeEvent],
    ordered: bool = False,
    role: str | None = None,
) -> list[LikelihoodReport]:
    """Score several spec pairs in a single replay of ``events`` from ``g0``.

    ``role`` restricts the count to new-node choices or internal edges only.
    ``g0`` itself is left untouched.
    """
    pairs = [as_pair(s) for s in specs]
    comps = []
    for pair in pairs:
        if role in (None, NEW_NODE):
            comps.extend(pair.new_node.components)
        if role in (None, INTERNAL):
            comps.extend(pair.internal.components)
    table = collect_steps(g0, events, comps, ordered=ordered, role=role)
    return [report_from_table(table, pair, role) for pair in pairs]


def report_from_table(table: StepTable, pair: SpecPair, role: str | None = None) -> LikelihoodReport:
    """Likelihood report for ``pair`` from a cached step table."""
    null_col = table.index[null()]
    parts, null_parts, idx = [], [], []
    if role in (None, NEW_NODE):
        parts.append(node_step_probs(table, pair.new_node))
        null_parts.append(table.node_q[:, null_col])
        idx.append(table.node_event)
    if role in (None, INTERNAL):
        parts.append(edge_step_probs(table, pair.internal))
        null_parts.append(edge_step_probs(table, NULL_SPEC))
        idx.append(table.edge_event)
    p = np.concatenate(parts) if parts else np.zeros(0)
    p_null = np.concatenate(null_parts) if null_parts else np.zeros(0)
    events = np.concatenate(idx) if idx else np.zeros(0, dtype=np.int64)
    zero = p <= 0.0
    with np.errstate(divide="ignore"):
        logl = float(np.sum(np.log(p))) if not zero.any() else -math.inf
    null_logl = float(np.sum(np.log(p_null)))
    zeros = sorted({int(i) for i in events[zero]})
    return LikelihoodReport.build(pair, logl, null_logl, len(p), zeros, table.digest, role or "both")


def sequence_log_likelihood(
    specs, g0: EvolvingGraph, events: Sequence[EdgeEvent], ordered: bool = False, role: str | None = None
) -> LikelihoodReport:
    """Exact log-likelihood of the whole stream, with null baseline and c0."""
    return score_many([specs], g0, events, ordered=ordered, role=role)[0]


@dataclass
class Ranking:
    order: list[LikelihoodReport]
    ratios: dict[tuple[int, int], float]  # c0 of order[i] over c0 of order[j]

    def best(self) -> LikelihoodReport:
        return self.order[0]


def compare(reports: Sequence[LikelihoodReport]) -> Ranking:
    """Rank reports over the same stream by c0, best first."""
    if not reports:
        raise IncomparableReports("nothing to compare")
    first = reports[0]
    for r in reports[1:]:
        if r.t != first.t or r.stream_hash != first.stream_hash or r.role != first.role:
            raise IncomparableReports(
                f"reports cover different streams ({first.stream_hash}/{first.t} vs {r.stream_hash}/{r.t})"
            )
    order = sorted(reports, key=lambda r: -r.c0 if not math.isnan(r.c0) else math.inf)
    ratios = {}
    for i, ri in enumerate(order):
        for j, rj in enumerate(order):
            ratios[i, j] = ri.c0 / rj.c0 if rj.c0 > 0 else math.inf
    return Ranking(order, ratios)
