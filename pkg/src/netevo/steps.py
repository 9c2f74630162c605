"""Per-step probabilities of the observed choices under pure components.

One replay of a stream yields, for every choice step and every probed
component, the probability that the component alone assigns to the node
actually chosen (``q``) and whether the component had empty support on that
step's choice set. Mixture likelihoods for any weights then reduce to array
arithmetic, which is what both scoring and weight fitting need.

Most features are computed without a sequential replay. A node's degree at
any step is its initial degree plus the number of its earlier appearances as
an edge endpoint; graph-wide counters are cumulative sums over those
increments, and PFP normalisers are cumulative sums of weight changes.
Recency windows come from a predecessor search over the selection log. Only
neighbourhood exclusions (internal edges) and triangle counts need the graph
itself, and only those are computed in a Python loop.

New-node steps: one row per target, the choice set being all existing nodes
minus the event's earlier targets.

Internal-edge steps: one row per edge for each of the four factors of the
two-draw mechanism: P(a) and P(b) for the first draw (nodes with a free
partner), P(b | a) and P(a | b) for the second draw (excluding the first
node and its neighbours).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import MalformedStream
from .events import EdgeEvent, flat_hash, flatten, replay
from .graph import EvolvingGraph
from .models import DEGREE, DOUBLETON, NULL, PFP, RECENT, SINGLETON, TRIANGLE, Component, null

PFP_CHUNK = 32  # deltas per cumulative-sum pass
SCALAR_PFP = 4  # up to this many deltas, sum excluded weights with plain Python
HUB_DEGREE = 128  # above this degree, a node's neighbourhood sums are kept incrementally


@dataclass
class StepTable:
    """Cached per-step component probabilities for one stream.

    Node arrays are (steps x components); edge arrays likewise. ``*_empty``
    marks steps where a component had no support on the relevant choice set.
    """

    components: list[Component]
    node_q: np.ndarray
    node_empty: np.ndarray
    node_event: np.ndarray
    edge_qa: np.ndarray
    edge_qb: np.ndarray
    edge_rab: np.ndarray
    edge_rba: np.ndarray
    edge_empty_first: np.ndarray
    edge_empty_a: np.ndarray
    edge_empty_b: np.ndarray
    edge_event: np.ndarray
    ordered: bool = False
    digest: str = ""
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {c: i for i, c in enumerate(self.components)}

    @property
    def n_node_steps(self) -> int:
        return len(self.node_event)

    @property
    def n_edge_steps(self) -> int:
        return len(self.edge_event)

    def columns(self, comps: Sequence[Component]) -> list[int]:
        return [self.index[c] for c in comps]


def _mix(q, empty, cols, betas, null_q):
    """Renormalised mixture probability per row."""
    if len(cols) == 1:
        col = cols[0]
        return np.where(empty[:, col], null_q, q[:, col])
    b = np.asarray(betas, dtype=float)
    num = q[:, cols] @ b
    den = (~empty[:, cols]) @ b
    out = null_q.copy()
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def node_step_probs(table: StepTable, spec) -> np.ndarray:
    """Mixture probability of every observed new-node choice."""
    null_q = table.node_q[:, table.index[null()]]
    return _mix(table.node_q, table.node_empty, table.columns(spec.components), spec.betas, null_q)


def edge_step_probs(table: StepTable, spec) -> np.ndarray:
    """Mixture probability of every observed internal edge."""
    cols = table.columns(spec.components)
    n = table.index[null()]
    pa = _mix(table.edge_qa, table.edge_empty_first, cols, spec.betas, table.edge_qa[:, n])
    rb = _mix(table.edge_rab, table.edge_empty_a, cols, spec.betas, table.edge_rab[:, n])
    p = pa * rb
    if not table.ordered:
        pb = _mix(table.edge_qb, table.edge_empty_first, cols, spec.betas, table.edge_qb[:, n])
        ra = _mix(table.edge_rba, table.edge_empty_b, cols, spec.betas, table.edge_rba[:, n])
        p = p + pb * ra
    return p


def pfp_table(deltas: np.ndarray, top: int) -> np.ndarray:
    """Weights ``d ** (1 + delta log10 d)`` for d = 0..top (rows) and every delta."""
    d = np.arange(top + 1, dtype=float)[:, None]
    w = d ** (1.0 + np.asarray(deltas, dtype=float)[None, :] * np.log10(np.maximum(d, 1.0)))
    w[0] = 0.0
    if top >= 1:
        w[1] = 1.0
    return w


@dataclass
class _Rows:
    """Feature columns for one family of factor rows (all int64 unless noted)."""

    node: np.ndarray
    deg: np.ndarray
    event: np.ndarray  # position in the stream
    inc: np.ndarray  # endpoint increments before the event
    n: np.ndarray
    edges: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    wired: np.ndarray
    ex: np.ndarray  # (rows x 6): count, degree sum, #deg1, #deg2, triangles, #wired
    tri: np.ndarray | None = None
    trisum: np.ndarray | None = None
    rec_member: np.ndarray | None = None  # (rows x windows)
    rec_size: np.ndarray | None = None
    rec_hits: np.ndarray | None = None
    pfp_ex: np.ndarray | None = None  # (rows x deltas) float


def _excl_prefix(j, value):
    """Sum of ``value`` over the earlier rows of the same event, row by row."""
    out = np.zeros(value.shape, dtype=value.dtype)
    if len(j) == 0:
        return out
    order = np.argsort(j, kind="stable")
    bounds = np.searchsorted(j[order], np.arange(1, int(j.max()) + 2))
    for step in range(1, len(bounds)):
        rows = order[bounds[step - 1] : bounds[step]]
        out[rows] = out[rows - 1] + value[rows - 1]
    return out


def collect_steps(
    g0: EvolvingGraph,
    events: Sequence[EdgeEvent],
    components: Sequence[Component],
    ordered: bool = False,
    role: str | None = None,
) -> StepTable:
    """Replay ``events`` from ``g0`` and cache every component's probability
    of each observed choice. The null component is always probed; ``g0`` is
    not modified."""
    comps = [null()] + [c for c in dict.fromkeys(components) if c != null()]
    fixed = [c for c in comps if c.kind != PFP]
    pfps = [c for c in comps if c.kind == PFP]
    deltas = np.array([c.param for c in pfps], dtype=float)
    windows = sorted({c.param for c in comps if c.kind == RECENT})
    track_tri = any(c.kind == TRIANGLE for c in comps)
    want_node = role in (None, "new_node")
    want_edge = role in (None, "internal")

    ks, ends = flatten(events)
    n_ev = len(ks)
    k = np.asarray(ks, dtype=np.int64)
    sel = np.asarray(ends, dtype=np.int64)
    n0 = g0.n_nodes
    is_new = k > 0
    new_before = np.cumsum(is_new) - is_new
    n_at = n0 + new_before  # nodes before each event
    n_edge_ev = np.where(is_new, k, 1)
    edge_start = np.cumsum(n_edge_ev) - n_edge_ev
    n_sel = np.where(is_new, k, 2)
    sel_start = np.cumsum(n_sel) - n_sel
    m = int(n_edge_ev.sum())
    ee = np.repeat(np.arange(n_ev), n_edge_ev)
    sel_ev = np.repeat(np.arange(n_ev), n_sel)
    new_edge = is_new[ee]
    internal = np.flatnonzero(~is_new)
    ia = sel_start[internal]
    U = np.empty(m, dtype=np.int64)
    V = np.empty(m, dtype=np.int64)
    U[new_edge] = n_at[ee[new_edge]]
    V[new_edge] = sel[is_new[sel_ev]]
    U[~new_edge] = sel[ia]
    V[~new_edge] = sel[ia + 1]
    _validate(g0, events, n_at, sel, sel_ev, internal, ia, U, V, ee)

    # degree of each endpoint just before its increment
    X = np.empty(2 * m, dtype=np.int64)
    X[0::2] = U
    X[1::2] = V
    n_total = n0 + int(is_new.sum())
    deg0 = np.zeros(n_total, dtype=np.int64)
    deg0[:n0] = g0.degree
    order = np.argsort(X, kind="stable")
    xs = X[order]
    pos = np.arange(2 * m)
    first = np.ones(2 * m, dtype=bool)
    first[1:] = xs[1:] != xs[:-1]
    occ = np.empty(2 * m, dtype=np.int64)
    occ[order] = pos - np.maximum.accumulate(np.where(first, pos, 0))
    d_old = deg0[X] + occ

    def cum(start, steps):
        return np.concatenate(([start], start + np.cumsum(steps)))

    n1_c = cum(len(g0.singletons), (d_old == 0).astype(np.int64) - (d_old == 1))
    n2_c = cum(len(g0.doubletons), (d_old == 1).astype(np.int64) - (d_old == 2))
    w_c = cum(g0.n_wired, (d_old == 0).astype(np.int64))
    inc_at = 2 * edge_start
    maxdeg_at = np.maximum.accumulate(np.concatenate(([g0.max_degree], d_old + 1)))[inc_at]
    sat_possible = (maxdeg_at >= n_at - 1) & (n_at >= 2)
    top_degree = max(int(d_old.max()) + 1 if m else 0, g0.max_degree, 1)

    wtab = ptot = None
    if len(deltas):
        wtab = pfp_table(deltas, top_degree)
        ptot = _pfp_cumulative(wtab, deg0[:n0], d_old)

    rec0 = list(g0.recency)
    log = np.concatenate((np.asarray(rec0, dtype=np.int64), sel))
    rec_pos = len(rec0) + sel_start  # selection-log length before each event
    nxt = _next_occurrence(log) if windows else None

    loop = _replay_loop(
        g0, ks, ends, sel_start.tolist(), rec_pos.tolist(), rec0 + ends, sat_possible.tolist(),
        windows, track_tri, want_edge, ordered, wtab,
        {"deg": any(c.kind == DEGREE for c in comps), "d12": any(c.kind in (SINGLETON, DOUBLETON) for c in comps)},
    )

    def state(rows: _Rows, ev_idx):
        rows.inc = inc_at[ev_idx]
        rows.n = n_at[ev_idx]
        rows.edges = g0.n_edges + edge_start[ev_idx]
        rows.n1 = n1_c[rows.inc]
        rows.n2 = n2_c[rows.inc]
        rows.wired = w_c[rows.inc]
        if track_tri:
            rows.trisum = np.asarray(loop.trisum, dtype=np.int64)[ev_idx]

    def recency(rows: _Rows, ev_idx):
        if not windows:
            return
        p = rec_pos[ev_idx]
        last = _last_before(log, rows.node, p)
        rows.rec_member = np.stack([(last >= 0) & (last >= p - w) for w in windows], axis=1).astype(np.int64)
        sizes = []
        for w in windows:
            s = np.zeros(len(p), dtype=np.int64)
            for i in range(1, w + 1):
                j = p - i
                ok = j >= 0
                s += ok & (nxt[np.maximum(j, 0)] >= p)
            sizes.append(s)
        rows.rec_size = np.stack(sizes, axis=1)

    empty_ex = lambda n: np.zeros((n, 6), dtype=np.int64)  # noqa: E731
    tables = {}
    orig = np.fromiter(
        (ev.original_index if ev.original_index >= 0 else i for i, ev in enumerate(events)), dtype=np.int64, count=n_ev
    )

    if want_node:
        ei = np.flatnonzero(new_edge)
        ev_idx = ee[ei]
        j = ei - edge_start[ev_idx]
        rows = _Rows(node=V[ei], deg=d_old[2 * ei + 1], event=orig[ev_idx], inc=None, n=None, edges=None,
                     n1=None, n2=None, wired=None, ex=empty_ex(len(ei)))
        state(rows, ev_idx)
        if track_tri:
            rows.tri = np.asarray(loop.tri_targets, dtype=np.int64)
        recency(rows, ev_idx)
        d = rows.deg
        own = np.stack(
            [np.ones_like(d), d, d == 1, d == 2, rows.tri if track_tri else np.zeros_like(d), d > 0], axis=1
        ).astype(np.int64)
        rows.ex = _excl_prefix(j, own)
        if windows:
            rows.rec_hits = _excl_prefix(j, rows.rec_member)
        if wtab is not None:
            rows.pfp_ex = _excl_prefix(j, wtab[d])
        tables["node"] = _probabilities(rows, fixed, windows, wtab, ptot, len(comps))
        tables["node_event"] = rows.event

    if want_edge:
        ev_idx = internal
        ei = edge_start[internal]
        ends_ab = ((U[ei], d_old[2 * ei]), (V[ei], d_old[2 * ei + 1]))
        ctx = loop.contexts  # 0: saturated, 1: excluding a, 2: excluding b
        slots = ((0, 0), (1, 0), (1, 1), (0, 2))
        out = []
        for slot, (e, c) in enumerate(slots):
            if ordered and slot in (1, 3):
                out.append(None)
                continue
            node, deg = ends_ab[e]
            rows = _Rows(node=node, deg=deg, event=orig[ev_idx], inc=None, n=None, edges=None,
                         n1=None, n2=None, wired=None, ex=ctx[c].ex)
            state(rows, ev_idx)
            if track_tri:
                rows.tri = np.asarray(loop.tri_ends[e], dtype=np.int64)
            recency(rows, ev_idx)
            rows.rec_hits = ctx[c].hits
            rows.pfp_ex = ctx[c].pfp
            out.append(_probabilities(rows, fixed, windows, wtab, ptot, len(comps)))
        tables["edge"] = out

    n_cols = len(comps)
    blank = (np.zeros((0, n_cols)), np.zeros((0, n_cols), dtype=bool))
    node_q, node_empty = tables.get("node", blank)
    edge = tables.get("edge", [blank, None, blank, None])
    qa, e_first = edge[0]
    rab, e_a = edge[2]
    if ordered or edge[1] is None:
        qb, rba, e_b = np.zeros_like(qa), np.zeros_like(qa), np.zeros_like(e_first)
    else:
        qb, _ = edge[1]
        rba, e_b = edge[3]
    return StepTable(
        components=fixed + pfps,
        node_q=node_q,
        node_empty=node_empty,
        node_event=tables.get("node_event", np.zeros(0, dtype=np.int64)),
        edge_qa=qa,
        edge_qb=qb,
        edge_rab=rab,
        edge_rba=rba,
        edge_empty_first=e_first,
        edge_empty_a=e_a,
        edge_empty_b=e_b,
        edge_event=orig[internal] if want_edge else np.zeros(0, dtype=np.int64),
        ordered=ordered,
        digest=flat_hash(ks, ends, g0),
    )


def _validate(g0, events, n_at, sel, sel_ev, internal, ia, U, V, ee):
    """Vectorised legality checks; on failure a sequential replay pinpoints
    the first offending event and its reason."""
    bad = np.zeros(len(n_at), dtype=bool)
    bad[sel_ev[(sel < 0) | (sel >= n_at[sel_ev])]] = True
    bad[internal[sel[ia] == sel[ia + 1]]] = True
    if not bad.any() and len(U):
        span = int(max(n_at[-1] + 1, U.max() + 1, V.max() + 1))
        keys = np.minimum(U, V) * span + np.maximum(U, V)
        old = np.fromiter((min(a, b) * span + max(a, b) for a, b in g0.edges()), dtype=np.int64)
        allk = np.concatenate((old, keys))
        order = np.argsort(allk, kind="stable")
        dup = np.zeros(len(allk), dtype=bool)
        dup[order[1:]] = allk[order[1:]] == allk[order[:-1]]
        bad[ee[dup[len(old):]]] = True
    if bad.any():
        first = int(np.flatnonzero(bad)[0])
        replay(events[: first + 1], g0.copy())
        raise MalformedStream(first, "illegal event")


def _pfp_cumulative(wtab, deg0, d_old):
    """PFP totals after k endpoint increments, k = 0..len(d_old), for every delta."""
    base = wtab[deg0].sum(axis=0)
    out = np.empty((len(d_old) + 1, wtab.shape[1]))
    out[0] = base
    for lo in range(0, wtab.shape[1], PFP_CHUNK):
        hi = lo + PFP_CHUNK
        dw = wtab[d_old + 1, lo:hi] - wtab[d_old, lo:hi]
        np.cumsum(dw, axis=0, out=out[1:, lo:hi])
        out[1:, lo:hi] += base[lo:hi]
    return out


def _last_before(log, nodes, p):
    """Largest position < p where ``log`` holds the node, or -1."""
    L = len(log) + 1
    keys = np.sort(log * L + np.arange(len(log)))
    q = nodes * L + p
    i = np.searchsorted(keys, q) - 1
    hit = keys[np.maximum(i, 0)]
    ok = (i >= 0) & (hit // L == nodes)
    return np.where(ok, hit % L, -1)


def _next_occurrence(log):
    """Next position holding the same value, or len(log)."""
    n = len(log)
    order = np.argsort(log, kind="stable")
    nxt = np.full(n, n, dtype=np.int64)
    if n > 1:
        same = log[order[1:]] == log[order[:-1]]
        nxt[order[:-1][same]] = order[1:][same]
    return nxt


@dataclass
class _Context:
    ex: np.ndarray
    hits: np.ndarray | None
    pfp: np.ndarray | None


@dataclass
class _LoopOut:
    contexts: list[_Context]
    tri_targets: list[int]
    tri_ends: tuple[list[int], list[int]]
    trisum: list[int]


def _replay_loop(g0, ks, ends, sel_start, rec_pos, log, sat_possible, windows, track_tri, want_edge, ordered, wtab, need):
    """Sequential pass for the features that need adjacency: exclusions of
    internal-edge draws and triangle counts.

    Nodes above ``HUB_DEGREE`` (hubs) keep running sums over their non-hub
    neighbours (degree sum, degree-1 and degree-2 counts, triangle sum, pfp
    weight). A degree or triangle change of a non-hub node is pushed to its
    adjacent hubs; hub neighbours of a hub are summed when it is queried.
    Excluding a hub's neighbourhood then costs O(#hubs) instead of O(degree).

    ``need`` flags which optional exclusion sums to compute ("deg": degree
    sum, "d12": degree-1 and degree-2 counts); the others are left at zero.
    """
    tri_targets: list[int] = []
    tri_ends: tuple[list[int], list[int]] = ([], [])
    trisum_ev: list[int] = []
    n_int = ks.count(0)
    nd = 0 if wtab is None else wtab.shape[1]
    nw = len(windows)
    out = _LoopOut([], tri_targets, tri_ends, trisum_ev)
    if not track_tri and not (want_edge and n_int):
        zero = np.zeros((n_int, 6), dtype=np.int64)
        out.contexts = [_Context(zero, np.zeros((n_int, nw), dtype=np.int64),
                                 np.zeros((n_int, nd)) if nd else None)] * 3
        return out

    adj = [set(s) for s in g0.adj]
    deg = list(g0.degree)
    tri = list(g0.triangles)
    trisum = g0.triangle_sum
    need_deg = need["deg"]
    need_12 = need["d12"]
    vector = nd > SCALAR_PFP
    caches = [] if wtab is None else [col.tolist() for col in wtab.T]
    cache1 = caches[0] if nd == 1 else None
    dw = np.diff(wtab, axis=0) if vector else None
    hub_of: dict[int, list[int]] = {}  # node -> adjacent hubs
    agg: dict[int, list] = {}  # hub -> [degree sum, #deg 1, #deg 2, triangle sum, pfp sums]
    zero_ctx = ((0, 0, 0, 0, 0, 0), (0,) * nw, (0.0,) * nd if nd else None)
    rows: list[tuple] = []

    def pfp_sum(degs):
        if vector:
            return wtab[degs].sum(axis=0)
        return [sum(map(c.__getitem__, degs)) for c in caches]

    def shift(h, y, sign):
        """Add (sign=1) or remove (sign=-1) node ``y``'s terms in hub ``h``'s sums."""
        s = agg[h]
        d = deg[y]
        s[0] += sign * d
        s[1] += sign * (d == 1)
        s[2] += sign * (d == 2)
        s[3] += sign * tri[y]
        if vector:
            s[4] += sign * wtab[d]
        elif nd:
            p = s[4]
            for i, c in enumerate(caches):
                p[i] += sign * c[d]

    def make_hub(x):
        for h in hub_of.get(x, ()):
            shift(h, x, -1)
        small = []
        for y in adj[x]:
            hs = hub_of.get(y)
            if hs is None:
                hub_of[y] = [x]
            else:
                hs.append(x)
            if y not in agg:
                small.append(y)
        degs = list(map(deg.__getitem__, small))
        t = sum(map(tri.__getitem__, small)) if track_tri else 0
        agg[x] = [sum(degs), degs.count(1), degs.count(2), t, pfp_sum(degs) if nd else None]

    def attach(h, y):
        hs = hub_of.get(y)
        if hs is None:
            hub_of[y] = [h]
        else:
            hs.append(h)
        if y not in agg:
            shift(h, y, 1)

    def push(x, d):
        """Node ``x`` went from degree d to d + 1: update adjacent hubs."""
        for h in hub_of[x]:
            s = agg[h]
            s[0] += 1
            if d == 1:
                s[1] -= 1
                s[2] += 1
            elif d == 2:
                s[2] -= 1
            if vector:
                s[4] += dw[d]
            elif nd:
                p = s[4]
                for i, c in enumerate(caches):
                    p[i] += c[d + 1] - c[d]

    def triangles(a, b):
        nonlocal trisum
        sa, sb = adj[a], adj[b]
        common = sa & sb if len(sa) <= len(sb) else sb & sa
        if common:
            c = len(common)
            for y in common:
                tri[y] += 1
            tri[a] += c
            tri[b] += c
            trisum += 3 * c
            for x, inc in [(y, 1) for y in common] + [(a, c), (b, c)]:
                if x not in agg and x in hub_of:
                    for h in hub_of[x]:
                        agg[h][3] += inc

    def link(a, b):
        if track_tri:
            triangles(a, b)
        d = deg[a]
        deg[a] = d + 1
        if a in hub_of and a not in agg:
            push(a, d)
        d = deg[b]
        deg[b] = d + 1
        if b in hub_of and b not in agg:
            push(b, d)
        sa = adj[a]
        sb = adj[b]
        sa.add(b)
        sb.add(a)
        if a in agg:
            attach(a, b)
        elif len(sa) > HUB_DEGREE:
            make_hub(a)
        if b in agg:
            attach(b, a)
        elif len(sb) > HUB_DEGREE:
            make_hub(b)

    def context(x, supports):
        """Exclusion of ``x`` and its neighbours."""
        nb = adj[x]
        dx = len(nb)
        if nw == 1:
            s0 = supports[0]
            h = (len(s0 & nb) + (x in s0),)
        else:
            h = tuple(len(s & nb) + (x in s) for s in supports)
        s = agg.get(x)
        if s is not None:
            big = hub_of.get(x, ())
            degs = [deg[g] for g in big]
            degs.append(dx)
            t = s[3] + tri[x] + sum(map(tri.__getitem__, big)) if track_tri else 0
            f = (dx + 1, s[0] + sum(degs), s[1] + degs.count(1), s[2] + degs.count(2), t, dx + 1)
            if vector:
                p = s[4] + wtab[degs].sum(axis=0)
            elif nd:
                p = [v + sum(map(c.__getitem__, degs)) for v, c in zip(s[4], caches)]
            else:
                p = None
            return f, h, p
        if need_deg or need_12 or nd:
            degs = list(map(deg.__getitem__, nb))
            degs.append(dx)
        t = tri[x] + sum(map(tri.__getitem__, nb)) if track_tri else 0
        f = (
            dx + 1,
            sum(degs) if need_deg else 0,
            degs.count(1) if need_12 else 0,
            degs.count(2) if need_12 else 0,
            t,
            dx + (dx > 0),
        )
        if cache1 is not None:
            p = (sum(map(cache1.__getitem__, degs)),)
        elif nd:
            p = pfp_sum(degs)
        else:
            p = None
        return f, h, p

    def saturated_context(n, supports):
        nodes = [i for i, d in enumerate(deg) if d == n - 1]
        if not nodes:
            return zero_ctx
        degs = [n - 1] * len(nodes)
        t = sum(map(tri.__getitem__, nodes)) if track_tri else 0
        f = (len(nodes), sum(degs), degs.count(1), degs.count(2), t, len(nodes))
        ns = set(nodes)
        return f, tuple(len(s & ns) for s in supports), pfp_sum(degs) if nd else None

    for e, kk in enumerate(ks):
        s0 = sel_start[e]
        if track_tri:
            trisum_ev.append(trisum)
        if kk:
            nid = len(deg)
            adj.append(set())
            deg.append(0)
            tri.append(0)
            if kk == 1 and not track_tri:
                # a fresh leaf: only the target's side needs bookkeeping
                t = ends[s0]
                d = deg[t]
                deg[t] = d + 1
                if t in hub_of and t not in agg:
                    push(t, d)
                deg[nid] = 1
                adj[nid].add(t)
                st = adj[t]
                st.add(nid)
                if t in agg:
                    attach(t, nid)
                elif len(st) > HUB_DEGREE:
                    make_hub(t)
                continue
            targets = ends[s0 : s0 + kk]
            if track_tri:
                tri_targets.extend(map(tri.__getitem__, targets))
            for t in targets:
                link(nid, t)
            continue
        a = ends[s0]
        b = ends[s0 + 1]
        if want_edge:
            if nw:
                p = rec_pos[e]
                supports = [set(log[p - w if p > w else 0 : p]) for w in windows]
            else:
                supports = ()
            if track_tri:
                tri_ends[0].append(tri[a])
                tri_ends[1].append(tri[b])
            ca = context(a, supports)
            rows.append(
                (
                    saturated_context(len(deg), supports) if sat_possible[e] else zero_ctx,
                    ca,
                    ca if ordered else context(b, supports),
                )
            )
        link(a, b)

    n = len(rows)
    for c in range(3):
        col = [r[c] for r in rows]
        ex = np.array([x[0] for x in col], dtype=np.int64).reshape(n, 6)
        h = np.array([x[1] for x in col], dtype=np.int64).reshape(n, nw)
        p = np.array([x[2] for x in col], dtype=float).reshape(n, nd) if nd else None
        out.contexts.append(_Context(ex, h, p))
    return out


def _probabilities(rows: _Rows, fixed, windows, wtab, ptot, n_cols):
    n = len(rows.node)
    q = np.zeros((n, n_cols))
    empty = np.zeros((n, n_cols), dtype=bool)
    if n == 0:
        return q, empty
    ex = rows.ex
    d = rows.deg
    for col, c in enumerate(fixed):
        k = c.kind
        if k == NULL:
            z, w = rows.n - ex[:, 0], np.ones(n)
        elif k == DEGREE:
            z, w = 2 * rows.edges - ex[:, 1], d
        elif k == SINGLETON:
            z, w = rows.n1 - ex[:, 2], d == 1
        elif k == DOUBLETON:
            z, w = rows.n2 - ex[:, 3], d == 2
        elif k == TRIANGLE:
            z, w = rows.trisum - ex[:, 4], rows.tri
        else:  # recent
            s = windows.index(c.param)
            z, w = rows.rec_size[:, s] - rows.rec_hits[:, s], rows.rec_member[:, s]
        ok = z > 0
        empty[:, col] = ~ok
        q[ok, col] = w[ok] / z[ok]
    if wtab is not None:
        lo = len(fixed)
        z = ptot[rows.inc] - rows.pfp_ex
        live = (rows.wired - ex[:, 5]) > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            q[:, lo:] = np.where(live[:, None], wtab[d] / z, 0.0)
        empty[:, lo:] = ~live[:, None]
    return q, empty
