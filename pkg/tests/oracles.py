"""Brute-force reference implementations used as test oracles.

Everything here recomputes from the adjacency sets and the selection log
alone; none of it touches the running counters or the vectorised engine.
"""

from __future__ import annotations

import math
import random
from itertools import combinations

from netevo.events import InternalEdge, NewNode


def degrees(adj):
    return [len(n) for n in adj]


def triangles(adj):
    out = []
    for i, nb in enumerate(adj):
        out.append(sum(1 for x, y in combinations(sorted(nb), 2) if y in adj[x]))
    return out


def pfp(d, delta):
    return 0.0 if d == 0 else d ** (1.0 + delta * math.log10(d))


def weight(kind, param, node, adj, log):
    d = len(adj[node])
    if kind == "null":
        return 1.0
    if kind == "degree":
        return float(d)
    if kind == "pfp":
        return pfp(d, param)
    if kind == "singleton":
        return float(d == 1)
    if kind == "doubleton":
        return float(d == 2)
    if kind == "triangle":
        return float(sum(1 for x, y in combinations(sorted(adj[node]), 2) if y in adj[x]))
    if kind == "recent":
        return float(node in set(log[-param:]))
    raise ValueError(kind)


def choice_probs(terms, adj, log, excluded=()):
    """Mixture law over all nodes minus ``excluded``, from the definition:
    each positive-weight term is normalised over the choice set, terms with
    no mass there are dropped, the rest renormalised, uniform if none left."""
    n = len(adj)
    allowed = [i for i in range(n) if i not in set(excluded)]
    active = []
    for beta, (kind, param) in terms:
        if beta <= 0:
            continue
        w = {i: weight(kind, param, i, adj, log) for i in allowed}
        z = sum(w.values())
        if z > 0:
            active.append((beta, w, z))
    p = [0.0] * n
    if not active:
        for i in allowed:
            p[i] = 1.0 / len(allowed)
        return p
    bsum = sum(b for b, _, _ in active)
    for b, w, z in active:
        for i in allowed:
            p[i] += (b / bsum) * w[i] / z
    return p


def saturated(adj):
    n = len(adj)
    return {i for i in range(n) if n >= 2 and len(adj[i]) == n - 1}


def edge_probs(terms, adj, log, ordered=False):
    """Probability of every absent edge {a, b}, keyed by (min, max); with
    ``ordered`` the key is the draw order (a, b)."""
    n = len(adj)
    first = choice_probs(terms, adj, log, saturated(adj))
    out = {}
    for a in range(n):
        if first[a] == 0:
            continue
        second = choice_probs(terms, adj, log, set(adj[a]) | {a})
        for b in range(n):
            if second[b] == 0:
                continue
            key = (a, b) if ordered else (min(a, b), max(a, b))
            out[key] = out.get(key, 0.0) + first[a] * second[b]
    return out


def term_tuples(spec):
    return [(b, (c.kind, c.param)) for b, c in spec.terms]


def stream_log_likelihood(spec_new, spec_int, adj, log, events):
    """Replay ``events`` on copies of ``adj``/``log``; return (logL, nullLogL, t)."""
    adj = [set(x) for x in adj]
    log = list(log)
    new_t, int_t = term_tuples(spec_new), term_tuples(spec_int)
    null = [(1.0, ("null", None))]
    ll = nl = 0.0
    t = 0
    for ev in events:
        if isinstance(ev, NewNode):
            ex = set()
            for x in ev.targets:
                ll += _log(choice_probs(new_t, adj, log, ex)[x])
                nl += math.log(choice_probs(null, adj, log, ex)[x])
                ex.add(x)
                t += 1
            k = len(adj)
            adj.append(set(ev.targets))
            for x in ev.targets:
                adj[x].add(k)
            log.extend(ev.targets)
        else:
            key = (min(ev.a, ev.b), max(ev.a, ev.b))
            ll += _log(edge_probs(int_t, adj, log).get(key, 0.0))
            nl += math.log(edge_probs(null, adj, log)[key])
            t += 1
            adj[ev.a].add(ev.b)
            adj[ev.b].add(ev.a)
            log.extend((ev.a, ev.b))
    return ll, nl, t


def _log(p):
    return math.log(p) if p > 0 else -math.inf


def clustering(adj):
    tri = sum(triangles(adj))
    triples = sum(d * (d - 1) // 2 for d in degrees(adj))
    return tri / triples if triples else 0.0


def assortativity(adj):
    """Pearson correlation of (deg u, deg v) over both orientations of every edge."""
    d = degrees(adj)
    xs, ys = [], []
    for a, nb in enumerate(adj):
        for b in nb:
            xs.append(d[a])
            ys.append(d[b])
    if not xs:
        return math.nan
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    if vx == 0 or vy == 0:
        return math.nan
    return cov / math.sqrt(vx * vy)


def random_stream(rng: random.Random, n_events: int, max_nodes: int = 50, p_internal: float = 0.4, max_targets: int = 3):
    """A valid random event stream from the single-node seed graph."""
    adj = [set()]
    events = []
    for _ in range(n_events):
        n = len(adj)
        absent = n * (n - 1) // 2 - sum(len(x) for x in adj) // 2
        internal = n >= 3 and absent > 0 and (n >= max_nodes or rng.random() < p_internal)
        if internal:
            while True:
                a, b = rng.sample(range(n), 2)
                if b not in adj[a]:
                    break
            events.append(InternalEdge(a, b))
            adj[a].add(b)
            adj[b].add(a)
        elif n < max_nodes:
            k = rng.randint(1, min(max_targets, n))
            tg = tuple(rng.sample(range(n), k))
            events.append(NewNode(tg))
            adj.append(set(tg))
            for x in tg:
                adj[x].add(n)
        else:
            break
    return events


def random_spec_terms(rng: random.Random, max_terms: int = 4):
    kinds = ["null", "degree", "triangle", "singleton", "doubleton", "recent", "pfp"]
    chosen = rng.sample(kinds, rng.randint(1, max_terms))
    comps = []
    for k in chosen:
        if k == "recent":
            comps.append((k, rng.randint(1, 6)))
        elif k == "pfp":
            comps.append((k, round(rng.uniform(-0.5, 0.5), 3)))
        else:
            comps.append((k, None))
    raw = [rng.random() + 0.05 for _ in comps]
    if len(raw) > 1 and rng.random() < 0.15:
        raw[0] = 0.0  # zero weights are legal and must be inert
    s = sum(raw)
    return [(r / s, c) for r, c in zip(raw, comps)]
