"""Maximum-likelihood fitting of mixture weights and nonlinear parameters.

Mixture weights are fitted by EM on the simplex over cached per-step
component probabilities; PFP deltas and recency windows are grid-searched
around that inner fit, keeping the grid point with the best c0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AllZeroSteps, DataError
from .events import EdgeEvent, NewNode
from .graph import EvolvingGraph
from .likelihood import INTERNAL, NEW_NODE, LikelihoodReport, SpecPair, report_from_table
from .models import (
    DEGREE, DOUBLETON, KINDS, NULL, PFP, RECENT, SINGLETON, TRIANGLE,
    Component, ModelSpec, null, pfp, recent,
)
from .steps import StepTable, collect_steps

log = logging.getLogger(__name__)

FIXED_KINDS = (NULL, DEGREE, TRIANGLE, SINGLETON, DOUBLETON)
MEMORY_BUDGET = 256 * 2**20  # bytes of cached probabilities per replay
ROLES = (NEW_NODE, INTERNAL)
NEGLIGIBLE = 1e-12


@dataclass(frozen=True)
class FitConfig:
    """Search space and EM settings for one role (new-node or internal)."""

    candidate_components: tuple[str, ...] = KINDS
    delta_grid: tuple[float, float, float] = (-0.5, 0.5, 0.005)
    windows: tuple[int, ...] = (1, 2, 3, 5, 10)
    em_max_iters: int = 1000
    em_tol: float = 1e-7
    role: str = NEW_NODE
    prune: float = 0.005  # drop weights below this from the winning spec, then refit
    tie_tol: float = 1e-6  # relative c0 difference treated as a tie
    ordered: bool = False

    def __post_init__(self):
        fams = tuple(self.candidate_components)
        object.__setattr__(self, "candidate_components", fams)
        object.__setattr__(self, "delta_grid", tuple(float(x) for x in self.delta_grid))
        object.__setattr__(self, "windows", tuple(int(w) for w in self.windows))
        if not fams:
            raise DataError("candidate_components is empty")
        for f in fams:
            if f not in KINDS:
                raise DataError(f"unknown component family {f!r}")
        if len(set(fams)) != len(fams):
            raise DataError("candidate_components lists a family twice")
        lo, hi, step = self.delta_grid
        if not (lo <= hi and step > 0 and all(map(math.isfinite, self.delta_grid))):
            raise DataError(f"delta_grid {self.delta_grid} must satisfy lo <= hi and step > 0")
        if RECENT in fams and not self.windows:
            raise DataError("recent needs at least one window")
        if any(w < 1 for w in self.windows):
            raise DataError("windows must be positive")
        if not self.em_tol > 0:
            raise DataError("em_tol must be positive")
        if self.em_max_iters < 1:
            raise DataError("em_max_iters must be at least 1")
        if self.role not in ROLES:
            raise DataError(f"role must be one of {ROLES}, got {self.role!r}")
        if not 0 <= self.prune < 1:
            raise DataError("prune must be in [0, 1)")

    def deltas(self) -> list[float]:
        lo, hi, step = self.delta_grid
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + i * step, 12) for i in range(n)]

    def with_role(self, role: str) -> "FitConfig":
        return FitConfig(**{**self._asdict(), "role": role})

    def _asdict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_text(cls, text: str) -> "FitConfig":
        """Parse ``key=value`` lines; ``#`` starts a comment."""
        kw: dict = {}
        names = {f.name: f for f in fields(cls)}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"config line {n}: expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in names:
                raise DataError(f"config line {n}: unknown key {key!r}")
            try:
                kw[key] = _convert(key, value)
            except ValueError as exc:
                raise DataError(f"config line {n}: bad value for {key}: {exc}") from None
        return cls(**kw)

    @classmethod
    def from_file(cls, path: str | Path) -> "FitConfig":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        out = []
        for k, v in self._asdict().items():
            if isinstance(v, tuple):
                v = ",".join(map(str, v))
            out.append(f"{k}={v}")
        return "\n".join(out) + "\n"


def _convert(key: str, value: str):
    def items():
        return [s.strip() for s in value.split(",") if s.strip()]

    if key == "candidate_components":
        return tuple(items())
    if key == "delta_grid":
        parts = [float(x) for x in items()]
        if len(parts) != 3:
            raise ValueError("need lo,hi,step")
        return tuple(parts)
    if key == "windows":
        return tuple(int(x) for x in items())
    if key in ("em_max_iters",):
        return int(value)
    if key in ("em_tol", "prune", "tie_tol"):
        return float(value)
    if key == "ordered":
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError("expected a boolean")
        return value.lower() in ("true", "1", "yes")
    return value


# -- cached probabilities ---------------------------------------------------------


def per_step_component_probs(
    components: Component | Sequence[Component],
    g0: EvolvingGraph,
    events: Sequence[EdgeEvent],
    role: str | None = None,
    ordered: bool = False,
) -> StepTable:
    """Probability each pure component gives every observed choice (0 where
    its support is empty), from a single replay."""
    if isinstance(components, Component):
        components = [components]
    return collect_steps(g0, events, list(components), ordered=ordered, role=role)


@dataclass
class _Design:
    """Per-step probabilities of the candidate components, arranged for EM."""

    role: str
    mats: tuple[np.ndarray, ...]  # (q,) for new nodes; (qa, rab, qb, rba) for edges
    events: np.ndarray
    ordered: bool = False

    @property
    def t(self) -> int:
        return self.mats[0].shape[0]

    @classmethod
    def from_table(cls, table: StepTable, comps: Sequence[Component], role: str) -> "_Design":
        """Columns of ``comps``; on steps where every candidate has empty
        support the mixture falls back to uniform whatever the weights, so
        those rows carry the null probability in every column."""
        cols = table.columns(comps)
        n = table.index[null()]

        def block(q, empty):
            out = q[:, cols]
            dead = empty[:, cols].all(axis=1)
            if dead.any():
                out[dead] = q[dead, n][:, None]
            return out

        if role == NEW_NODE:
            return cls(role, (block(table.node_q, table.node_empty),), table.node_event)
        m = (block(table.edge_qa, table.edge_empty_first), block(table.edge_rab, table.edge_empty_a))
        if not table.ordered:
            m += (block(table.edge_qb, table.edge_empty_first), block(table.edge_rba, table.edge_empty_b))
        return cls(role, m, table.edge_event, table.ordered)

    def step_probs(self, beta: np.ndarray) -> np.ndarray:
        if len(self.mats) == 1:
            return self.mats[0] @ beta
        p = (self.mats[0] @ beta) * (self.mats[1] @ beta)
        if len(self.mats) == 4:
            p += (self.mats[2] @ beta) * (self.mats[3] @ beta)
        return p

    def update(self, beta: np.ndarray) -> tuple[np.ndarray, float]:
        """One EM (Baum-Eagon for the bilinear edge case) step and the
        log-likelihood of the incoming ``beta``."""
        if len(self.mats) == 1:
            q = self.mats[0]
            mix = q @ beta
            ll = float(np.sum(np.log(mix)))
            new = beta * (q.T @ (1.0 / mix)) / len(mix)
        else:
            qa, rab = self.mats[0], self.mats[1]
            A, B = qa @ beta, rab @ beta
            P = A * B
            if len(self.mats) == 4:
                qb, rba = self.mats[2], self.mats[3]
                C, D = qb @ beta, rba @ beta
                P = P + C * D
            inv = 1.0 / P
            grad = qa.T @ (B * inv) + rab.T @ (A * inv)
            if len(self.mats) == 4:
                grad += qb.T @ (D * inv) + rba.T @ (C * inv)
            ll = float(np.sum(np.log(P)))
            new = beta * grad / (2.0 * len(P))
        return new / new.sum(), ll

    def identical_groups(self) -> list[list[int]]:
        """Groups of component columns with identical probabilities on every step."""
        m = self.mats[0].shape[1]
        groups: list[list[int]] = []
        seen: set[int] = set()
        for i in range(m):
            if i in seen:
                continue
            grp = [i]
            for j in range(i + 1, m):
                if j not in seen and all(np.array_equal(x[:, i], x[:, j]) for x in self.mats):
                    grp.append(j)
                    seen.add(j)
            if len(grp) > 1:
                groups.append(grp)
        return groups


@dataclass
class WeightFit:
    betas: np.ndarray
    trace: list[float]
    iterations: int
    converged: bool
    degenerate: list[tuple[Component, ...]] = field(default_factory=list)


def fit_weights(
    components: Sequence[Component],
    table: StepTable,
    config: FitConfig | None = None,
    start: Sequence[float] | None = None,
) -> WeightFit:
    """Maximum-likelihood mixture weights of ``components`` on a cached table.

    Multiplicative EM updates stay on the simplex and never decrease the
    log-likelihood, whose value at every visited point is kept in ``trace``.
    Steps where a component has empty support count as probability 0 for it.
    """
    config = config or FitConfig()
    comps = list(components)
    if not comps:
        raise DataError("fit_weights needs at least one component")
    design = _Design.from_table(table, comps, config.role)
    fit = _em(design, comps, config, start)
    _warn_degenerate(fit.degenerate)
    return fit


def _warn_degenerate(groups) -> None:
    if groups:
        log.warning("components with identical probabilities on every step: %s",
                    "; ".join(" = ".join(map(str, g)) for g in groups))


def _em(design: _Design, comps, config: FitConfig, start=None) -> WeightFit:
    m = len(comps)
    if design.t == 0:
        return WeightFit(np.full(m, 1.0 / m), [0.0], 0, True)
    uniform = np.full(m, 1.0 / m)
    zero = design.step_probs(uniform) <= 0.0
    if zero.any():
        raise AllZeroSteps(sorted({int(i) for i in design.events[zero]}))
    groups = design.identical_groups()
    degenerate = [tuple(comps[i] for i in g) for g in groups]
    beta = uniform if start is None else np.asarray(start, dtype=float) / np.sum(start)
    if np.any(beta <= 0):
        # keep every component reachable: a zero weight would stay zero
        beta = (beta + uniform * 1e-3) / (1 + 1e-3)
    trace: list[float] = []
    converged = False
    it = 0
    prev = beta
    while it < config.em_max_iters:
        new, ll = design.update(beta)
        if trace and ll < trace[-1]:
            # the step lost likelihood to rounding: we are at the optimum
            beta = prev
            converged = True
            break
        trace.append(ll)
        it += 1
        prev, beta = beta, new
        if float(np.max(np.abs(beta - prev))) < config.em_tol:
            converged = True
            break
    if beta is not prev:
        final = float(np.sum(np.log(design.step_probs(beta))))
        if final >= trace[-1]:
            trace.append(final)
        else:
            beta = prev
    return WeightFit(beta, trace, it, converged, degenerate)


# -- model search -----------------------------------------------------------------


@dataclass
class FitResult:
    spec: ModelSpec
    report: LikelihoodReport
    trace: list[float]
    degenerate: list[tuple[Component, ...]] = field(default_factory=list)
    grid: list[tuple[ModelSpec, float]] = field(default_factory=list)  # (spec, c0) per grid point


@dataclass
class _Candidate:
    spec: ModelSpec
    report: LikelihoodReport
    trace: list[float]
    degenerate: list
    order: int

    def key(self):
        return (len(self.spec.terms), self.report.aic, self.order)


def _spec_from(comps, beta) -> ModelSpec:
    beta = np.asarray(beta, dtype=float)
    beta = beta / beta.sum()
    # weights EM has driven to numerical zero carry no likelihood
    beta = np.where(beta < NEGLIGIBLE, 0.0, beta)
    beta = beta / beta.sum()
    terms = [(float(b), c) for b, c in zip(beta, comps) if b > 0]
    if len(terms) == 1:
        return ModelSpec.pure(terms[0][1])
    # absorb rounding so the weights sum to one within tolerance
    total = math.fsum(b for b, _ in terms)
    b0, c0 = terms[0]
    terms[0] = (b0 + (1.0 - total), c0)
    return ModelSpec(tuple(terms))


def _rows(events: Sequence[EdgeEvent], role: str) -> int:
    if role == NEW_NODE:
        return sum(len(ev.targets) for ev in events if isinstance(ev, NewNode))
    return sum(1 for ev in events if not isinstance(ev, NewNode))


def _delta_chunks(deltas: list[float], rows: int, n_other: int, role: str) -> list[list[float]]:
    per_cell = 9 if role == NEW_NODE else 36  # float + bool, one or four matrices
    size = max(1, int(MEMORY_BUDGET // max(1, rows * per_cell)) - n_other)
    return [deltas[i : i + size] for i in range(0, len(deltas), size)]


def fit_model(g0: EvolvingGraph, events: Sequence[EdgeEvent], config: FitConfig | None = None) -> FitResult:
    """Best mixture for one role: grid search over PFP delta and recency
    window, EM for the weights at every grid point.

    The winner maximises c0; candidates within ``tie_tol`` (relative) of the
    best count as tied and are ranked by fewer components, then lower AIC,
    then grid order. The winner's weights below ``prune`` are then dropped
    and the rest refitted; the pruned spec replaces it if it ties.
    """
    config = config or FitConfig()
    role = config.role
    fams = config.candidate_components
    fixed = [Component(k) for k in FIXED_KINDS if k in fams]
    windows = list(config.windows) if RECENT in fams else [None]
    deltas = config.deltas() if PFP in fams else [None]
    n_other = len(fixed) + (len(windows) if windows != [None] else 0) + 1
    chunks = _delta_chunks(deltas, _rows(events, role), n_other, role) if deltas != [None] else [[None]]

    candidates: list[_Candidate] = []
    grid: list[tuple[ModelSpec, float]] = []
    warm: dict = {}
    order = 0
    for chunk in chunks:
        probe = list(fixed) + [pfp(d) for d in chunk if d is not None] + [recent(w) for w in windows if w is not None]
        table = collect_steps(g0, events, probe, ordered=config.ordered, role=role)
        for w in windows:
            for d in chunk:
                comps = list(fixed)
                if d is not None:
                    comps.append(pfp(d))
                if w is not None:
                    comps.append(recent(w))
                design = _Design.from_table(table, comps, role)
                fit = _em(design, comps, config, warm.get(w))
                warm[w] = fit.betas
                spec = _spec_from(comps, fit.betas)
                rep = report_from_table(table, SpecPair.same(spec), role)
                grid.append((spec, rep.c0))
                candidates.append(_Candidate(spec, rep, fit.trace, fit.degenerate, order))
                order += 1
        candidates = [_pick(candidates, config.tie_tol)]  # only the running winner is kept

    winner = candidates[0]
    pruned = _prune(g0, events, winner, config)
    if pruned is not None:
        winner = _pick([winner, pruned], config.tie_tol)
    _warn_degenerate(winner.degenerate)
    return FitResult(winner.spec, winner.report, winner.trace, winner.degenerate, grid)


def _pick(cands: list[_Candidate], tol: float) -> _Candidate:
    def c0(c):
        v = c.report.c0
        return -math.inf if math.isnan(v) else v

    best = max(c0(c) for c in cands)
    tied = [c for c in cands if c0(c) >= best - tol * abs(best)]
    return min(tied, key=_Candidate.key)


def _prune(g0, events, winner: _Candidate, config: FitConfig) -> _Candidate | None:
    kept = [c for b, c in winner.spec.terms if b >= config.prune]
    if len(kept) == len(winner.spec.terms) or not kept:
        return None
    table = collect_steps(g0, events, kept, ordered=config.ordered, role=config.role)
    fit = _em(_Design.from_table(table, kept, config.role), kept, config)
    spec = _spec_from(kept, fit.betas)
    rep = report_from_table(table, SpecPair.same(spec), config.role)
    return _Candidate(spec, rep, fit.trace, fit.degenerate, -1)


@dataclass
class RoleFits:
    new_node: FitResult
    internal: FitResult

    @property
    def pair(self) -> SpecPair:
        return SpecPair(self.new_node.spec, self.internal.spec)


def fit_roles(g0: EvolvingGraph, events: Sequence[EdgeEvent], config: FitConfig | None = None) -> RoleFits:
    """Fit new-node and internal-edge models independently."""
    config = config or FitConfig()
    return RoleFits(
        fit_model(g0, events, config.with_role(NEW_NODE)),
        fit_model(g0, events, config.with_role(INTERNAL)),
    )
