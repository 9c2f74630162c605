from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from netevo.events import replay, seed_graph  # noqa: E402
from netevo.graph import EvolvingGraph  # noqa: E402
from netevo.models import Component, ModelSpec  # noqa: E402

import oracles  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


def to_spec(terms) -> ModelSpec:
    return ModelSpec(tuple((b, Component(k, p)) for b, (k, p) in terms))


def graph_of(events) -> EvolvingGraph:
    return replay(events, seed_graph())


def star(leaves: int = 3) -> EvolvingGraph:
    return EvolvingGraph.from_edges([(0, i) for i in range(1, leaves + 1)])


def complete(n: int) -> EvolvingGraph:
    return EvolvingGraph.from_edges([(a, b) for a in range(n) for b in range(a + 1, n)])


@st.composite
def streams(draw, max_events: int = 40, max_nodes: int = 15):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_events))
    return oracles.random_stream(random.Random(seed), n, max_nodes)


@st.composite
def spec_terms(draw, max_terms: int = 4):
    seed = draw(st.integers(0, 2**32 - 1))
    return oracles.random_spec_terms(random.Random(seed), max_terms)


# -- one summary line per acceptance criterion ------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}
_NOTES: dict[int, list[str]] = {}


def note(n: int, text: str) -> None:
    """Attach a measured value to criterion ``n``'s summary line."""
    _NOTES.setdefault(n, []).append(text)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    marks = getattr(report, "criterion", None)
    if marks is None:
        return
    n, text = marks
    status = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
    prev = _CRITERIA.get(n)
    if prev is None or prev[0] == "PASS" or status == "FAIL":
        _CRITERIA[n] = (status, text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, text = _CRITERIA[n]
        extra = "; ".join(_NOTES.get(n, ()))
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {text}" + (f"  [{extra}]" if extra else ""))
