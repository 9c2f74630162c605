import math

import numpy as np
import pytest

from conftest import star
from netevo.errors import AllZeroSteps, DataError
from netevo.estimation import FitConfig, fit_model, fit_roles, fit_weights, per_step_component_probs
from netevo.events import NewNode, seed_graph
from netevo.generator import Empirical, grow
from netevo.graph import EvolvingGraph
from netevo.likelihood import INTERNAL, NEW_NODE
from netevo.models import PFP, degree, null, parse_spec, pfp, recent, singleton

SINGLE = Empirical({1: 1.0}, {0: 1.0})
MIXED = Empirical({1: 0.5, 2: 0.5}, {0: 0.5, 1: 0.5})


def _stream(spec, n, seed, outer=SINGLE):
    return grow(seed_graph(), outer, parse_spec(spec), n, seed).events


def test_cached_probabilities():
    tab = per_step_component_probs([null(), degree(), recent(1)], star(3), [NewNode((0,)), NewNode((0,))])
    col = tab.index
    assert tab.node_q[0, col[null()]] == pytest.approx(1 / 4)
    assert tab.node_q[0, col[degree()]] == pytest.approx(0.5)
    # the second target repeats the previous selection
    assert tab.node_q[1, col[recent(1)]] == pytest.approx(1.0)
    assert tab.node_q[1, col[null()]] == pytest.approx(1 / 5)


def test_single_component_converges_at_once():
    events = _stream("degree", 500, 1)
    tab = per_step_component_probs([degree()], seed_graph(), events)
    fit = fit_weights([degree()], tab)
    assert fit.betas.tolist() == [1.0]
    assert fit.iterations == 1


def test_pure_degree_stream_gives_dominant_degree_weight():
    events = _stream("degree", 10_000, 2)
    tab = per_step_component_probs([degree(), null()], seed_graph(), events)
    fit = fit_weights([degree(), null()], tab)
    assert fit.betas[0] >= 0.9
    assert np.all(np.diff(fit.trace) >= 0)


@pytest.mark.parametrize("role", [NEW_NODE, INTERNAL])
def test_mixture_weights_are_recovered_for_each_role(role):
    events = _stream("0.7*degree + 0.3*null", 30_000, 3, MIXED)
    tab = per_step_component_probs([degree(), null()], seed_graph(), events)
    fit = fit_weights([degree(), null()], tab, FitConfig(role=role))
    assert fit.betas[0] == pytest.approx(0.7, abs=0.05)
    assert fit.converged
    assert np.all(np.diff(fit.trace) >= 0)


def test_identical_components_are_reported():
    events = _stream("degree", 2000, 4)
    comps = [degree(), pfp(0.0)]
    tab = per_step_component_probs(comps, seed_graph(), events)
    fit = fit_weights(comps, tab)
    assert fit.converged
    assert fit.betas.sum() == pytest.approx(1.0)
    assert fit.degenerate == [(degree(), pfp(0.0))]


def test_all_zero_steps_raise():
    # the second target has degree 0 while a degree-1 node exists
    g0 = EvolvingGraph.from_edges([(0, 1)], n_nodes=3)
    tab = per_step_component_probs([singleton()], g0, [NewNode((2,))])
    with pytest.raises(AllZeroSteps):
        fit_weights([singleton()], tab)


def test_pfp_delta_is_recovered():
    events = _stream("pfp(0.05)", 30_000, 5, MIXED)
    res = fit_model(seed_graph(), events, FitConfig(candidate_components=(PFP,)))
    (_, comp), = res.spec.terms
    assert abs(comp.param - 0.05) <= 0.01
    assert res.report.c0 > 1.0
    assert np.all(np.diff(res.trace) >= 0)


def test_null_stream_fits_to_almost_nothing():
    events = _stream("null", 4000, 6, MIXED)
    cfg = FitConfig(delta_grid=(-0.5, 0.5, 0.1), windows=(1, 3))
    res = fit_model(seed_graph(), events, cfg)
    assert 0.99 <= res.report.c0 <= 1.01
    betas = dict((c.kind, b) for b, c in res.spec.terms)
    assert betas.get("null", 0) == max(betas.values())


def test_fit_roles_reports_both():
    events = _stream("0.6*degree + 0.4*recent(3)", 6000, 7, MIXED)
    cfg = FitConfig(candidate_components=("degree", "recent", "null"), windows=(1, 3, 5))
    fits = fit_roles(seed_graph(), events, cfg)
    assert fits.new_node.report.role == NEW_NODE
    assert fits.internal.report.role == INTERNAL
    for f in (fits.new_node, fits.internal):
        assert recent(3) in f.spec.components
    pair = fits.pair
    assert pair.new_node == fits.new_node.spec


def test_single_family_gives_a_pure_spec():
    events = _stream("degree", 3000, 8)
    res = fit_model(seed_graph(), events, FitConfig(candidate_components=("degree",)))
    assert str(res.spec) == "degree"


def test_config_text_round_trip():
    cfg = FitConfig(candidate_components=("null", "pfp"), delta_grid=(-0.2, 0.2, 0.01), windows=(2, 4), em_tol=1e-9)
    again = FitConfig.from_text(cfg.to_text())
    assert again == cfg
    assert len(cfg.deltas()) == 41
    assert cfg.deltas()[20] == 0.0


@pytest.mark.parametrize(
    "text",
    [
        "bogus=1",
        "em_tol=0",
        "delta_grid=0.5,-0.5,0.1",
        "candidate_components=null,weird",
        "windows=0",
        "role=sideways",
        "just words",
        "em_max_iters=abc",
    ],
)
def test_bad_config_is_rejected(text):
    with pytest.raises(DataError):
        FitConfig.from_text(text)


def test_config_comments_and_blank_lines():
    cfg = FitConfig.from_text("# search\n\ncandidate_components = degree, null  # two\nprune=0.01\n")
    assert cfg.candidate_components == ("degree", "null")
    assert cfg.prune == 0.01


def test_weights_sum_to_one_after_fit():
    events = _stream("0.5*degree + 0.5*singleton", 5000, 9, MIXED)
    res = fit_model(seed_graph(), events, FitConfig(candidate_components=("degree", "singleton", "null", "doubleton")))
    assert math.fsum(res.spec.betas) == pytest.approx(1.0, abs=1e-9)
