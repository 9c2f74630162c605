"""Likelihood-based selection, fitting and growth of evolving network models."""

from .errors import DataError, NetEvoError, NumericError
from .estimation import FitConfig, FitResult, fit_model, fit_roles, fit_weights, per_step_component_probs
from .events import EventFile, InternalEdge, NewNode, parse_events, format_events, read_events, replay, seed_graph, write_events
from .generator import Empirical, Replay, grow, sample_edge, sample_node
from .graph import EvolvingGraph
from .ingest import IngestConfig, RawEdgeRecord, expand_coauthorship, order_and_delay, parse_edge_stream, split_warmup
from .likelihood import LikelihoodReport, SpecPair, compare, score_many, sequence_log_likelihood
from .models import ModelSpec, edge_probability, node_probability, parse_spec
from .stats import StatsSnapshot, snapshot, trajectory

__version__ = "0.1.0"
