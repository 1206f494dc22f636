"""Entropy-guided scheduling for communication-efficient decentralized SGD."""
from .graph import Graph, build_graph, laplacian, line_graph, auxiliary_conflict_graph, is_connected
from .partition import Partition, matchings_by_edge_coloring, subsets_by_vertex_coloring, validate_partition
from .importance import (
    ImportanceVector,
    betweenness_centrality,
    link_importance,
    node_entropy,
    node_importance,
    rank_with_ties,
)
from .schedule import SchedulePolicy, budgeted_probabilities, make_policy
from .mixing import mixing_matrix, optimize_alpha
from .dsgd import TrainingConfig, run_dsgd, centralized_baseline

__version__ = "0.1.0"
