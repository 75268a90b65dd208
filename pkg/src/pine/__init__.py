"""Unsupervised important-node exploration in directed attributed graphs.

Scores nodes by how much their neighbors rely on them as information
sources: a single-head graph attention network is trained on link
prediction and each node's outgoing attention weights are summed into an
importance score.  The package also ships classical centrality baselines,
attribute-aware diffusion simulators for validating seed sets, ranking
metrics, and an experiment pipeline CLI.
"""

__version__ = "0.1.0"

from .graph import AttributedGraph, largest_weak_component, load_graph, subgraph_by_edge_type
from .scores import ScoreVector

__all__ = [
    "AttributedGraph",
    "ScoreVector",
    "load_graph",
    "largest_weak_component",
    "subgraph_by_edge_type",
    "__version__",
]
