"""Rainbow structures in edge-coloured graphs: transversals, Hamiltonian cycles, spanning trees."""

from .config import PipelineConfig
from .graph_core import (
    CycleFactor,
    EdgeColouredGraph,
    GeneralizedLatinSquare,
    GraphError,
    RainbowForest,
    RainbowMatching,
    verify,
    verify_pairwise_disjoint,
)
from .hamilton import circulant_decomposition, hamiltonian_decomposition, two_factor_decomposition
from .matchings import knn_transversal_pipeline, perfect_matching_decomposition
from .nibble import near_perfect_rainbow_matching
from .trees import spanning_tree_decomposition

__all__ = [
    "CycleFactor",
    "EdgeColouredGraph",
    "GeneralizedLatinSquare",
    "GraphError",
    "PipelineConfig",
    "RainbowForest",
    "RainbowMatching",
    "circulant_decomposition",
    "hamiltonian_decomposition",
    "knn_transversal_pipeline",
    "near_perfect_rainbow_matching",
    "perfect_matching_decomposition",
    "spanning_tree_decomposition",
    "two_factor_decomposition",
    "verify",
    "verify_pairwise_disjoint",
]
