"""Probabilistic graph clustering by low-rank doubly stochastic decomposition."""

from .dcd import DcdConfig, RunTrace, a_hat, dcd_step, gradient_split, kl_error, lagrangian, run
from .errors import (
    AllCandidatesFailedError,
    DCDError,
    DegenerateClusterError,
    InvalidInputError,
    InvalidParameterError,
    IsolatedNodeError,
    NumericError,
)
from .evaluation import hard_labels, purity
from .graph import SparseSimilarity, from_matrix, knn_graph, validate_graph
from .init import indicator_perturb, kmeans, multi_start, ncut_embed

__version__ = "0.1.0"
