"""Unified gradient tracking (UGT) for decentralized optimization over digraphs."""

from . import core, graph, presets, problem, theory, weights
from .core import DivergenceError, Trajectory, UgtConfig, Variant, run
from .graph import Digraph, generate_graph
from .problem import QuadraticProblem, constants, generate_quadratic
from .theory import certify
from .weights import WeightMatrix, laplacian_weights

__version__ = "0.1.0"

__all__ = [
    "core",
    "graph",
    "presets",
    "problem",
    "theory",
    "weights",
    "Digraph",
    "DivergenceError",
    "QuadraticProblem",
    "Trajectory",
    "UgtConfig",
    "Variant",
    "WeightMatrix",
    "certify",
    "constants",
    "generate_graph",
    "generate_quadratic",
    "laplacian_weights",
    "run",
]
