"""Numerical verification of eigenvalue ratio and Cheeger-type inequalities on discretized flat manifolds."""

from .errors import EigenratioError
from .graph_core import MeasuredGraph, build_graph, read_graph, write_graph
from .model_spaces import TorusSpec, circle_graph, torus_graph
from .reports import CONSTANTS, InequalityReport
from .spectra import Spectrum, compute_spectrum

__all__ = [
    "CONSTANTS",
    "EigenratioError",
    "InequalityReport",
    "MeasuredGraph",
    "Spectrum",
    "TorusSpec",
    "build_graph",
    "circle_graph",
    "compute_spectrum",
    "read_graph",
    "torus_graph",
    "write_graph",
]
__version__ = "0.1.0"
