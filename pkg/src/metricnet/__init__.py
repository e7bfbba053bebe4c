"""Laplacians on metric graphs: spectra, heat and wave flows, and a finite-element reference."""

from .errors import *  # noqa: F401,F403
from .graph import (MetricGraph, complete_graph, cycle_graph, from_edge_list, graph_params,
                    incidence, laplacian, load_graph, transition_matrix, validate)
from .spectral import SpectrumReport, spectrum, unit_speed_spectrum
from .evolve import EdgeState, EigenBasis, build_basis, heat_evolve, wave_evolve
from .stability import convergence_bound, lambda2_regular

__version__ = "0.1.0"
