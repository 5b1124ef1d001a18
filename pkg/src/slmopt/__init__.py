"""Derivative-free global optimisation by subdivision labeling."""
from .benchfuncs import FUNCTIONS, BenchFunction, get_function, with_delay
from .engine import EngineConfig, EngineError, GenerationTrace, RunReport, run, select_cells
from .grid import (Cell, DomainError, DyadicPoint, RefinementLimitError, SearchDomain,
                   cell_vertices, initial_cell, step_size, subdivide, to_coords)
from .labeling import (ConfigurationError, EvaluationError, LabelingStrategy, Objective, Sense,
                       best_neighbor, is_complete, label_of_displacement, label_vertex,
                       neighbor_candidates)
from .registry import ClusterTables, EvalStore
from .runtime import BackendKind, ExecutionBackend, assign, master_round

__version__ = "0.1.0"
