"""Multiblock optimization problems, coupling-graph bipartization, and
parallel two-block ADMM."""

from .maps import LinearMap
from .functions import SmoothFn, ProxFn, lambda_max, EQ_TOL
from .problem import Block, Constraint, MultiblockProblem, validate
from .graph import (CouplingGraph, GraphVertex, GraphEdge, GraphMetrics,
                    build_coupling_graph, compute_metrics, is_bipartite)
from .bipartize import (BipartizationDecision, BipartiteGraph,
                        NonBipartiteError, basic_decision, bfs_bipartize,
                        import_decision, materialize, read_assignment,
                        write_assignment)
from .milp import MilpModel, build_milp, contribution, solve_milp, to_lp_format
from .twoblock import (Coupling, TwoBlock, TwoBlockProblem, assemble,
                       eliminate_auxiliaries, residual)
from .solver import (AdmmResult, AdmmTrace, SolverConfig, TraceRecord,
                     UnsupportedBlockError, solve)
from . import zoo, mps

__version__ = "0.1.0"

__all__ = [
    "LinearMap", "SmoothFn", "ProxFn", "lambda_max", "EQ_TOL",
    "Block", "Constraint", "MultiblockProblem", "validate",
    "CouplingGraph", "GraphVertex", "GraphEdge", "GraphMetrics",
    "build_coupling_graph", "compute_metrics", "is_bipartite",
    "BipartizationDecision", "BipartiteGraph", "NonBipartiteError",
    "basic_decision", "bfs_bipartize", "import_decision", "materialize",
    "read_assignment", "write_assignment",
    "MilpModel", "build_milp", "contribution", "solve_milp", "to_lp_format",
    "Coupling", "TwoBlock", "TwoBlockProblem", "assemble",
    "eliminate_auxiliaries", "residual",
    "AdmmResult", "AdmmTrace", "SolverConfig", "TraceRecord",
    "UnsupportedBlockError", "solve",
    "zoo", "mps",
]
