"""Maximum-determinant principal submatrix selection.

Exact branch-and-bound with projected Hadamard bounds, a certified log-det
relaxation, and exporters for conic relaxations.
"""

from .bnb import SolveReport, greedy_incumbent, solve
from .bounds import BoundValue, bound_dominance_check, hadamard_bound
from .conic import ConicModel, build_expcone_lp, build_sdp_relaxation, read_model, write_model
from .estimators import IndependentColumns, LogDetRelaxation, MaxDetSelector
from .graph import OcpInstance, gen_ocp, verify_selection
from .io import RawMatrix, independent_columns, load_csv
from .linalg import InstanceMatrix, ProjectedRows, include_row, project_rows
from .relax import CappedSimplex, RelaxSolution, solve_lp_relaxation
from .report import gap

__version__ = "0.1.0"

__all__ = [
    "BoundValue",
    "CappedSimplex",
    "ConicModel",
    "IndependentColumns",
    "InstanceMatrix",
    "LogDetRelaxation",
    "MaxDetSelector",
    "OcpInstance",
    "ProjectedRows",
    "RawMatrix",
    "RelaxSolution",
    "SolveReport",
    "bound_dominance_check",
    "build_expcone_lp",
    "build_sdp_relaxation",
    "gap",
    "gen_ocp",
    "greedy_incumbent",
    "hadamard_bound",
    "include_row",
    "independent_columns",
    "load_csv",
    "project_rows",
    "read_model",
    "solve",
    "solve_lp_relaxation",
    "verify_selection",
    "write_model",
]
