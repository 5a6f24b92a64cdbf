"""Unified interior penalty DG for heterogeneous anisotropic diffusion in 2D.

Typical use::

    from uipdg import test1, generate_structured, SchemeSpec, solve_problem
    case = test1(lam=1e4)
    mesh = generate_structured(16, case.domain, partition="quadrant")
    sol = solve_problem(case, mesh, SchemeSpec("UIP", epsilon=1, k=2))
    print(sol.errors.err_energy)
"""

__version__ = "0.1.0"

from .bench import TestCase, kellogg, kellogg_quadrant_assignment, test1
from .coeffs import DiffusionField, FaceCoefficients, face_coefficients, normal_diffusivity, tau
from .errors import ErrorReport, compute_errors, ecr, l2_project
from .exceptions import (
    BoundaryConditionError,
    ConfigurationError,
    KelloggAssignmentError,
    LocalSolveError,
    MeshFormatError,
    SolverError,
    TopologyError,
    UIPDGError,
)
from .forms import BoundaryData, LinearSystem, SchemeSpec, assemble, identity_relation_check
from .hybrid import assemble_hip, reconstruct_traces, recover_element_solution, solve_hip
from .linalg import SolveReport, solve, spd_check
from .mesh import Mesh, Skeleton, build_skeleton, generate_structured, read_mesh, refine_uniform, write_mesh
from .refelem import basis_eval, phys_map, quadrature
from .space import DGFunction, DGSpace, SkeletonFunction
from .study import convergence_study, overshoot, solve_problem

__all__ = [
    "BoundaryConditionError", "BoundaryData", "ConfigurationError", "DGFunction", "DGSpace",
    "DiffusionField", "ErrorReport", "FaceCoefficients", "KelloggAssignmentError", "LinearSystem",
    "LocalSolveError", "Mesh", "MeshFormatError", "SchemeSpec", "Skeleton", "SkeletonFunction",
    "SolveReport", "SolverError", "TestCase", "TopologyError", "UIPDGError", "assemble",
    "assemble_hip", "basis_eval", "build_skeleton", "compute_errors", "convergence_study", "ecr",
    "face_coefficients", "generate_structured", "identity_relation_check", "kellogg",
    "kellogg_quadrant_assignment", "l2_project", "normal_diffusivity", "overshoot", "phys_map",
    "quadrature", "read_mesh", "reconstruct_traces", "recover_element_solution", "refine_uniform",
    "solve", "solve_hip", "solve_problem", "spd_check", "tau", "test1", "write_mesh",
]
