"""Multigroup discrete-ordinates k-eigenvalue solver for 1D slabs.

Pairs linear-discontinuous transport sweeps with a continuous linear-FEM
diffusion eigenproblem carrying additive second-moment closures, so that
one sweep per outer iteration suffices; an unaccelerated power-iteration
baseline is included for comparison studies.
"""

from .eigensolver import (
    EigenSolution,
    SlabProblem,
    SolverConfig,
    convergence_test,
    solve_pi,
    solve_smm,
)
from .materials import CrossSectionSet, MaterialGrid, material_grid, removal_xs, validate
from .mesh import REFLECTIVE, VACUUM, SlabMesh, build_uniform, interior_nodes
from .quadrature import AngularQuadrature, boundary_factor, gauss_legendre
from .workbench import (
    ProblemFile,
    StudyResult,
    estimate_order,
    figure_of_merit,
    parse_problem_file,
    run_refinement_study,
)

__version__ = "0.1.0"

__all__ = [
    "AngularQuadrature",
    "CrossSectionSet",
    "EigenSolution",
    "MaterialGrid",
    "ProblemFile",
    "REFLECTIVE",
    "SlabMesh",
    "SlabProblem",
    "SolverConfig",
    "StudyResult",
    "VACUUM",
    "boundary_factor",
    "build_uniform",
    "convergence_test",
    "estimate_order",
    "figure_of_merit",
    "gauss_legendre",
    "interior_nodes",
    "material_grid",
    "parse_problem_file",
    "removal_xs",
    "run_refinement_study",
    "solve_pi",
    "solve_smm",
    "validate",
]
