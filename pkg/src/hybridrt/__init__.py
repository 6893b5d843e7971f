"""Hybridized Raviart-Thomas solvers for the 2-D Poisson problem.

Three mathematically equivalent variants of the hybridized mixed method,
differing in how much of the flux space is moved into a stabilization term:
the classic formulation and two subspace-stabilized ones that avoid the
per-element divergence work of the Raviart-Thomas extra functions.
"""

from .basis import DubinerBasis, ReferenceTables, build_extra_basis, segment_basis
from .local import Variant, variant_from_string
from .mesh import Mesh, mesh_from_cells, uniform_square_mesh
from .postproc import (
    conservation_residual,
    convergence_rates,
    flux_jump_moments,
    l2_errors,
    sample_on_grid,
    write_samples_csv,
)
from .quadrature import segment_rule, triangle_rule
from .solver import (
    PhaseTimes,
    SolveResult,
    manufactured_f,
    manufactured_q,
    manufactured_u,
    solve_poisson,
)

__all__ = [
    "DubinerBasis",
    "Mesh",
    "PhaseTimes",
    "ReferenceTables",
    "SolveResult",
    "Variant",
    "build_extra_basis",
    "conservation_residual",
    "convergence_rates",
    "flux_jump_moments",
    "l2_errors",
    "manufactured_f",
    "manufactured_q",
    "manufactured_u",
    "mesh_from_cells",
    "sample_on_grid",
    "segment_basis",
    "segment_rule",
    "solve_poisson",
    "triangle_rule",
    "uniform_square_mesh",
    "variant_from_string",
    "write_samples_csv",
]

__version__ = "0.1.0"
