"""End-to-end driver: mesh + degree + variant to solved problem with timings.

Phase accounting mirrors how such solvers are usually profiled: one-time
setup (reference tables, dof numbering, boundary data), the element-local
work split into extra-basis construction, extra-basis divergences (priced
only by the usual variant) and the local matrix problems, then the global
trace problem including element matrices, assembly and the sparse solve.
Scalar/flux recovery happens after the total clock stops; it is validation
work, not part of the solver pipeline being priced.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .assemble import (
    BACKEND,
    assemble_condensed,
    export_system,
    solve_condensed,
    trace_dof_map,
)
from .basis import ReferenceTables, build_extra_basis, extra_divergence
from .local import (
    Variant,
    build_local_ops,
    element_geometry,
    element_matrix_vector,
    include_jump_term,
    variant_from_string,
)

TWO_PI = 2.0 * np.pi


def manufactured_u(xy):
    return np.sin(TWO_PI * xy[:, 0]) * np.sin(TWO_PI * xy[:, 1])


def manufactured_q(xy):
    """Exact flux q = -grad u of the manufactured solution."""
    sx, cx = np.sin(TWO_PI * xy[:, 0]), np.cos(TWO_PI * xy[:, 0])
    sy, cy = np.sin(TWO_PI * xy[:, 1]), np.cos(TWO_PI * xy[:, 1])
    return np.stack([-TWO_PI * cx * sy, -TWO_PI * sx * cy])


def manufactured_f(xy):
    return 8.0 * np.pi**2 * manufactured_u(xy)


@dataclass
class PhaseTimes:
    onetime: float = 0.0
    extra_basis: float = 0.0
    extra_div: float = 0.0
    local_matrix: float = 0.0
    glob: float = 0.0
    total: float = 0.0

    @property
    def local(self):
        return self.extra_basis + self.extra_div + self.local_matrix

    def as_dict(self):
        return {
            "onetime": self.onetime,
            "local": self.local,
            "extra_basis": self.extra_basis,
            "extra_div": self.extra_div,
            "local_matrix": self.local_matrix,
            "global": self.glob,
            "total": self.total,
        }


@dataclass
class SolveResult:
    mesh: object
    tables: object
    variant: Variant
    stab1_jump: bool
    dofs: object
    uhat: np.ndarray  # (nf, m') trace moments, Dirichlet faces included
    U: np.ndarray  # (ne, m) scalar coefficients
    Qfull: np.ndarray  # (ne, n) flux coefficients, full interleaved ordering
    extras: list
    geoms: list
    times: PhaseTimes
    residual: float
    backend: str = BACKEND
    system: tuple | None = field(default=None, repr=False)

    @property
    def k(self):
        return self.tables.k

    @property
    def n_global(self):
        return self.dofs.n_global


def solve_poisson(
    mesh,
    k,
    variant=Variant.USUAL,
    *,
    f=manufactured_f,
    u_bc=None,
    stab1_jump=False,
    keep_system=False,
):
    """Solve -div(grad u) = f on the mesh with Dirichlet data u_bc (default 0)."""
    if isinstance(variant, str):
        variant = variant_from_string(variant)
    if k < 1:
        raise ValueError("solver requires polynomial degree k >= 1")

    times = PhaseTimes()
    t_run = time.perf_counter()

    t0 = time.perf_counter()
    tables = ReferenceTables(k)
    dofs = trace_dof_map(mesh, tables, u_bc)
    times.onetime = time.perf_counter() - t0

    ne = mesh.n_elements
    need_div = variant is Variant.USUAL
    geoms, extras, ops_list = [], [], []
    for e in range(ne):
        t0 = time.perf_counter()
        geom = element_geometry(tables, mesh, e)
        extra = build_extra_basis(tables, geom)
        times.extra_basis += time.perf_counter() - t0

        div = None
        if need_div:
            t0 = time.perf_counter()
            div = extra_divergence(tables, geom, extra)
            times.extra_div += time.perf_counter() - t0

        t0 = time.perf_counter()
        ops = build_local_ops(tables, geom, extra, variant, f(geom.xy_vol), div)
        times.local_matrix += time.perf_counter() - t0

        geoms.append(geom)
        extras.append(extra)
        ops_list.append(ops)

    t0 = time.perf_counter()
    jump = include_jump_term(variant, stab1_jump)
    contribs = (
        (e, *element_matrix_vector(ops_list[e], jump)) for e in range(ne)
    )
    A, b = assemble_condensed(mesh, dofs, contribs)
    x, residual = solve_condensed(A, b)
    times.glob = time.perf_counter() - t0
    times.total = time.perf_counter() - t_run

    uhat = dofs.uhat_dir.copy()
    if dofs.n_global:
        uhat[dofs.rank >= 0] = x.reshape(-1, tables.mp)
    U = np.empty((ne, tables.m))
    Qfull = np.empty((ne, tables.n))
    for e in range(ne):
        uh_loc = uhat[mesh.elem_faces[e]].ravel()
        ops = ops_list[e]
        U[e] = ops.Umu @ uh_loc + ops.Uf
        Qfull[e] = ops.Qfull_mu @ uh_loc + ops.Qfull_f

    return SolveResult(
        mesh=mesh,
        tables=tables,
        variant=variant,
        stab1_jump=stab1_jump,
        dofs=dofs,
        uhat=uhat,
        U=U,
        Qfull=Qfull,
        extras=extras,
        geoms=geoms,
        times=times,
        residual=residual,
        system=(A, b) if keep_system else None,
    )


def export_solution_system(result, path_prefix):
    if result.system is None:
        raise ValueError("solve was run without keep_system=True")
    return export_system(*result.system, path_prefix)
