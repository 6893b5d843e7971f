"""Independent reference computations used across the test suite.

Everything here is deliberately low-tech: closed-form integrals, central
finite differences, dense un-condensed linear algebra.  The solver modules
are checked against these, never against themselves.
"""

from math import factorial

import numpy as np

from hybridrt.assemble import trace_dof_map
from hybridrt.basis import ReferenceTables, build_extra_basis, extra_divergence
from hybridrt.local import element_geometry, full_flux_matrices
from hybridrt.mesh import mesh_from_cells


def monomial_integral(a, b):
    """int over the reference triangle of x^a y^b = a! b! / (a+b+2)!."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def random_triangle(rng, min_area=0.04):
    """A well-shaped random triangle, counterclockwise, random position/scale."""
    while True:
        v = rng.uniform(0.0, 1.0, size=(3, 2))
        e1, e2 = v[1] - v[0], v[2] - v[0]
        area2 = e1[0] * e2[1] - e1[1] * e2[0]
        if area2 < 0:
            v = v[[0, 2, 1]]
            area2 = -area2
        if area2 / 2.0 >= min_area:
            scale = rng.uniform(0.3, 2.5)
            shift = rng.uniform(-3.0, 3.0, size=2)
            return v * scale + shift


def single_element_mesh(verts):
    return mesh_from_cells(np.asarray(verts, dtype=float), np.array([[0, 1, 2]]))


def fd_gradient(fun, pts, h=1e-6):
    """Central-difference gradients of fun(pts)->(m, npts); returns (m, npts, 2)."""
    out = []
    for d in range(2):
        dp = np.zeros((1, 2))
        dp[0, d] = h
        out.append((fun(pts + dp) - fun(pts - dp)) / (2.0 * h))
    return np.stack(out, axis=-1)


def monolithic_solve(mesh, k, f, u_bc=None):
    """Dense un-condensed saddle-point solve of the hybridized problem.

    Unknowns: per element the n flux and m scalar coefficients, then the
    interior trace moments.  Equations: the two local rows of the mixed
    problem on every element, plus normal-flux continuity moments on every
    interior face.  No static condensation, no sparsity, no reuse of the
    production assembly or solve paths.
    """
    tables = ReferenceTables(k)
    m, mp, n = tables.m, tables.mp, tables.n
    dofs = trace_dof_map(mesh, tables, u_bc)
    ne = mesh.n_elements
    blk = n + m
    ntot = ne * blk + dofs.n_global
    A = np.zeros((ntot, ntot))
    rhs = np.zeros(ntot)

    geoms, Ds, bQs = [], [], []
    for e in range(ne):
        geom = element_geometry(tables, mesh, e)
        extra = build_extra_basis(tables, geom)
        div = extra_divergence(tables, geom, extra)
        D, bQ = full_flux_matrices(tables, geom, extra, div)
        geoms.append(geom)
        Ds.append(D)
        bQs.append(bQ)

        qr = e * blk
        ur = qr + n
        # flux rows: Q - D^T U + bQ uhat = 0
        A[qr : qr + n, qr : qr + n] = np.eye(n)
        A[qr : qr + n, ur : ur + m] = -D.T
        # scalar rows: D Q = Pf
        A[ur : ur + m, qr : qr + n] = D
        rhs[ur : ur + m] = tables.VW @ f(geom.xy_vol)
        for le in range(3):
            fid = mesh.elem_faces[e, le]
            col = bQ[:, le * mp : (le + 1) * mp]
            if dofs.rank[fid] >= 0:
                g = ne * blk + dofs.rank[fid] * mp
                A[qr : qr + n, g : g + mp] += col
            else:
                rhs[qr : qr + n] -= col @ dofs.uhat_dir[fid]

    # continuity rows: sum over adjacent elements of |K| <psi_r, q.n_out>_F = 0
    for fid in np.flatnonzero(~mesh.boundary):
        g = ne * blk + dofs.rank[fid] * mp
        for e in mesh.face_elems[fid]:
            le = int(np.flatnonzero(mesh.elem_faces[e] == fid)[0])
            qr = e * blk
            A[g : g + mp, qr : qr + n] += geoms[e].area * bQs[e][:, le * mp : (le + 1) * mp].T

    x = np.linalg.solve(A, rhs)
    U = np.empty((ne, m))
    Q = np.empty((ne, n))
    for e in range(ne):
        Q[e] = x[e * blk : e * blk + n]
        U[e] = x[e * blk + n : (e + 1) * blk]
    uhat = dofs.uhat_dir.copy()
    if dofs.n_global:
        uhat[dofs.rank >= 0] = x[ne * blk :].reshape(-1, mp)
    return {"U": U, "Qfull": Q, "uhat": uhat}
