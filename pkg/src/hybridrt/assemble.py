"""Global condensed system on the mesh skeleton.

Unknowns are the k+1 Legendre moments of the scalar trace on every interior
face; boundary (Dirichlet) faces carry data and are eliminated while
scattering.  Only the lower triangle is accumulated and then mirrored, which
makes the sparse matrix symmetric exactly, not just to rounding.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

BACKEND = "scipy.sparse.linalg.splu"


@dataclass
class TraceDofs:
    mp: int
    rank: np.ndarray  # (nf,) interior face rank, -1 on boundary
    n_global: int
    uhat_dir: np.ndarray  # (nf, mp) Dirichlet moments, zero on interior faces


def trace_dof_map(mesh, tables, u_bc=None):
    """Number interior-face dofs and project Dirichlet data onto face moments."""
    mp = tables.mp
    rank = np.full(mesh.n_faces, -1, dtype=np.int64)
    interior = ~mesh.boundary
    rank[interior] = np.arange(int(interior.sum()))
    uhat_dir = np.zeros((mesh.n_faces, mp))
    if u_bc is not None:
        s = tables.s
        for f in np.flatnonzero(mesh.boundary):
            a, b = mesh.vertices[mesh.faces[f]]
            pts = a[None, :] + s[:, None] * (b - a)[None, :]
            uhat_dir[f] = tables.psiW @ u_bc(pts)
    return TraceDofs(mp, rank, int(interior.sum()) * mp, uhat_dir)


def assemble_condensed(mesh, dofs, element_contribs):
    """Sum element (A_K, b_K) pairs into the global sparse system.

    element_contribs yields one (e, A_K, b_K) triple per element with A_K of
    size 3m' x 3m', rows/cols in local-face-major, moment-minor order.
    """
    mp = dofs.mp
    n = dofs.n_global
    rows, cols, vals = [], [], []
    b = np.zeros(n)
    for e, A_K, b_K in element_contribs:
        fids = mesh.elem_faces[e]
        gl = np.where(
            dofs.rank[fids][:, None] >= 0,
            dofs.rank[fids][:, None] * mp + np.arange(mp)[None, :],
            -1,
        ).ravel()
        dval = dofs.uhat_dir[fids].ravel()
        b_eff = b_K - A_K @ dval
        own = np.flatnonzero(gl >= 0)
        gi = gl[own]
        np.add.at(b, gi, b_eff[own])
        sub = A_K[np.ix_(own, own)]
        I = np.repeat(gi, gi.size)
        J = np.tile(gi, gi.size)
        keep = I >= J
        rows.append(I[keep])
        cols.append(J[keep])
        vals.append(sub.ravel()[keep])
    if n == 0:
        return sp.csc_matrix((0, 0)), b
    low = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsc()
    A = (low + sp.tril(low, -1).T).tocsc()
    return A, b


def solve_condensed(A, b, rtol=1e-10):
    """Direct sparse solve with a residual guard; returns (x, residual)."""
    if A.shape[0] == 0:
        return np.zeros(0), 0.0
    lu = splu(A)
    x = lu.solve(b)
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b) / bnorm if bnorm > 0 else np.linalg.norm(A @ x)
    if not res <= rtol:
        raise RuntimeError(f"{BACKEND} residual {res:.3e} exceeds {rtol:.0e}")
    return x, res


def export_system(A, b, path_prefix):
    """Write the assembled system in Matrix Market form for outside tools."""
    from scipy.io import mmwrite

    mmwrite(f"{path_prefix}_matrix.mtx", sp.csc_matrix(A))
    mmwrite(f"{path_prefix}_rhs.mtx", np.asarray(b).reshape(-1, 1))
    return f"{path_prefix}_matrix.mtx", f"{path_prefix}_rhs.mtx"
