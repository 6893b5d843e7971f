"""Solution recovery diagnostics and output.

L2 errors against a reference solution, the discrete invariants the scheme
promises (single-valued normal flux moments across interior faces, local
conservation against the source moments), uniform-grid sampling, and mesh
convergence rates.
"""

import csv

import numpy as np

from .basis import extra_divergence, extra_values_at
from .local import full_flux_matrices
from .quadrature import MAX_DEGREE, triangle_rule
from .solver import manufactured_q, manufactured_u


def _flux_values(result, e, ref_pts, xy, V):
    """q_h at given reference points of element e; returns (2, npts)."""
    tables = result.tables
    m = tables.m
    Qd = result.Qfull[e][: 2 * m].reshape(m, 2)
    q = Qd.T @ V
    vals = extra_values_at(tables, result.extras[e], result.geoms[e].jac_inv, ref_pts, xy)
    return q + np.einsum("c,cjq->jq", result.Qfull[e][2 * m :], vals)


def l2_errors(result, u_exact=manufactured_u, q_exact=manufactured_q, degree=None):
    """Global L2 errors (err_u, err_q) by per-element quadrature."""
    tables = result.tables
    mesh = result.mesh
    if degree is None:
        degree = min(2 * tables.k + 6, MAX_DEGREE)
    rule = triangle_rule(degree)
    V = tables.dub.eval(rule.points)
    wn = 2.0 * rule.weights
    err_u = err_q = 0.0
    for e in range(mesh.n_elements):
        geom = result.geoms[e]
        p0 = mesh.vertices[mesh.elements[e, 0]]
        xy = p0 + rule.points @ geom.jac.T
        du = result.U[e] @ V - u_exact(xy)
        err_u += geom.area * (wn @ du**2)
        dq = _flux_values(result, e, rule.points, xy, V) - q_exact(xy)
        err_q += geom.area * (wn @ (dq[0] ** 2 + dq[1] ** 2))
    return np.sqrt(err_u), np.sqrt(err_q)


def flux_jump_moments(result):
    """(max interior jump moment, L2 norm of q_h).

    For every interior face, the moments <psi_r, [[q_h . n]]>_F accumulated
    from both sides with outward normals; single-valuedness of the hybridized
    flux makes these vanish up to roundoff.
    """
    tables = result.tables
    mesh = result.mesh
    m, mp = tables.m, tables.mp
    jump = np.zeros((mesh.n_faces, mp))
    for e in range(mesh.n_elements):
        geom = result.geoms[e]
        Qd = result.Qfull[e][: 2 * m].reshape(m, 2)
        cext = result.Qfull[e][2 * m :]
        for le in range(3):
            f = mesh.elem_faces[e, le]
            ev = tables.edge_vals[le, geom.edge_orient[le]]
            qface = Qd.T @ ev
            qface = qface + np.einsum("c,cjq->jq", cext, result.extras[e].face[:, le])
            qn = geom.edge_normal[le] @ qface
            jump[f] += geom.edge_len[le] * (tables.psiW @ qn)
    worst = np.abs(jump[~mesh.boundary]).max() if mesh.n_interior_faces else 0.0
    qnorm = np.sqrt(
        sum(result.geoms[e].area * (result.Qfull[e] @ result.Qfull[e]) for e in range(mesh.n_elements))
    )
    return worst, qnorm


def conservation_residual(result, f=None):
    """(max elementwise conservation residual, source moment scale).

    Residual of (1/|K|)(div q_h - f, q_i)_K over all elements and scalar
    modes; the hybridized scheme satisfies it to solver precision.
    """
    from .solver import manufactured_f

    if f is None:
        f = manufactured_f
    tables = result.tables
    mesh = result.mesh
    worst = scale = 0.0
    for e in range(mesh.n_elements):
        geom = result.geoms[e]
        div = extra_divergence(tables, geom, result.extras[e])
        D, _ = full_flux_matrices(tables, geom, result.extras[e], div)
        Pf = tables.VW @ f(geom.xy_vol)
        r = D @ result.Qfull[e] - Pf
        worst = max(worst, np.abs(r).max())
        scale = max(scale, np.abs(Pf).max())
    return worst, scale


def sample_on_grid(result, nsample):
    """Sample (x, y, u_h, q1_h, q2_h) on an nsample x nsample uniform grid.

    Only available on the structured unit-square meshes, where point location
    is a cell-index computation.
    """
    mesh = result.mesh
    if mesh.grid_n is None:
        raise ValueError("grid sampling needs a uniform_square_mesh")
    n = mesh.grid_n
    xs = np.linspace(0.0, 1.0, nsample)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    ci = np.minimum((pts[:, 0] * n).astype(int), n - 1)
    cj = np.minimum((pts[:, 1] * n).astype(int), n - 1)
    xi = pts[:, 0] * n - ci
    eta = pts[:, 1] * n - cj
    elem = (ci * n + cj) * 2 + (xi < eta)  # upper triangle past the diagonal

    tables = result.tables
    out = np.empty((pts.shape[0], 5))
    out[:, :2] = pts
    for e in np.unique(elem):
        sel = np.flatnonzero(elem == e)
        geom = result.geoms[e]
        p0 = result.mesh.vertices[result.mesh.elements[e, 0]]
        ref = (pts[sel] - p0) @ geom.jac_inv.T
        V = tables.dub.eval(ref)
        out[sel, 2] = result.U[e] @ V
        out[sel, 3:] = _flux_values(result, e, ref, pts[sel], V).T
    return out


def write_samples_csv(samples, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u", "q1", "q2"])
        w.writerows(samples.tolist())


def convergence_rates(errors, hs):
    """Observed orders log(e_i/e_{i+1}) / log(h_i/h_{i+1})."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(hs, dtype=float)
    return list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))
