"""Orthonormal polynomial bases on the reference triangle and its edges.

Scalar space: the Dubiner modal basis on T = {x, y >= 0, x + y <= 1},
normalized so that (1/|T|) int_T q_i q_j = delta_ij.  Under an affine map to a
physical triangle K this measure-normalized Gram matrix is unchanged, so every
element sees an exactly orthonormal scalar basis for free.

Vector flux space: the Raviart-Thomas space [P_k]^2 + x*Ptilde_k.  The [P_k]^2
part is spanned by q_i e_j (Dubiner mode times coordinate direction).  The
span of the extra functions x*q (q of total degree exactly k) is element
dependent, so `build_extra_basis` orthonormalizes the candidates x*q_i against
[P_k]^2 and each other per element, in the element's own measure-normalized L2
inner product, carrying face traces and a coefficient record along.

Edge space: Legendre polynomials in the arc-length parameter s in [0, 1] of
the globally oriented edge, normalized so int_0^1 psi_r psi_t = delta_rt.
"""

from dataclasses import dataclass

import numpy as np

from .quadrature import MAX_DEGREE, segment_rule, triangle_rule

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def jacobi_all(nmax, alpha, beta, x):
    """Jacobi polynomials P_0..P_nmax^(alpha,beta) at points x, shape (nmax+1, len(x)).

    Three-term recurrence; nmax = -1 returns an empty table.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((max(nmax + 1, 0), x.size))
    if nmax < 0:
        return out
    out[0] = 1.0
    if nmax >= 1:
        out[1] = (alpha - beta) / 2.0 + (alpha + beta + 2.0) / 2.0 * x
    for n in range(2, nmax + 1):
        c = 2.0 * n + alpha + beta
        a1 = 2.0 * n * (n + alpha + beta) * (c - 2.0)
        a2 = (c - 1.0) * (alpha * alpha - beta * beta)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (n + alpha - 1.0) * (n + beta - 1.0) * c
        out[n] = ((a2 + a3 * x) * out[n - 1] - a4 * out[n - 2]) / a1
    return out


def scalar_dim(k, d=2):
    """dim P_k in d variables; everything here runs with d = 2."""
    if d == 2:
        return (k + 1) * (k + 2) // 2
    from math import comb

    return comb(k + d, d)


class DubinerBasis:
    """Measure-normalized Dubiner basis of P_k on the reference triangle.

    Modes are ordered by total degree, so the last k+1 modes have total degree
    exactly k; mode 0 is the constant 1.
    """

    def __init__(self, k):
        if k < 0 or k > MAX_DEGREE:
            raise ValueError(f"degree must be in [0, {MAX_DEGREE}], got {k}")
        self.k = k
        self.modes = [(p, l - p) for l in range(k + 1) for p in range(l + 1)]
        self.m = len(self.modes)

    def _collapsed(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        denom = 1.0 - y
        safe = np.where(np.abs(denom) > 1e-14, denom, 1.0)
        eta1 = np.where(np.abs(denom) > 1e-14, 2.0 * x / safe - 1.0, -1.0)
        eta2 = 2.0 * y - 1.0
        return eta1, eta2, denom

    def eval(self, pts):
        """Values at pts (npts, 2); returns (m, npts)."""
        eta1, eta2, denom = self._collapsed(pts)
        k = self.k
        P1 = jacobi_all(k, 0, 0, eta1)
        out = np.empty((self.m, eta1.size))
        dpow = np.ones_like(denom)
        for p in range(k + 1):
            P2 = jacobi_all(k - p, 2 * p + 1, 0, eta2)
            base = P1[p] * dpow
            for q in range(k - p + 1):
                l = p + q
                scale = np.sqrt((2 * p + 1) * (p + q + 1))
                out[l * (l + 1) // 2 + p] = scale * base * P2[q]
            dpow = dpow * denom
        return out

    def grad(self, pts):
        """Reference gradients at pts; returns (m, npts, 2).

        The collapsed-coordinate singularity at the apex (0, 1) cancels
        exactly for every mode, so values are finite on the closed triangle.
        """
        eta1, eta2, denom = self._collapsed(pts)
        k = self.k
        P1 = jacobi_all(k, 0, 0, eta1)
        J11 = jacobi_all(k - 1, 1, 1, eta1)
        out = np.empty((self.m, eta1.size, 2))
        dpow1 = np.ones_like(denom)  # denom**(p-1), treated as 1 for p <= 1
        for p in range(k + 1):
            P2 = jacobi_all(k - p, 2 * p + 1, 0, eta2)
            D2 = jacobi_all(k - p - 1, 2 * p + 2, 1, eta2)
            dP1 = 0.0 if p == 0 else 0.5 * (p + 1) * J11[p - 1]
            for q in range(k - p + 1):
                l = p + q
                i = l * (l + 1) // 2 + p
                scale = np.sqrt((2 * p + 1) * (p + q + 1))
                dP2 = 0.0 if q == 0 else 0.5 * (q + 2 * p + 2) * D2[q - 1]
                if p == 0:
                    out[i, :, 0] = 0.0
                    out[i, :, 1] = scale * 2.0 * dP2
                else:
                    out[i, :, 0] = scale * 2.0 * dP1 * dpow1 * P2[q]
                    out[i, :, 1] = scale * (
                        dP1 * (1.0 + eta1) * dpow1 * P2[q]
                        + P1[p] * (2.0 * dpow1 * denom * dP2 - p * dpow1 * P2[q])
                    )
            if p >= 1:
                dpow1 = dpow1 * denom
        return out


def segment_basis(k, s):
    """Normalized Legendre basis on [0,1] at parameters s; returns (k+1, len(s))."""
    s = np.asarray(s, dtype=float)
    vals = jacobi_all(k, 0, 0, 2.0 * s - 1.0)
    scale = np.sqrt(2.0 * np.arange(k + 1) + 1.0)
    return vals * scale[:, None]


def reference_divergence_tensor(k):
    """(1/|T|) int_T q_i d(q_j)/dx_r for deg(q_i) <= k-1; shape (2, m-m', m).

    Rows for modes of total degree exactly k vanish identically (the gradient
    of any P_k polynomial has degree <= k-1, orthogonal to those modes), so
    they are omitted.
    """
    dub = DubinerBasis(k)
    m, mp = dub.m, k + 1
    rule = triangle_rule(max(2 * k - 1, 0))
    V = dub.eval(rule.points)
    G = dub.grad(rule.points)
    VW = V[: m - mp] * (2.0 * rule.weights)  # 1/|T| = 2
    out = np.empty((2, m - mp, m))
    for r in range(2):
        out[r] = VW @ G[:, :, r].T
    return out


def reference_divergence_matrix(k):
    """Same data arranged as the ((m-m') x 2m) block for the identity map."""
    ten = reference_divergence_tensor(k)
    mm, m = ten.shape[1], ten.shape[2]
    return np.transpose(ten, (1, 2, 0)).reshape(mm, 2 * m)


class ReferenceTables:
    """Degree-dependent, mesh-independent tables shared by every element.

    Built once per solve; holds quadrature rules, Dubiner values/gradients at
    the volume nodes, Dubiner traces on the three reference edges in both
    orientations of the edge parameter, edge-moment matrices against the edge
    Legendre basis, and the reference divergence tensor.
    """

    def __init__(self, k, vol_degree=None, face_degree=None):
        if k < 0:
            raise ValueError("polynomial degree must be >= 0")
        self.k = k
        self.m = scalar_dim(k)
        self.mp = k + 1
        self.n = 2 * self.m + self.mp
        self.dub = DubinerBasis(k)
        self.vol_rule = triangle_rule(vol_degree if vol_degree is not None else 2 * k + 3)
        self.face_rule = segment_rule(face_degree if face_degree is not None else 2 * k + 3)

        self.V = self.dub.eval(self.vol_rule.points)
        self.G = self.dub.grad(self.vol_rule.points)
        self.wn = 2.0 * self.vol_rule.weights  # weights of the normalized measure
        self.VW = self.V * self.wn  # row i dotted with f-values gives (1/|K|) int q_i f

        s = self.face_rule.points[:, 0]
        self.s = s
        self.psi = segment_basis(k, s)
        self.psiW = self.psi * self.face_rule.weights

        # Edge e of the reference triangle runs from vertex e to vertex e+1.
        # Orientation 0 follows that local direction, orientation 1 reverses
        # it; elements pick whichever matches the global edge parameter.
        self.edge_vals = np.empty((3, 2, self.m, s.size))
        self.edge_pts = np.empty((3, 2, s.size, 2))
        for e in range(3):
            p0, p1 = REF_VERTICES[e], REF_VERTICES[(e + 1) % 3]
            for o, (a, b) in enumerate([(p0, p1), (p1, p0)]):
                pts = a[None, :] + s[:, None] * (b - a)[None, :]
                self.edge_pts[e, o] = pts
                self.edge_vals[e, o] = self.dub.eval(pts)

        # FM[e, o][r, i] = int_0^1 psi_r(s) q_i(edge_e(s)) ds
        self.FM = np.einsum("rq,eoiq->eori", self.psiW, self.edge_vals)
        self.refD = reference_divergence_tensor(k)


@dataclass
class ElementGeometry:
    """Per-element affine data and physical quadrature-node coordinates."""

    area: float
    jac: np.ndarray  # reference-to-physical Jacobian, columns v1-v0, v2-v0
    jac_inv: np.ndarray
    xy_vol: np.ndarray  # (nq, 2)
    edge_orient: np.ndarray  # (3,) 0/1, see ReferenceTables
    edge_normal: np.ndarray  # (3, 2) outward unit normals
    edge_len: np.ndarray  # (3,)
    xy_face: np.ndarray  # (3, nfq, 2), nodes in global edge parameter order


class DegenerateBasisError(RuntimeError):
    pass


@dataclass
class ExtraBasis:
    """Orthonormalized flux functions extending [P_k]^2 to the RT space.

    vol/face hold values at the element's volume and edge quadrature nodes.
    coef_cand and coef_dub express each function as a combination of the raw
    candidates x*q_i and of Dubiner-part functions q_i e_j, which allows exact
    re-evaluation at arbitrary points later.
    """

    vol: np.ndarray  # (m', 2, nq)
    face: np.ndarray  # (m', 3, 2, nfq)
    coef_cand: np.ndarray  # (m', m')
    coef_dub: np.ndarray  # (m', m, 2)


def build_extra_basis(tables, geom, reorth_passes=1):
    """Orthonormalize the candidates x*q_i (deg q_i = k) on one element.

    Modified Gram-Schmidt against the (already orthonormal) Dubiner-part block
    and previously accepted functions, with `reorth_passes` extra full passes
    per vector.  Face traces and the coefficient record undergo the identical
    linear combinations.  Raises DegenerateBasisError if a candidate loses
    more than eight digits of norm, which would signal a broken element map.
    """
    m, mp = tables.m, tables.mp
    V, VW = tables.V, tables.VW
    wn = tables.wn
    top = slice(m - mp, m)

    ev = np.empty((3, m, tables.s.size))
    for e in range(3):
        ev[e] = tables.edge_vals[e, geom.edge_orient[e]]

    cand_vol = geom.xy_vol.T[None, :, :] * V[top][:, None, :]  # (mp, 2, nq)
    cand_face = np.empty((mp, 3, 2, tables.s.size))
    for e in range(3):
        for j in range(2):
            cand_face[:, e, j, :] = geom.xy_face[e, :, j][None, :] * ev[e, top, :]

    coef_cand = np.eye(mp)
    coef_dub = np.zeros((mp, m, 2))
    norm0 = np.sqrt(np.einsum("cjq,q,cjq->c", cand_vol, wn, cand_vol))

    for c in range(mp):
        for _ in range(1 + reorth_passes):
            proj = VW @ cand_vol[c].T  # (m, 2)
            for j in range(2):
                cand_vol[c, j] -= proj[:, j] @ V
                for e in range(3):
                    cand_face[c, e, j] -= proj[:, j] @ ev[e]
            coef_dub[c] -= proj
            if c:
                al = np.einsum("bjq,q,jq->b", cand_vol[:c], wn, cand_vol[c])
                cand_vol[c] -= np.tensordot(al, cand_vol[:c], axes=1)
                cand_face[c] -= np.tensordot(al, cand_face[:c], axes=1)
                coef_cand[c] -= al @ coef_cand[:c]
                coef_dub[c] -= np.tensordot(al, coef_dub[:c], axes=1)
        nrm = np.sqrt(np.einsum("jq,q,jq->", cand_vol[c], wn, cand_vol[c]))
        if not nrm > 1e-8 * norm0[c]:
            raise DegenerateBasisError(
                f"extra flux candidate {c} lost its norm ({nrm:.3e} vs {norm0[c]:.3e}); "
                "element map looks degenerate"
            )
        cand_vol[c] /= nrm
        cand_face[c] /= nrm
        coef_cand[c] /= nrm
        coef_dub[c] /= nrm

    return ExtraBasis(cand_vol, cand_face, coef_cand, coef_dub)


def extra_divergence(tables, geom, extra):
    """Divergences of the extra functions at the volume nodes, shape (m', nq).

    Kept out of build_extra_basis on purpose: only the plain hybridized
    variant needs it, and it is priced as its own phase.  Uses the coefficient
    record: div(x*q) = 2q + x . grad q and div(q e_j) = d(q)/dx_j, with
    physical gradients obtained through the inverse Jacobian.
    """
    m, mp = tables.m, tables.mp
    top = slice(m - mp, m)
    gphys = np.einsum("iqr,rj->iqj", tables.G, geom.jac_inv)
    cand_div = 2.0 * tables.V[top] + np.einsum("qj,iqj->iq", geom.xy_vol, gphys[top])
    return extra.coef_cand @ cand_div + np.einsum("cij,iqj->cq", extra.coef_dub, gphys)


def extra_values_at(tables, extra, geom_jac_inv, ref_pts, xy, want_div=False):
    """Evaluate the extra functions (and optionally divergences) anywhere.

    ref_pts are reference coordinates of the evaluation points and xy their
    physical images; returns (m', 2, npts) or a (values, divergences) pair.
    """
    m, mp = tables.m, tables.mp
    top = slice(m - mp, m)
    V = tables.dub.eval(ref_pts)
    cand = xy.T[None, :, :] * V[top][:, None, :]
    vals = np.einsum("cb,bjq->cjq", extra.coef_cand, cand) + np.einsum(
        "cij,iq->cjq", extra.coef_dub, V
    )
    if not want_div:
        return vals
    G = tables.dub.grad(ref_pts)
    gphys = np.einsum("iqr,rj->iqj", G, geom_jac_inv)
    cand_div = 2.0 * V[top] + np.einsum("qj,iqj->iq", xy, gphys[top])
    div = extra.coef_cand @ cand_div + np.einsum("cij,iqj->cq", extra.coef_dub, gphys)
    return vals, div
