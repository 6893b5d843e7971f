"""Element-local problems for the hybridized Raviart-Thomas discretization.

Three mathematically equivalent variants differ only in how the flux space
V = [P_k]^2 + x*Ptilde_k is split into V_a (+) V_s with V_s orthogonal to
grad(P_k):

  usual : V_a = V, V_s = {0}; classic hybridized RT, no stabilization term.
  stab1 : V_a = [P_k]^2, V_s = span of the orthonormalized extra functions.
  stab2 : V_a = [P_{k-1}]^2, V_s = (degree-k Dubiner modes times e_1, e_2)
          plus the extra functions.

The V_s part of the flux never enters the local solve; it is recovered
afterwards by lifting the trace mismatch.  Everything here is written in the
measure-normalized bases of `basis`, which turns all mass matrices into
identities and leaves compact dense systems per element:

  L U = D bQ uhat + bU uhat + Pf,  with  L = D D^T + (Ls B)^T (Ls B)
  Q   = D^T U - bQ uhat

followed by the lifted flux component Ls (B U - uhat).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import scalar_dim


class Variant(Enum):
    USUAL = "usual"
    STAB1 = "stab1"
    STAB2 = "stab2"

    @property
    def display(self):
        return {"usual": "Usual-HRT", "stab1": "Stab-1-HRT", "stab2": "Stab-2-HRT"}[self.value]


def variant_from_string(s):
    key = s.strip().lower().replace("-hrt", "").replace("-", "")
    names = {"usual": Variant.USUAL, "stab1": Variant.STAB1, "stab2": Variant.STAB2}
    if key not in names:
        raise ValueError(f"unknown variant {s!r}; expected usual, stab1 or stab2")
    return names[key]


def flux_split(variant, k):
    """(iD, n_a, n_s): Dubiner modes in V_a, dim V_a, dim V_s.

    In the interleaved flux ordering (q_i e_1, q_i e_2 for i = 0.., then the
    extra functions) V_a always occupies a contiguous prefix and V_s the
    matching suffix, for every variant.
    """
    m, mp = scalar_dim(k), k + 1
    if variant is Variant.USUAL:
        iD, extras_in_a = m, True
    elif variant is Variant.STAB1:
        iD, extras_in_a = m, False
    elif variant is Variant.STAB2:
        iD, extras_in_a = m - mp, False
    else:
        raise ValueError(variant)
    n_a = 2 * iD + (mp if extras_in_a else 0)
    return iD, n_a, 2 * m + mp - n_a


def element_geometry(tables, mesh, e):
    """ElementGeometry for element e of a mesh, under `tables` quadrature."""
    from .basis import ElementGeometry

    P = mesh.vertices[mesh.elements[e]]
    jac = np.column_stack([P[1] - P[0], P[2] - P[0]])
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    jac_inv = np.array([[jac[1, 1], -jac[0, 1]], [-jac[1, 0], jac[0, 0]]]) / det
    fids = mesh.elem_faces[e]
    va = mesh.vertices[mesh.faces[fids, 0]]
    vb = mesh.vertices[mesh.faces[fids, 1]]
    s = tables.s
    xy_face = va[:, None, :] + s[None, :, None] * (vb - va)[:, None, :]
    return ElementGeometry(
        area=0.5 * det,
        jac=jac,
        jac_inv=jac_inv,
        xy_vol=P[0] + tables.vol_rule.points @ jac.T,
        edge_orient=mesh.elem_orient[e],
        edge_normal=mesh.elem_sign[e][:, None] * mesh.face_normal[fids],
        edge_len=mesh.face_len[fids],
        xy_face=xy_face,
    )


def normal_moment_rows(tables, geom, i_lo, i_hi, extra_face=None):
    """Rows (1/|K|) <psi_r, phi . n_outward>_F over the element boundary.

    Covers flux functions q_i e_j for i in [i_lo, i_hi) (interleaved), then
    the extra functions if their face traces are passed.  Columns are the 3*m'
    local face dofs, faces in local order, global edge parameter throughout.
    """
    mp = tables.mp
    nd = i_hi - i_lo
    ne = 0 if extra_face is None else extra_face.shape[0]
    rows = np.zeros((2 * nd + ne, 3 * mp))
    for e in range(3):
        fac = (geom.edge_len[e] / geom.area) * geom.edge_normal[e]  # (2,)
        cols = slice(e * mp, (e + 1) * mp)
        if nd:
            sub = tables.FM[e, geom.edge_orient[e]][:, i_lo:i_hi]  # (mp, nd)
            rows[: 2 * nd, cols] = np.einsum("ri,j->ijr", sub, fac).reshape(2 * nd, mp)
        if ne:
            qn = np.einsum("cjq,j->cq", extra_face[:, e], fac)
            rows[2 * nd :, cols] = qn @ tables.psiW.T
    return rows


@dataclass
class LocalOps:
    """Condensed local solution operators of one element.

    Umu/Qfull_mu map the 3*m' local trace dofs to scalar and flux
    coefficients; Uf/Qfull_f are the source-driven parts.  Flux rows follow
    the full interleaved ordering (V_a prefix of size n_a, V_s suffix), which
    is identical across variants, so coefficient vectors compare directly.
    """

    variant: Variant
    area: float
    n_a: int
    n_s: int
    Umu: np.ndarray
    Uf: np.ndarray
    Qfull_mu: np.ndarray
    Qfull_f: np.ndarray
    Pf: np.ndarray


def full_flux_matrices(tables, geom, extra, div_extra):
    """Divergence and trace-moment matrices over the full flux space.

    D[i, j] = (1/|K|) (q_i, div phi_j)_K for all n flux functions, rows over
    the m scalar modes; bQ[j, (f, r)] = (1/|K|) <psi_r, phi_j . n>_F.  The
    usual variant works with these directly; the independent un-condensed
    checks use them too.
    """
    m, mp = tables.m, tables.mp
    D = np.zeros((m, 2 * m + mp))
    if m > mp:
        D1 = np.einsum("rai,rj->aij", tables.refD, geom.jac_inv)
        D[: m - mp, : 2 * m] = D1.reshape(m - mp, 2 * m)
    D[:, 2 * m :] = tables.VW @ div_extra.T
    bQ = normal_moment_rows(tables, geom, 0, m, extra.face)
    return D, bQ


def build_local_ops(tables, geom, extra, variant, fvals, div_extra=None):
    """Assemble and condense one element's local problem.

    fvals are source values at the volume quadrature nodes.  div_extra
    (divergences of the extra functions at those nodes) is required by the
    usual variant only, whose divergence matrix involves the extra functions.
    """
    m, mp = tables.m, tables.mp
    k = tables.k
    iD, n_a, n_s = flux_split(variant, k)
    nfd = 3 * mp

    if variant is Variant.USUAL:
        if div_extra is None:
            raise ValueError("usual variant needs the extra-function divergences")
        D, bQ = full_flux_matrices(tables, geom, extra, div_extra)
    else:
        D = np.zeros((m, n_a))
        if iD and m > mp:
            D1 = np.einsum("rai,rj->aij", tables.refD[:, :, :iD], geom.jac_inv)
            D[: m - mp, : 2 * iD] = D1.reshape(m - mp, 2 * iD)
        bQ = normal_moment_rows(tables, geom, 0, iD)

    L = D @ D.T
    if n_s:
        Ls = normal_moment_rows(tables, geom, iD, m, extra.face)
        B = np.empty((nfd, m))
        for e in range(3):
            B[e * mp : (e + 1) * mp] = tables.FM[e, geom.edge_orient[e]]
        LB = Ls @ B
        L += LB.T @ LB
        bU = LB.T @ Ls
    else:
        bU = 0.0

    Pf = tables.VW @ fvals
    cho = cho_factor(L, lower=True, check_finite=False)
    rhs = np.empty((m, nfd + 1))
    rhs[:, :nfd] = D @ bQ + bU
    rhs[:, nfd] = Pf
    sol = cho_solve(cho, rhs, check_finite=False)
    Umu, Uf = sol[:, :nfd], sol[:, nfd]

    Qmu = D.T @ Umu - bQ
    Qf = D.T @ Uf
    if n_s:
        Qfull_mu = np.vstack([Qmu, LB @ Umu - Ls])
        Qfull_f = np.concatenate([Qf, LB @ Uf])
    else:
        Qfull_mu, Qfull_f = Qmu, Qf

    return LocalOps(
        variant=variant,
        area=geom.area,
        n_a=n_a,
        n_s=n_s,
        Umu=Umu,
        Uf=Uf,
        Qfull_mu=Qfull_mu,
        Qfull_f=Qfull_f,
        Pf=Pf,
    )


def include_jump_term(variant, stab1_jump=False):
    """Whether the trace-jump stabilization enters the element matrix.

    For stab2 it must; for stab1 the jump operator vanishes identically (its
    lifted test space fills V_s), so it is skipped unless explicitly forced.
    """
    return variant is Variant.STAB2 or (variant is Variant.STAB1 and stab1_jump)


def element_matrix_vector(ops, include_jump):
    """Element contribution (A_K, b_K) to the condensed trace problem."""
    Qa = ops.Qfull_mu[: ops.n_a]
    A = Qa.T @ Qa
    if include_jump and ops.n_s:
        Js = ops.Qfull_mu[ops.n_a :]
        A = A + Js.T @ Js
    A = 0.5 * ops.area * (A + A.T)  # exact symmetry, required by the mirrored insert
    return A, ops.area * (ops.Umu.T @ ops.Pf)
