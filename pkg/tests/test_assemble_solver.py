import numpy as np
import pytest
import scipy.sparse as sp
from scipy.io import mmread

from hybridrt.assemble import solve_condensed, trace_dof_map
from hybridrt.basis import ReferenceTables
from hybridrt.mesh import uniform_square_mesh
from hybridrt.postproc import l2_errors
from hybridrt.solver import (
    export_solution_system,
    manufactured_f,
    solve_poisson,
)

VARIANT_NAMES = ("usual", "stab1", "stab2")


def test_trace_dof_numbering_and_size():
    mesh = uniform_square_mesh(16)
    for k in (1, 4):
        tables = ReferenceTables(k)
        dofs = trace_dof_map(mesh, tables)
        assert dofs.n_global == 736 * (k + 1)
        ranks = dofs.rank[~mesh.boundary]
        assert ranks.min() == 0 and ranks.max() == 735
        assert np.all(dofs.rank[mesh.boundary] == -1)
        assert not dofs.uhat_dir.any()


def test_dirichlet_projection_frozen():
    # face from (0,0) to (1/2,0) with data u = x1: moments int psi_r s/2 ds
    mesh = uniform_square_mesh(2)
    tables = ReferenceTables(1)
    dofs = trace_dof_map(mesh, tables, u_bc=lambda xy: xy[:, 0])
    f = int(np.flatnonzero((mesh.faces == [0, 3]).all(axis=1))[0])
    assert mesh.boundary[f]
    assert abs(dofs.uhat_dir[f, 0] - 0.25) < 1e-15
    assert abs(dofs.uhat_dir[f, 1] - np.sqrt(3) / 12) < 1e-15


@pytest.mark.parametrize("variant", VARIANT_NAMES)
def test_global_matrix_exactly_symmetric_and_spd(variant):
    r = solve_poisson(uniform_square_mesh(3), 2, variant, keep_system=True)
    A, b = r.system
    assert (A - A.T).nnz == 0
    w = np.linalg.eigvalsh(A.toarray())
    assert w.min() > 0
    assert r.residual <= 1e-10
    assert r.backend == "scipy.sparse.linalg.splu"


def test_solve_condensed_residual_guard():
    # condition number ~1e17 leaves a residual far above the guard
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    A = sp.csc_matrix(Q @ np.diag(np.logspace(0, -17, 6)) @ Q.T)
    with pytest.raises(RuntimeError, match="residual"):
        solve_condensed(A, rng.standard_normal(6))


def test_matrix_market_export_roundtrip(tmp_path):
    r = solve_poisson(uniform_square_mesh(2), 1, "usual", keep_system=True)
    pa, pb = export_solution_system(r, str(tmp_path / "sys"))
    A2 = mmread(pa).tocsc()
    b2 = np.asarray(mmread(pb)).ravel()
    assert (A2 - r.system[0]).nnz == 0
    assert np.array_equal(b2, r.system[1])


def test_variant_equivalence_small():
    mesh = uniform_square_mesh(2)
    for k in (1, 2, 3):
        rs = [solve_poisson(mesh, k, v) for v in VARIANT_NAMES]
        for other in rs[1:]:
            assert np.abs(rs[0].uhat - other.uhat).max() <= 1e-8 * np.abs(rs[0].uhat).max()
            assert np.abs(rs[0].U - other.U).max() <= 1e-8 * np.abs(rs[0].U).max()
            assert np.abs(rs[0].Qfull - other.Qfull).max() <= 1e-8 * np.abs(rs[0].Qfull).max()


def test_stab1_jump_flag_changes_nothing():
    mesh = uniform_square_mesh(3)
    a = solve_poisson(mesh, 2, "stab1")
    b = solve_poisson(mesh, 2, "stab1", stab1_jump=True)
    assert np.abs(a.uhat - b.uhat).max() <= 1e-10 * np.abs(a.uhat).max()
    assert np.abs(a.Qfull - b.Qfull).max() <= 1e-10 * np.abs(a.Qfull).max()


@pytest.mark.parametrize("variant", VARIANT_NAMES)
def test_polynomial_exactness_nonzero_dirichlet(variant):
    # u = x1 x2 is harmonic; for k >= 2 the scheme must reproduce it exactly
    u = lambda xy: xy[:, 0] * xy[:, 1]
    q = lambda xy: np.stack([-xy[:, 1], -xy[:, 0]])
    r = solve_poisson(
        uniform_square_mesh(2), 2, variant, f=lambda xy: np.zeros(len(xy)), u_bc=u
    )
    eu, eq = l2_errors(r, u_exact=u, q_exact=q)
    assert eu < 1e-12 and eq < 1e-12


def test_constant_dirichlet_data():
    r = solve_poisson(
        uniform_square_mesh(2),
        1,
        "stab2",
        f=lambda xy: np.zeros(len(xy)),
        u_bc=lambda xy: np.full(len(xy), 3.5),
    )
    assert np.abs(r.U[:, 0] - 3.5).max() < 1e-12
    assert np.abs(r.U[:, 1:]).max() < 1e-12
    assert np.abs(r.Qfull).max() < 1e-11


@pytest.mark.parametrize("variant", VARIANT_NAMES)
def test_phase_times_accounting(variant):
    r = solve_poisson(uniform_square_mesh(4), 3, variant)
    t = r.times
    assert t.local == t.extra_basis + t.extra_div + t.local_matrix
    assert t.total >= t.onetime + t.local + t.glob - 1e-9
    assert t.extra_basis > 0 and t.local_matrix > 0 and t.glob > 0
    if variant == "usual":
        assert t.extra_div > 0
    else:
        assert t.extra_div == 0.0
    d = t.as_dict()
    assert set(d) == {"onetime", "local", "extra_basis", "extra_div", "local_matrix", "global", "total"}


def test_degree_zero_rejected():
    with pytest.raises(ValueError, match="k >= 1"):
        solve_poisson(uniform_square_mesh(2), 0)
