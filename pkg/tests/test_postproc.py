import csv

import numpy as np
import pytest

from hybridrt.mesh import mesh_from_cells, uniform_square_mesh
from hybridrt.postproc import (
    conservation_residual,
    convergence_rates,
    flux_jump_moments,
    l2_errors,
    sample_on_grid,
    write_samples_csv,
)
from hybridrt.solver import manufactured_u, solve_poisson

VARIANT_NAMES = ("usual", "stab1", "stab2")


@pytest.mark.parametrize("variant", VARIANT_NAMES)
def test_flux_moments_single_valued(variant):
    r = solve_poisson(uniform_square_mesh(4), 2, variant)
    worst, qnorm = flux_jump_moments(r)
    assert qnorm > 1.0  # sanity: the manufactured flux is O(2 pi)
    assert worst <= 1e-10 * qnorm


@pytest.mark.parametrize("variant", VARIANT_NAMES)
def test_local_conservation(variant):
    r = solve_poisson(uniform_square_mesh(4), 3, variant)
    worst, scale = conservation_residual(r)
    assert scale > 1.0
    assert worst <= 1e-10 * scale


def test_errors_shrink_with_refinement():
    e4 = l2_errors(solve_poisson(uniform_square_mesh(4), 2, "stab1"))
    e8 = l2_errors(solve_poisson(uniform_square_mesh(8), 2, "stab1"))
    assert e8[0] < 0.2 * e4[0]
    assert e8[1] < 0.2 * e4[1]


def test_sample_on_grid_matches_solution(tmp_path):
    r = solve_poisson(uniform_square_mesh(8), 3, "stab2")
    samples = sample_on_grid(r, 9)
    assert samples.shape == (81, 5)
    # boundary of the unit square: u = 0 there, and u_h traces are small
    exact = manufactured_u(samples[:, :2])
    assert np.abs(samples[:, 2] - exact).max() < 2e-3
    path = tmp_path / "samples.csv"
    write_samples_csv(samples, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "u", "q1", "q2"]
    assert len(rows) == 82


def test_sample_on_grid_needs_structured_mesh():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mesh = mesh_from_cells(verts, np.array([[0, 1, 2]]))
    r = solve_poisson(mesh, 1, "usual")
    with pytest.raises(ValueError, match="uniform_square_mesh"):
        sample_on_grid(r, 4)


def test_convergence_rates_helper():
    hs = [1 / 4, 1 / 8, 1 / 16]
    errs = [2.0 * h**3 for h in hs]
    rates = convergence_rates(errs, hs)
    assert np.allclose(rates, 3.0, atol=1e-12)
