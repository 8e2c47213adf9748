"""Velocity grids, density fields, moments, distances, entropy
functionals, interpolation, and the normalized-class mapping."""

import math

import numpy as np
import pytest

from softboltz.distribution import (DensityField, VelocityGrid, distances,
                                    entropy_functionals,
                                    interpolate_multilinear, l1s_norm,
                                    maxwellian_on_grid, moments,
                                    normalize_101, second_moment_matrix,
                                    t_star, tail_energy)


@pytest.fixture(scope="module")
def grid():
    return VelocityGrid(dim=2, points_per_axis=32, extent=6.0)


@pytest.fixture(scope="module")
def m_field(grid):
    return maxwellian_on_grid(grid)


def test_grid_validation():
    with pytest.raises(ValueError):
        VelocityGrid(dim=4, points_per_axis=32, extent=6.0)
    with pytest.raises(ValueError):
        VelocityGrid(dim=2, points_per_axis=31, extent=6.0)
    with pytest.raises(ValueError):
        VelocityGrid(dim=2, points_per_axis=8, extent=6.0)
    with pytest.raises(ValueError):
        VelocityGrid(dim=2, points_per_axis=32, extent=-1.0)


def test_grid_cells_come_in_symmetric_pairs(grid):
    ax = grid.axis()
    assert np.allclose(ax, -ax[::-1])
    assert grid.dv == pytest.approx(2.0 * grid.extent / grid.points_per_axis)
    assert grid.points().shape == (32 * 32, 2)


def test_density_field_validation(grid):
    with pytest.raises(ValueError):
        DensityField(grid, -np.ones(grid.shape))
    with pytest.raises(ValueError):
        DensityField(grid, np.full(grid.shape, np.inf))
    with pytest.raises(ValueError):
        DensityField(grid, np.ones((4, 4)))


def test_maxwellian_moments(grid, m_field):
    rep = moments(m_field)
    assert rep.mass == pytest.approx(1.0, abs=1e-4)
    assert np.allclose(rep.momentum, 0.0, atol=1e-15)  # exact by symmetry
    assert rep.energy == pytest.approx(grid.dim, abs=1e-3)


def test_l1s_norms_increase_with_weight(m_field):
    norms = [l1s_norm(m_field, s) for s in (0.0, 2.0, 4.0, 6.0)]
    assert all(a < b for a, b in zip(norms, norms[1:]))
    # s = 2 is mass + energy by definition of <v>^2 = 1 + |v|^2
    rep = moments(m_field)
    assert norms[1] == pytest.approx(rep.mass + rep.energy, rel=1e-12)


def test_tail_energy_decreases_and_exhausts(m_field):
    tails = [tail_energy(m_field, r) for r in (0.0, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(tails, tails[1:]))
    assert tails[0] == pytest.approx(moments(m_field).energy, rel=1e-12)
    assert tail_energy(m_field, 100.0) == 0.0


def test_entropy_functionals_at_equilibrium(grid, m_field):
    h, h_rel, ent = entropy_functionals(m_field, m_field)
    assert h_rel == 0.0
    # H(M) = -(mass) (N/2) log(2 pi) - energy/2 in the continuum
    expected = -0.5 * grid.dim * math.log(2.0 * math.pi) - 0.5 * grid.dim
    assert h == pytest.approx(expected, abs=1e-3)
    assert ent == 0.0  # log+ M = 0 when max M < 1


def test_relative_entropy_positive_off_equilibrium(grid, m_field):
    shifted = DensityField(grid, np.roll(m_field.values, 3, axis=0))
    _, h_rel, _ = entropy_functionals(shifted, m_field)
    assert h_rel > 0.1


def test_distances_ordering_and_zero(grid, m_field):
    assert distances(m_field, m_field) == (0.0, 0.0)
    shifted = DensityField(grid, np.roll(m_field.values, 3, axis=0))
    d1, d12 = distances(shifted, m_field)
    assert 0.0 < d1 < d12


def test_second_moment_matrix_and_t_star(grid, m_field):
    mat = second_moment_matrix(m_field)
    assert mat == pytest.approx(mat.T)
    assert t_star(m_field) == pytest.approx(1.0, abs=1e-3)
    meshes = grid.meshes()
    vals = np.exp(-meshes[0] ** 2 / 4.0 - meshes[1] ** 2)
    aniso = normalize_101(DensityField(grid, vals))
    assert t_star(aniso) > 1.05


def test_interpolation_exact_on_multilinear_functions(grid):
    meshes = grid.meshes()
    vals = 10.0 + 0.3 * meshes[0] - 0.5 * meshes[1] + 0.1 * meshes[0] * meshes[1]
    # strictly positive on this grid, so it is a valid density
    f = DensityField(grid, vals)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-grid.extent + grid.dv, grid.extent - grid.dv, (200, 2))
    exact = 10.0 + 0.3 * pts[:, 0] - 0.5 * pts[:, 1] + 0.1 * pts[:, 0] * pts[:, 1]
    assert np.allclose(interpolate_multilinear(f, pts), exact, rtol=1e-12)


def test_interpolation_zero_outside_hull(grid, m_field):
    pts = np.array([[100.0, 0.0], [0.0, -50.0]])
    assert np.all(interpolate_multilinear(m_field, pts) == 0.0)


def test_normalize_101_hits_the_class(grid):
    meshes = grid.meshes()
    vals = np.exp(-(meshes[0] - 0.7) ** 2 - 0.5 * (meshes[1] + 0.3) ** 2) * 3.0
    g = normalize_101(DensityField(grid, vals))
    rep = moments(g)
    assert rep.mass == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rep.momentum, 0.0, atol=1e-12)
    assert rep.energy == pytest.approx(grid.dim, abs=1e-11)
    assert np.all(g.values >= 0.0)


def test_normalize_101_rejects_degenerate_input(grid):
    with pytest.raises(ValueError):
        normalize_101(DensityField(grid, np.zeros(grid.shape)))
