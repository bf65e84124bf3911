import math

import numpy as np
import pytest

from vesselkin.fields import (
    boundary_sprouting_velocity,
    branching_rate,
    concentration_gradient,
    fermi_weight,
    regularized_delta,
    taf_force,
)
from vesselkin.grids import build_annulus_grid, build_velocity_grid, integrate_velocity


def test_branching_rate(params):
    """α saturates at α₁ and is half of it at c = c_R."""
    c = np.array([0.0, params.cR, 1e9])
    assert branching_rate(c, params) == pytest.approx([0.0, params.alpha1 / 2, params.alpha1])


def test_branching_rate_negative_concentration(params):
    with pytest.raises(ValueError):
        branching_rate(np.array([-1e-3]), params)


def test_gradient_of_linear_profile(agrid):
    """Central differences are exact for c = r; ghosts carry the Neumann data."""
    c = np.repeat(agrid.r[:, None], agrid.nth, axis=1)
    grad_r, grad_th = concentration_gradient(c, agrid, inner_flux=np.ones(agrid.nth))
    assert grad_r[:-1] == pytest.approx(np.ones((agrid.nr - 1, agrid.nth)))
    assert grad_r[-1] == pytest.approx(np.full(agrid.nth, 0.5))
    assert np.allclose(grad_th, 0)


def test_force_of_constant_concentration(agrid, params):
    force = taf_force(np.full(agrid.shape, 2.0), params, agrid)
    assert force.shape == agrid.shape + (2,)
    assert np.allclose(force, 0)


def test_force_points_up_the_gradient(agrid, params):
    c = np.repeat(agrid.r[:, None], agrid.nth, axis=1)
    force = taf_force(c, params, agrid)
    radial = np.sum(force * agrid.e_r[None], axis=-1)
    assert np.all(radial[:-1] > 0)


def test_regularized_delta_has_unit_mass(params):
    vgrid = build_velocity_grid(2.0, 64)
    nu = regularized_delta(vgrid.vx, vgrid.vy, params)
    assert integrate_velocity(nu, vgrid) == pytest.approx(1.0, rel=1e-6)


def test_fermi_weight(vgrid, params):
    center = params.window_center
    assert fermi_weight(center[0], center[1], params) == pytest.approx(0.5)
    w = fermi_weight(vgrid.vx, vgrid.vy, params)
    assert np.all((w >= 0) & (w < 0.5))


def test_fermi_weight_flushes_underflow(params):
    narrow = params.with_changes(sigma_v=1e-3)
    assert fermi_weight(np.array([0.0]), np.array([0.0]), narrow)[0] == 0.0


def test_boundary_sprouting_velocity(params):
    """v₀ is read in the frame of inward normal and tangent."""
    normals = np.array([[1.0, 0.0], [0.0, -1.0]])
    tangents = np.array([[0.0, 1.0], [1.0, 0.0]])
    velocity = boundary_sprouting_velocity(params.with_changes(v0=(0.3, 0.1)), normals, tangents)
    assert velocity == pytest.approx(np.array([[0.3, 0.1], [0.1, -0.3]]))


def test_force_matches_the_stencil_at_sample_cells(params):
    """Central differences read off by hand at ten interior cells of a smooth random field."""
    grid = build_annulus_grid(1.0, 2.0, 16, 32)
    rng = np.random.default_rng(17)
    r, th = np.meshgrid(grid.r, grid.theta, indexing='ij')
    c = 2.0 + sum(
        rng.uniform(0.1, 0.3) * np.cos(k * th + rng.uniform(0, 2 * math.pi)) * np.sin(k * r)
        for k in range(1, 4)
    )
    force = taf_force(c, params, grid)
    for _ in range(10):
        i, j = rng.integers(1, grid.nr - 1), rng.integers(0, grid.nth)
        up, down = (j + 1) % grid.nth, (j - 1) % grid.nth
        d_r = (c[i + 1, j] - c[i - 1, j]) / (2 * grid.dr)
        d_th = (c[i, up] - c[i, down]) / (2 * grid.r[i] * grid.dth)
        scale = params.d1 * (1 + params.gamma1 * c[i, j]) ** -params.q1
        e_r = np.array([math.cos(grid.theta[j]), math.sin(grid.theta[j])])
        e_th = np.array([-math.sin(grid.theta[j]), math.cos(grid.theta[j])])
        expected = scale * (d_r * e_r + d_th * e_th)
        assert np.allclose(force[i, j], expected, rtol=0, atol=1e-10)
