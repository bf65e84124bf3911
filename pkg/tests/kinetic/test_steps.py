import math

import numpy as np
import pytest

from vesselkin import NumericalException
from vesselkin.conftest import maxwellian, random_density
from vesselkin.fields import total_mass
from vesselkin.grids import build_annulus_grid, build_velocity_grid
from vesselkin.kinetic import (
    KineticGeometry,
    absorption_step,
    cfl_dt,
    cfl_limits,
    reaction_step,
    step_count,
    transport_step,
    velocity_step,
)
from vesselkin.kinetic.steps import bernoulli, model_absorption


def _trace_shape(agrid, vgrid):
    return (agrid.nth,) + vgrid.shape


def test_transport_keeps_constants(agrid, vgrid, geometry):
    """A constant state with matching inflow is a discrete steady state."""
    p = np.ones(agrid.shape + vgrid.shape)
    traces = np.ones(_trace_shape(agrid, vgrid))
    p_new, _ = transport_step(p, traces, traces, 0.5 / geometry.transport_rate, geometry)
    assert np.allclose(p_new, 1.0, rtol=0, atol=1e-12)


def test_transport_mass_balance(agrid, vgrid, geometry):
    p = random_density(agrid, vgrid, seed=1)
    rng = np.random.default_rng(2)
    inner_in = rng.random(_trace_shape(agrid, vgrid))
    outer_in = rng.random(_trace_shape(agrid, vgrid))
    dt = 0.5 / geometry.transport_rate
    p_new, fluxes = transport_step(p, inner_in, outer_in, dt, geometry)
    change = total_mass(p_new, agrid, vgrid) - total_mass(p, agrid, vgrid)
    assert change == pytest.approx(dt * (fluxes['inflow'][0] - fluxes['outflow'][0]), abs=1e-12)
    assert fluxes['trace_square_in'] > 0
    assert fluxes['trace_square_out'] > 0


def test_transport_cfl_violation(agrid, vgrid, geometry):
    p = np.zeros(agrid.shape + vgrid.shape)
    traces = np.zeros(_trace_shape(agrid, vgrid))
    with pytest.raises(NumericalException):
        transport_step(p, traces, traces, 2.0 / geometry.transport_rate, geometry)


def test_velocity_step_conserves_mass(agrid, vgrid, params):
    p = random_density(agrid, vgrid, seed=4)
    force = np.random.default_rng(5).normal(scale=0.2, size=agrid.shape + (2,))
    dt = cfl_dt(agrid, vgrid, params, force)
    p_new = velocity_step(p, force, dt, vgrid, params)
    assert p_new.sum() == pytest.approx(p.sum(), rel=1e-12)
    assert np.all(p_new >= 0)


def test_velocity_step_keeps_shifted_maxwellian(agrid, vgrid, params):
    """exp(−β|v − F/β|²/2σ) is stationary for the fitted fluxes."""
    force = np.array([0.2, -0.1])
    mean = force / params.beta
    p = np.broadcast_to(maxwellian(vgrid, params, mean), agrid.shape + vgrid.shape).copy()
    forces = np.broadcast_to(force, agrid.shape + (2,))
    p_new = velocity_step(p, forces, cfl_dt(agrid, vgrid, params, forces), vgrid, params)
    assert np.allclose(p_new, p, rtol=1e-10, atol=1e-14)


def test_velocity_step_relaxes_mean_velocity(params):
    """Without force the mean velocity decays like e^{−βt}."""
    vgrid = build_velocity_grid(2.0, 64)
    p = maxwellian(vgrid, params, mean=(0.3, 0.0))[None, None]
    dt, steps = 0.0025, 200
    for _ in range(steps):
        p = velocity_step(p, None, dt, vgrid, params)
    mean = float((vgrid.vx * p).sum() / p.sum())
    assert mean == pytest.approx(0.3 * math.exp(-params.beta * dt * steps), rel=0.03)


def test_velocity_step_cfl_violation(vgrid, params):
    with pytest.raises(NumericalException):
        velocity_step(np.ones((1, 1) + vgrid.shape), None, 10.0, vgrid, params)


def test_absorption_step_is_exact():
    p = np.ones(3)
    expected = math.exp(-0.2) + (1 - math.exp(-0.2)) / 2
    assert absorption_step(p, 2.0, 1.0, 0.1) == pytest.approx(np.full(3, expected))
    assert absorption_step(p, None, 2.0, 0.1) == pytest.approx(np.full(3, 1.2))
    assert absorption_step(p, None, None, 0.1) is p


def test_reaction_step(agrid, vgrid, params):
    alpha = np.full(agrid.shape, 0.5)
    nu = np.ones(vgrid.shape)
    b = np.full(agrid.shape, 2.0)
    a = model_absorption(alpha, nu, b, params.gamma)
    assert a.shape == agrid.shape + vgrid.shape
    assert np.allclose(a, params.gamma * 2.0 - 0.5)
    p = np.ones(agrid.shape + vgrid.shape)
    p_new = reaction_step(p, alpha, nu, b, params.gamma, 0.1)
    assert np.allclose(p_new, math.exp(0.1 * (0.5 - params.gamma * 2.0)))


def test_bernoulli():
    assert bernoulli(0.0) == pytest.approx(1.0)
    x = np.array([-2.0, 0.5, 3.0])
    assert bernoulli(x) - bernoulli(-x) == pytest.approx(-x)


def test_cfl_limits(agrid, vgrid, params):
    limits = cfl_limits(agrid, vgrid, params)
    assert limits.transport == pytest.approx(agrid.dr / vgrid.vmax)
    assert limits.drift == pytest.approx(vgrid.dv / (params.beta * vgrid.vmax))
    assert limits.diffusion == pytest.approx(vgrid.dv ** 2 / (4 * params.sigma))
    assert limits.dt == pytest.approx(0.3 * limits.transport)


def test_cfl_limits_without_friction(agrid, vgrid, params):
    limits = cfl_limits(agrid, vgrid, params.with_changes(beta=0.0, sigma=0.0))
    assert limits.drift == math.inf
    assert limits.diffusion == math.inf


def test_transport_advects_a_bump(params):
    """A bump carried along ê_r at θ = π/4 moves its centre by s·t, within one cell."""
    agrid = build_annulus_grid(1.0, 2.0, 32, 128)
    vgrid = build_velocity_grid(1.0, 2)
    geometry = KineticGeometry(agrid, vgrid, params)
    x, y = agrid.centers
    start = 1.3 / math.sqrt(2)
    p = np.zeros(agrid.shape + vgrid.shape)
    p[..., 1, 1] = np.exp(-((x - start) ** 2 + (y - start) ** 2) / (2 * 0.08 ** 2))
    velocity = np.array([vgrid.centers[1], vgrid.centers[1]])
    traces = np.zeros(_trace_shape(agrid, vgrid))
    n_steps, dt = step_count(0.4, 0.9 / geometry.transport_rate)
    initial_mass = total_mass(p, agrid, vgrid)
    for _ in range(n_steps):
        p, _ = transport_step(p, traces, traces, dt, geometry)
    slice_ = p[..., 1, 1] * agrid.areas
    centre = np.array([np.sum(slice_ * x), np.sum(slice_ * y)]) / slice_.sum()
    expected = start + velocity * n_steps * dt
    assert np.linalg.norm(centre - expected) <= agrid.dr
    assert total_mass(p, agrid, vgrid) >= 0.99 * initial_mass
    assert np.all(p >= 0)
