import numpy as np
import pytest

from vesselkin.conftest import VMAX, maxwellian, random_density
from vesselkin.diagnostics import (
    lq_identity_residual,
    mass_balance_residual,
    momentum_balance_residual,
    velocity_dirichlet_form,
)
from vesselkin.fields import branching_rate, regularized_delta
from vesselkin.grids import build_velocity_grid
from vesselkin.kinetic import (
    KineticCoefficients,
    KineticGeometry,
    StepControls,
    StepRecord,
    cfl_dt,
    fp_step,
    velocity_step,
)
from vesselkin.kinetic.steps import model_absorption


def _empty_record(dt):
    return StepRecord(dt=dt, inflow=np.zeros(3), outflow=np.zeros(3), reaction_gain=np.zeros(3))


def test_mass_balance_of_a_split_step(agrid, vgrid, params, geometry):
    """Boundary fluxes and reaction gains account for every change of mass."""
    rng = np.random.default_rng(12)
    p = random_density(agrid, vgrid, seed=12)
    inner_in = rng.random((agrid.nth,) + vgrid.shape)
    outer_in = rng.random((agrid.nth,) + vgrid.shape)
    coefficients = KineticCoefficients(
        force=np.full(agrid.shape + (2,), 0.1),
        absorption=np.full(agrid.shape + vgrid.shape, 0.5),
        source=0.1,
    )
    controls = StepControls(dt=cfl_dt(agrid, vgrid, params, coefficients.force))
    p_new, record = fp_step(p, coefficients, inner_in, outer_in, controls, geometry)
    assert mass_balance_residual(p, p_new, record, geometry, coefficients) < 1e-9
    assert record.reaction_gain[0] < 0


def test_lq_identity_of_pure_diffusion(agrid, vgrid, params):
    """Without friction an explicit diffusion step satisfies the L² identity exactly."""
    frictionless = params.with_changes(beta=0.0)
    geometry = KineticGeometry(agrid, vgrid, frictionless)
    p = random_density(agrid, vgrid, seed=13)
    dt = 0.1
    p_new = velocity_step(p, None, dt, vgrid, frictionless)
    dissipation = 2 * frictionless.sigma * velocity_dirichlet_form(p, geometry)
    residual = lq_identity_residual(p, p_new, _empty_record(dt), geometry)
    assert residual <= 1e-8 * dissipation


def test_lq_identity_at_the_cfl_step(agrid, vgrid, params):
    frictionless = params.with_changes(beta=0.0)
    geometry = KineticGeometry(agrid, vgrid, frictionless)
    p = random_density(agrid, vgrid, seed=14)
    dt = cfl_dt(agrid, vgrid, frictionless, safety=1.0)
    p_new = velocity_step(p, None, dt, vgrid, frictionless)
    dissipation = 2 * frictionless.sigma * velocity_dirichlet_form(p, geometry)
    assert lq_identity_residual(p, p_new, _empty_record(dt), geometry) <= 1e-8 * dissipation


def test_velocity_dirichlet_form(agrid, vgrid, geometry):
    assert velocity_dirichlet_form(np.ones(agrid.shape + vgrid.shape), geometry) == 0.0
    assert velocity_dirichlet_form(random_density(agrid, vgrid), geometry) > 0


def test_balance_orders(agrid, vgrid, geometry):
    p = np.zeros(agrid.shape + vgrid.shape)
    with pytest.raises(ValueError):
        momentum_balance_residual(p, p, _empty_record(0.1), geometry, 3)
    with pytest.raises(ValueError):
        lq_identity_residual(p, p, _empty_record(0.1), geometry, q=3)


def test_velocity_dirichlet_form_is_symmetric(agrid, vgrid, geometry):
    p = random_density(agrid, vgrid, seed=15)
    q = random_density(agrid, vgrid, seed=16)
    assert velocity_dirichlet_form(p, geometry, q) == pytest.approx(
        velocity_dirichlet_form(q, geometry, p), rel=1e-12
    )
    assert velocity_dirichlet_form(p, geometry, p) == pytest.approx(
        velocity_dirichlet_form(p, geometry), rel=1e-12
    )


def test_mass_balance_of_a_model_step(agrid, vgrid, params, geometry):
    """Branching and anastomosis enter through a = γb − α(c)ν on every model step."""
    c = np.repeat(agrid.r[:, None], agrid.nth, axis=1)
    b = np.full(agrid.shape, 0.2)
    nu = regularized_delta(vgrid.vx, vgrid.vy, params)
    coefficients = KineticCoefficients(
        force=np.full(agrid.shape + (2,), 0.1),
        absorption=model_absorption(branching_rate(c, params), nu, b, params.gamma),
    )
    assert params.gamma > 0
    p = random_density(agrid, vgrid, seed=21)
    zeros = np.zeros((agrid.nth,) + vgrid.shape)
    controls = StepControls(dt=cfl_dt(agrid, vgrid, params, coefficients.force))
    p_new, record = fp_step(p, coefficients, zeros, zeros, controls, geometry)
    assert record.reaction_gain.shape == (3,)
    assert np.all(np.isfinite(record.reaction_gain))
    assert record.reaction_gain[0] != 0
    assert mass_balance_residual(p, p_new, record, geometry, coefficients) < 1e-9


def test_mass_balance_converges_under_refinement(agrid, vgrid, params, geometry):
    """The midpoint reaction estimate closes the balance at least at first order in dt."""
    rng = np.random.default_rng(22)
    p = random_density(agrid, vgrid, seed=22)
    inner_in = rng.random((agrid.nth,) + vgrid.shape)
    outer_in = rng.random((agrid.nth,) + vgrid.shape)
    coefficients = KineticCoefficients(
        absorption=np.full(agrid.shape + vgrid.shape, 0.5), source=0.1
    )
    dt = cfl_dt(agrid, vgrid, params)
    residuals = []
    for k in range(3):
        controls = StepControls(dt=dt / 2 ** k)
        p_new, record = fp_step(p, coefficients, inner_in, outer_in, controls, geometry)
        residuals.append(mass_balance_residual(
            p, p_new, record, geometry, coefficients, exact_reaction=False
        ))
    orders = np.log2(np.array(residuals[:-1]) / np.array(residuals[1:]))
    assert np.all(orders >= 0.8)


def test_momentum_balance_at_equilibrium(agrid, params):
    """A Maxwellian at rest keeps m² = Nσ/β m⁰, the fixed point of the moment equation."""
    vgrid = build_velocity_grid(VMAX, 16)
    geometry = KineticGeometry(agrid, vgrid, params)
    p = np.broadcast_to(maxwellian(vgrid, params), agrid.shape + vgrid.shape).copy()
    dt = cfl_dt(agrid, vgrid, params)
    p_new = velocity_step(p, None, dt, vgrid, params)
    mass = float(np.sum(geometry.cell_measure * p)) * vgrid.weight
    residual = momentum_balance_residual(p, p_new, _empty_record(dt), geometry, 2)
    assert residual <= 1e-5 * 4 * params.sigma * mass
