import math

import numpy as np
import pytest

from vesselkin import NumericalException
from vesselkin.diffusion import (
    DiffusionScheme,
    NeumannData,
    NeumannOperator,
    diffusion_cfl_dt,
    dirichlet_energy,
    gradient_sup_norm,
    l2_norm,
    mean_value,
    neumann_step,
    solve_heat_homogeneous,
    solve_taf,
    sup_norm,
)

SCHEMES = [DiffusionScheme.EXPLICIT, DiffusionScheme.IMPLICIT_RADIAL]


@pytest.fixture
def concentration(agrid):
    return np.random.default_rng(11).random(agrid.shape)


@pytest.mark.parametrize('scheme', SCHEMES)
def test_neumann_step_conserves_mass(agrid, concentration, scheme):
    """Without injection or sink ∫c is preserved by both schemes."""
    d = 0.05
    dt = 0.9 * diffusion_cfl_dt(agrid, d, scheme)
    c = neumann_step(concentration, None, NeumannData(), dt, agrid, d, scheme=scheme)
    assert mean_value(c, agrid) == pytest.approx(mean_value(concentration, agrid), rel=1e-12)


@pytest.mark.parametrize('scheme', SCHEMES)
def test_neumann_step_keeps_constants(agrid, scheme):
    d = 0.05
    c = neumann_step(
        np.full(agrid.shape, 3.0), None, NeumannData(), diffusion_cfl_dt(agrid, d, scheme),
        agrid, d, scheme=scheme,
    )
    assert np.allclose(c, 3.0)


def test_implicit_scheme_allows_longer_steps(agrid):
    assert diffusion_cfl_dt(agrid, 0.05, DiffusionScheme.IMPLICIT_RADIAL) > diffusion_cfl_dt(
        agrid, 0.05
    )


def test_injection_through_inner_circle(agrid):
    """c_r0 = −1 adds d·2πr₀ per unit time."""
    d, dt = 0.05, 0.01
    c = neumann_step(np.zeros(agrid.shape), None, NeumannData(-1.0), dt, agrid, d)
    assert mean_value(c, agrid) == pytest.approx(dt * d * 2 * math.pi * agrid.r0)
    assert np.all(c[1:] == 0) and np.all(c[0] > 0)


def test_neumann_data_sign():
    with pytest.raises(ValueError):
        NeumannData(0.5).at(0.0, 4)
    assert NeumannData(0.5, model=False).at(0.0, 4) == pytest.approx(np.full(4, 0.5))
    assert NeumannData(lambda t: -t).at(2.0, 3) == pytest.approx(np.full(3, -2.0))


def test_neumann_step_cfl_violation(agrid):
    rate = NeumannOperator(agrid, 0.05).explicit_rate
    with pytest.raises(NumericalException):
        neumann_step(np.zeros(agrid.shape), None, NeumannData(), 2 / rate, agrid, 0.05)


def test_consumption_factor(agrid):
    c = neumann_step(
        np.ones(agrid.shape), np.full(agrid.shape, 2.0), NeumannData(), 0.1, agrid, 0.0,
        eta=0.3,
    )
    assert np.allclose(c, math.exp(-0.06))


def test_maximum_principle(agrid, concentration):
    d = 0.05
    dt = diffusion_cfl_dt(agrid, d)
    c = concentration
    for _ in range(20):
        c = neumann_step(c, None, NeumannData(), dt, agrid, d)
    assert c.min() >= concentration.min() - 1e-14
    assert c.max() <= concentration.max() + 1e-14


def test_norms(agrid):
    ones = np.ones(agrid.shape)
    assert mean_value(ones, agrid) == pytest.approx(agrid.total_area)
    assert l2_norm(ones, agrid) == pytest.approx(math.sqrt(agrid.total_area))
    assert sup_norm(-2 * ones) == 2.0
    assert dirichlet_energy(ones, agrid) == 0.0
    radial = np.repeat(agrid.r[:, None], agrid.nth, axis=1)
    assert gradient_sup_norm(radial, agrid) == pytest.approx(1.0)


def test_heat_with_constant_source(agrid):
    """Zero data under a constant source grows linearly and stays flat."""
    run = solve_heat_homogeneous(
        np.zeros(agrid.shape), 0.1, agrid, 0.05, times=(0.05,), source=np.full(agrid.shape, 2.0)
    )
    for t, u in zip(run.times, run.values):
        assert np.allclose(u, 2.0 * t)
    assert run.times[-1] == pytest.approx(0.1)


def test_solve_taf_snapshots(agrid):
    calls = []

    def flux_source(n, t):
        calls.append(n)
        return np.ones(agrid.shape)

    trajectory = solve_taf(
        np.ones(agrid.shape), flux_source, NeumannData(), 0.1, 0.01, agrid, 0.05, 0.3,
        snapshot_every=5,
    )
    assert calls == list(range(10))
    assert trajectory.times == pytest.approx([0.0, 0.05, 0.1])
    assert np.allclose(trajectory.final, math.exp(-0.3 * 0.1))
