import math

import numpy as np
import pytest

from vesselkin.diagnostics.heat import default_profile, oracle_error
from vesselkin.diffusion import RadialSpectralOracle, radial_oracle_solve
from vesselkin.grids import build_annulus_grid


@pytest.fixture(scope='module')
def oracle():
    return RadialSpectralOracle(1.0, 2.0, 0.1, cells=200, modes=10)


def test_eigenvalues(oracle):
    assert oracle.eigenvalues[0] == 0.0
    assert np.all(np.diff(oracle.eigenvalues) > 0)
    assert len(oracle.eigenvalues) == 10


def test_eigenfunctions_are_orthonormal(oracle):
    gram = np.array([
        [oracle.inner(u, v) for v in oracle.eigenfunctions.T] for u in oracle.eigenfunctions.T
    ])
    assert np.allclose(gram, np.eye(10), atol=1e-8)


def test_constant_mode(oracle):
    area = math.pi * (2.0 ** 2 - 1.0 ** 2)
    assert np.allclose(oracle.eigenfunctions[:, 0], 1 / math.sqrt(area))


def test_projection_reproduces_profile():
    """A complete basis reproduces the data at t = 0."""
    oracle = RadialSpectralOracle(1.0, 2.0, 0.1, cells=50, modes=50)
    profile = np.cos(oracle.r)
    solution = radial_oracle_solve(profile, [0.0, 1.0], oracle)
    assert np.allclose(solution[0], profile)
    assert oracle.truncation_residual(profile) < 1e-10


def test_solution_keeps_mean(oracle):
    solution = radial_oracle_solve(lambda r: r ** 2, [0.0, 5.0], oracle)
    ones = np.ones(oracle.cells)
    assert oracle.inner(solution[1], ones) == pytest.approx(oracle.inner(solution[0], ones))


def test_finite_volumes_match_the_oracle():
    grid = build_annulus_grid(1.0, 2.0, 24, 8)
    assert oracle_error(default_profile(grid), grid, 0.1, 0.1, dt=1e-4) < 1e-3
