import json
import os

import numpy as np
import pytest

from vesselkin.fields import ModelParams, default_vmax
from vesselkin.grids import build_annulus_grid, build_velocity_grid
from vesselkin.kinetic import KineticGeometry

PARAMS = ModelParams()
VMAX = default_vmax(PARAMS)

ZERO_CONFIG = {'mode': 'direct', 'T': 0.1, 'grid': {'nr': 4, 'nth': 8, 'nv': 8}}

SCENARIOS = os.path.join(os.path.dirname(__file__), os.pardir, 'scenarios')


def check_dictionary(response, expected, strict=False):
    "Helper function to assert that a serialized record contains the expected values."
    if strict:
        assert set(response) == set(expected)
    for key, value in expected.items():
        assert key in response
        if isinstance(value, dict):
            check_dictionary(response[key], value, strict)
        elif isinstance(value, float):
            assert response[key] == pytest.approx(value)
        else:
            assert response[key] == value


def config_text(base=None, **overrides):
    """JSON text of a run configuration, top level keys replaced by ``overrides``."""
    data = dict(ZERO_CONFIG if base is None else base)
    data.update(overrides)
    return json.dumps(data)


def write_config(directory, name='run.json', base=None, **overrides):
    path = os.path.join(str(directory), name)
    with open(path, 'w') as f:
        f.write(config_text(base, **overrides))
    return path


def maxwellian(vgrid, params=PARAMS, mean=(0.0, 0.0)):
    """Discrete Maxwellian with temperature σ/β, normalized to unit mass on the grid."""
    kappa = params.beta / params.sigma
    values = np.exp(-kappa * ((vgrid.vx - mean[0]) ** 2 + (vgrid.vy - mean[1]) ** 2) / 2)
    return values / (values.sum() * vgrid.weight)


def random_density(agrid, vgrid, seed=0):
    rng = np.random.default_rng(seed)
    return rng.random(agrid.shape + vgrid.shape)


@pytest.fixture
def params():
    return PARAMS


@pytest.fixture
def agrid():
    return build_annulus_grid(1.0, 2.0, 4, 8)


@pytest.fixture
def vgrid():
    return build_velocity_grid(VMAX, 8)


@pytest.fixture
def geometry(agrid, vgrid, params):
    return KineticGeometry(agrid, vgrid, params)


@pytest.fixture
def fine_agrid():
    return build_annulus_grid(1.0, 2.0, 8, 16)


@pytest.fixture
def fine_vgrid():
    return build_velocity_grid(VMAX, 16)
