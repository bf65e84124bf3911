import json
import os

import numpy as np
import pytest

from vesselkin import ConfigException
from vesselkin.conftest import SCENARIOS, ZERO_CONFIG, config_text, write_config
from vesselkin.diagnostics import DEFAULT_GATES
from vesselkin.diffusion import DiffusionScheme
from vesselkin.fields import ModelParams, default_vmax
from vesselkin.grids import build_velocity_grid, integrate_velocity
from vesselkin.io import (
    DtPolicy,
    RunMode,
    load_config,
    parse_config,
    phase_profile,
    space_profile,
    velocity_profile,
)
from vesselkin.kinetic import BoundaryMode, Splitting

GRID = ZERO_CONFIG['grid']


def test_defaults():
    config = parse_config(config_text())
    assert config.mode is RunMode.DIRECT
    assert config.bc_mode is BoundaryMode.FIXED
    assert config.dt_policy is DtPolicy.CFL
    assert config.splitting is Splitting.STRANG
    assert config.scheme is DiffusionScheme.EXPLICIT
    assert config.params == ModelParams()
    assert config.grid.vmax == pytest.approx(default_vmax(ModelParams()))
    assert config.diagnostics.gates == list(DEFAULT_GATES)
    assert config.raw['boundary']['c_r0'] == 0.0


def test_mode_defaults_to_picard():
    assert parse_config(json.dumps({'T': 1.0, 'grid': GRID})).mode is RunMode.PICARD


@pytest.mark.parametrize(
    'overrides, code, key',
    [
        ({'params': {'gamma': -1}}, 'positivity', 'params.gamma'),
        ({'params': {'v0': [0.0, 0.3]}}, 'positivity', 'params.v0'),
        ({'T': 0}, 'positivity', 'T'),
        ({'foo': 1}, 'unknown_key', 'foo'),
        ({'grid': dict(GRID, nv=7)}, 'invalid_value', 'grid.nv'),
        ({'grid': dict(GRID, nr=1)}, 'invalid_value', 'grid.nr'),
        ({'grid': dict(GRID, r0=2.0, r1=1.0)}, 'invalid_value', 'grid.r1'),
        ({'grid': dict(GRID, vmax=0.3)}, 'invalid_value', 'params.v0'),
        ({'dt': {'policy': 'fixed'}}, 'missing_key', 'dt.value'),
        ({'diagnostics': {'mu': 3, 'ell': 3}}, 'invalid_value', 'diagnostics.ell'),
        ({'diagnostics': {'gates': ['speed']}}, 'invalid_value', 'diagnostics.gates.0'),
        ({'boundary': {'g_inner': {'profile': 'snapshot', 'path': 'x'}}}, 'invalid_value',
         'boundary.g_inner.profile'),
        ({'boundary': {'c_r0': 0.5}}, 'invalid_value', 'boundary.c_r0'),
        ({'initial': {'p': {'profile': 'product'}}}, 'missing_key', 'initial.p'),
        ({'initial': {'p': {'profile': 'snapshot'}}}, 'missing_key', 'initial.p.path'),
        ({'mode': 'sideways'}, 'invalid_value', 'mode'),
    ],
)
def test_invalid_configs(overrides, code, key):
    with pytest.raises(ConfigException) as e:
        parse_config(config_text(**overrides))
    assert e.value.code == code
    assert e.value.key == key


def test_positivity_message():
    with pytest.raises(ConfigException) as e:
        parse_config(config_text(params={'gamma': -1}))
    assert e.value.message == 'Invalid data: positivity violated: gamma (key "params.gamma")'


def test_missing_final_time():
    with pytest.raises(ConfigException) as e:
        parse_config(json.dumps({'grid': GRID}))
    assert e.value.code == 'missing_key'
    assert e.value.key == 'T'


def test_malformed_config():
    with pytest.raises(ConfigException) as e:
        parse_config('{\n  "T": ,\n  "grid": {}\n}')
    assert e.value.code == 'malformed'
    assert e.value.line == 2


def test_load_config(tmpdir):
    path = write_config(tmpdir, seed=3)
    config = load_config(path)
    assert config.seed == 3
    assert config.base_dir == str(tmpdir)


def test_load_missing_config(tmpdir):
    with pytest.raises(ConfigException) as e:
        load_config(str(tmpdir.join('missing.json')))
    assert e.value.code == 'malformed'


def test_space_profiles(agrid):
    assert not space_profile({'profile': 'zero'}, agrid).any()
    constant = space_profile({'profile': 'constant', 'value': 2.0}, agrid)
    assert np.all(constant == 2.0)
    bump = space_profile(
        {'profile': 'radial-bump', 'amplitude': 1.0, 'center': None, 'width': 0.2}, agrid
    )
    assert np.allclose(bump, bump[:, :1])
    assert bump.max() <= 1.0
    random = {'profile': 'random', 'amplitude': 1.0}
    assert np.array_equal(space_profile(random, agrid, 5), space_profile(random, agrid, 5))
    assert not np.array_equal(space_profile(random, agrid, 5), space_profile(random, agrid, 6))


def test_gaussian_velocity_profile(params):
    vgrid = build_velocity_grid(2.0, 64)
    spec = {'profile': 'gaussian-in-v', 'amplitude': 2.0, 'mean': (0.1, 0.0),
            'temperature': None}
    values = velocity_profile(spec, vgrid, params)
    assert integrate_velocity(values, vgrid) == pytest.approx(2.0, rel=1e-6)


def test_phase_profiles(agrid, vgrid, params):
    spec = {
        'profile': 'product',
        'space': {'profile': 'constant', 'value': 2.0},
        'velocity': {'profile': 'constant', 'value': 3.0},
    }
    values = phase_profile(spec, agrid, vgrid, params)
    assert values.shape == agrid.shape + vgrid.shape
    assert np.all(values == 6.0)
    ring = phase_profile({'profile': 'constant', 'value': 1.0}, agrid, vgrid, params, ring=-1)
    assert ring.shape == (agrid.nth,) + vgrid.shape


def test_snapshot_profile_is_resolved_by_the_runner(agrid, vgrid, params):
    with pytest.raises(ConfigException):
        phase_profile({'profile': 'snapshot', 'path': 'x'}, agrid, vgrid, params)


@pytest.mark.parametrize(
    'name', ['zero.json', 'standard.json', 'linear_linf.json', 'heat_lab.json']
)
def test_shipped_scenarios_parse(name):
    """The example configurations stay valid."""
    config = load_config(os.path.join(SCENARIOS, name))
    assert config.T > 0
