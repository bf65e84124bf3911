import io
import json

import numpy as np
import pytest

from vesselkin.conftest import random_density
from vesselkin.fields import marginal_density, tip_flux
from vesselkin.io import Snapshot, export_csv, export_series, read_diagnostics, series

RECORDS = [
    {'t': 0.0, 'mass': 1.0, 'norms': {'inf': 2.0}, 'gates': {'linf': True}},
    {'t': 0.1, 'mass': 0.75, 'norms': {'inf': 1.5}, 'gates': {'linf': False}},
]


@pytest.fixture
def snapshot(agrid, vgrid):
    rng = np.random.default_rng(3)
    trace = np.zeros((agrid.nth,) + vgrid.shape)
    return Snapshot(
        step=0, t=0.0, p=random_density(agrid, vgrid), c=rng.random(agrid.shape),
        b=np.zeros(agrid.shape), inner_in=trace, outer_in=trace,
        r0=agrid.r0, r1=agrid.r1, vmax=vgrid.vmax,
    )


def _table(text):
    return np.loadtxt(io.StringIO(text), delimiter=',', skiprows=1)


def test_export_concentration(snapshot, agrid):
    """Values are written with enough digits to be read back exactly."""
    text = export_csv(snapshot, 'c')
    assert text.splitlines()[0] == 'r,theta,c'
    table = _table(text)
    assert table.shape == (agrid.nr * agrid.nth, 3)
    assert np.array_equal(table[:, 2], snapshot.c.ravel())
    assert np.array_equal(table[:, 0].reshape(agrid.shape)[:, 0], agrid.r)


def test_export_density_and_flux(snapshot, vgrid, params):
    rho = _table(export_csv(snapshot, 'rho'))
    assert np.array_equal(rho[:, 2], marginal_density(snapshot.p, vgrid).ravel())
    flux = _table(export_csv(snapshot, 'j', params))
    assert np.array_equal(flux[:, 2], tip_flux(snapshot.p, vgrid, params).ravel())


def test_export_velocity_slice(snapshot, vgrid):
    text = export_csv(snapshot, 'slice', cell=(1, 2))
    assert text.splitlines()[0] == 'vx,vy,p'
    table = _table(text)
    assert table.shape == (vgrid.nv ** 2, 3)
    assert np.array_equal(table[:, 2], snapshot.p[1, 2].ravel())


@pytest.mark.parametrize(
    'selector, kwargs',
    [
        ('speed', {}),
        ('j', {}),
        ('slice', {'cell': (4, 0)}),
        ('slice', {'cell': (0, -1)}),
    ],
)
def test_export_errors(snapshot, selector, kwargs):
    with pytest.raises(ValueError):
        export_csv(snapshot, selector, **kwargs)


def test_read_diagnostics():
    lines = [json.dumps({'kind': 'header', 'mode': 'direct'}), ''] + [
        json.dumps(r) for r in RECORDS
    ]
    header, records = read_diagnostics(lines)
    assert header['mode'] == 'direct'
    assert records == RECORDS


def test_series():
    assert np.array_equal(series(RECORDS, 'mass'), [[0.0, 1.0], [0.1, 0.75]])
    assert np.array_equal(series(RECORDS, 'norms.inf')[:, 1], [2.0, 1.5])
    assert series([], 'mass').shape == (0, 2)


@pytest.mark.parametrize('name', ['speed', 'norms.l1', 'gates.linf', 'norms'])
def test_series_errors(name):
    with pytest.raises(ValueError):
        series(RECORDS, name)


def test_export_series():
    lines = export_series(RECORDS, 'mass').splitlines()
    assert lines[0] == 't,mass'
    assert [float(v) for v in lines[2].split(',')] == [0.1, 0.75]
