import numpy as np
import pytest

from vesselkin import SnapshotException
from vesselkin.conftest import random_density
from vesselkin.coupling import MarchState
from vesselkin.grids import build_annulus_grid
from vesselkin.io import (
    HEADER,
    Snapshot,
    checkpoint_read,
    checkpoint_write,
    parse_snapshot,
    read_snapshot,
    snapshot_bytes,
    write_snapshot,
)


@pytest.fixture
def snapshot(agrid, vgrid):
    rng = np.random.default_rng(22)
    trace = (agrid.nth,) + vgrid.shape
    return Snapshot(
        step=7, t=0.35, p=random_density(agrid, vgrid), c=rng.random(agrid.shape),
        b=rng.random(agrid.shape), inner_in=rng.random(trace), outer_in=rng.random(trace),
        r0=agrid.r0, r1=agrid.r1, vmax=vgrid.vmax,
    )


def _patch(data: bytes, field: str, value) -> bytes:
    header = np.frombuffer(data, dtype=HEADER, count=1).copy()
    header[field] = value
    return header.tobytes() + data[HEADER.itemsize:]


def test_snapshot_roundtrip(snapshot, tmpdir):
    path = str(tmpdir.join('state.vkin'))
    write_snapshot(path, snapshot)
    loaded = read_snapshot(path)
    assert (loaded.step, loaded.t, loaded.vmax) == (7, 0.35, snapshot.vmax)
    for name in ('p', 'c', 'b', 'inner_in', 'outer_in'):
        assert np.array_equal(getattr(loaded, name), getattr(snapshot, name))
    assert not tmpdir.join('state.vkin.tmp').exists()


@pytest.mark.parametrize(
    'mangle, reason',
    [
        (lambda data: data[:10], 'truncated'),
        (lambda data: data[:-1], 'truncated'),
        (lambda data: data[:200] + data[-8:], 'truncated'),
        (lambda data: b'XKIN' + data[4:], 'magic'),
        (lambda data: _patch(data, 'version', 2), 'version'),
        (lambda data: _patch(data, 'nr', 5), 'corrupted'),
    ],
)
def test_invalid_snapshots(snapshot, mangle, reason):
    with pytest.raises(SnapshotException) as e:
        parse_snapshot(mangle(snapshot_bytes(snapshot)))
    assert e.value.reason == reason


def test_missing_snapshot(tmpdir):
    with pytest.raises(SnapshotException) as e:
        read_snapshot(str(tmpdir.join('missing.vkin')))
    assert e.value.reason == 'io'


def test_snapshot_shape_mismatch(snapshot):
    snapshot.c = np.zeros((2, 2))
    with pytest.raises(ValueError):
        snapshot_bytes(snapshot)


def test_checkpoint(agrid, vgrid, tmpdir):
    trace = np.zeros((agrid.nth,) + vgrid.shape)
    state = MarchState(
        n=4, t=0.2, p=random_density(agrid, vgrid), c=np.ones(agrid.shape),
        b=np.zeros(agrid.shape), inner_in=trace, outer_in=trace,
    )
    path = str(tmpdir.join('step.vkin'))
    checkpoint_write(path, state, agrid, vgrid)
    loaded = checkpoint_read(path, agrid, vgrid)
    assert (loaded.n, loaded.t) == (4, 0.2)
    assert np.array_equal(loaded.p, state.p)
    with pytest.raises(SnapshotException) as e:
        checkpoint_read(path, build_annulus_grid(1.0, 2.0, 8, 8), vgrid)
    assert e.value.reason == 'grid'
