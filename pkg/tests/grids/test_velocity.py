import logging

import numpy as np
import pytest

from vesselkin.grids import build_velocity_grid, truncation_tail


def test_no_node_at_origin(vgrid):
    """Nv is even, so no cell centre sits on v = 0."""
    assert np.all(vgrid.speed > 0)
    assert vgrid.centers == pytest.approx(-vgrid.centers[::-1])


def test_total_weight(vgrid):
    assert vgrid.total_weight == pytest.approx((2 * vgrid.vmax) ** 2)
    assert vgrid.weight == pytest.approx(vgrid.dv ** 2)


def test_axes(vgrid):
    """The first velocity axis runs along v_x."""
    assert np.all(np.diff(vgrid.vx, axis=0) > 0)
    assert np.all(np.diff(vgrid.vx, axis=1) == 0)
    assert np.all(np.diff(vgrid.vy, axis=1) > 0)


def test_contains(vgrid):
    assert vgrid.contains((0.3, 0.0))
    assert not vgrid.contains((vgrid.vmax, 0.0))


@pytest.mark.parametrize('vmax, nv', [(0.0, 8), (-1.0, 8), (1.0, 7), (1.0, 0), (1.0, 2.5)])
def test_build_velocity_grid_invalid(vmax, nv):
    with pytest.raises(ValueError):
        build_velocity_grid(vmax, nv)


def test_truncation_tail(caplog):
    """A warning is logged once the tail exceeds the tolerance."""
    with caplog.at_level(logging.WARNING):
        assert truncation_tail(10.0, 3, 1.0, 1e-2) == pytest.approx(101 ** -1.5)
    assert not caplog.records
    with caplog.at_level(logging.WARNING):
        truncation_tail(1.0, 3, 1.0, 1e-8)
    assert 'velocity truncation tail' in caplog.text
