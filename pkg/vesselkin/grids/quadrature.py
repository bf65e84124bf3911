from typing import Callable, Optional, Union

import numpy as np

from vesselkin import Config

from .velocity import VelocityGrid

__all__ = ['HalfSpaceQuadrature', 'half_space_quadrature', 'integrate_velocity']

Weight = Union[None, np.ndarray, Callable]


class HalfSpaceQuadrature:
    """
    Split of the velocity cells by the sign of v·n for one or several boundary normals.
    ``normals`` has shape (2,) or (m, 2); masks and ``vn`` carry the matching leading
    axis. Cells with |v·n| < 1e-14·Vmax belong to neither half.
    """

    def __init__(self, grid: VelocityGrid, normals: np.ndarray) -> None:
        self.grid = grid
        self.normals = normals
        n = np.asarray(normals)[..., None, None, :]
        self.vn = grid.vx * n[..., 0] + grid.vy * n[..., 1]
        tolerance = Config.GRAZING_TOLERANCE * grid.vmax
        self.outgoing = self.vn > tolerance
        self.incoming = self.vn < -tolerance
        self.weight = grid.weight

    @property
    def outgoing_indices(self):
        return np.nonzero(self.outgoing)

    @property
    def incoming_indices(self):
        return np.nonzero(self.incoming)

    def integrate_outgoing(self, field, weight: Weight = None) -> np.ndarray:
        return _masked_sum(self.grid, self.outgoing, field, weight)

    def integrate_incoming(self, field, weight: Weight = None) -> np.ndarray:
        return _masked_sum(self.grid, self.incoming, field, weight)


def half_space_quadrature(grid: VelocityGrid, n) -> HalfSpaceQuadrature:
    """
    :param grid: Velocity grid
    :param n:    Unit normal, or a stack of unit normals with shape (m, 2)

    :raises ValueError: If a normal is not of unit length
    """
    normals = np.asarray(n, dtype=float)
    if normals.shape[-1] != 2 or not np.allclose(np.linalg.norm(normals, axis=-1), 1, atol=1e-12):
        raise ValueError('half-space quadrature needs unit normals')
    return HalfSpaceQuadrature(grid, normals)


def _weight_values(grid: VelocityGrid, weight: Weight):
    if weight is None:
        return 1.0
    if callable(weight):
        return weight(grid.vx, grid.vy)
    return weight


def _masked_sum(grid, mask, field, weight) -> np.ndarray:
    values = np.where(mask, np.asarray(field) * _weight_values(grid, weight), 0.0)
    return values.sum(axis=(-2, -1)) * grid.weight


def integrate_velocity(field, grid: VelocityGrid, weight: Weight = None) -> np.ndarray:
    """
    Midpoint rule Σ ω·w(v)·field(v) over the last two (velocity) axes.

    :param field:  Array whose trailing axes are (Nv, Nv)
    :param grid:   Velocity grid
    :param weight: None, an (Nv, Nv) array or a callable ``w(vx, vy)``
    :return:       One value per leading index (a scalar for a pure velocity field)
    """
    values = np.asarray(field, dtype=float) * _weight_values(grid, weight)
    return values.sum(axis=(-2, -1)) * grid.weight
