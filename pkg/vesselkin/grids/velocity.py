import logging

import numpy as np

from vesselkin.utils import cached_property

__all__ = ['VelocityGrid', 'build_velocity_grid', 'truncation_tail']

log = logging.getLogger(__name__)


class VelocityGrid:
    """
    Cartesian velocity box [−Vmax, Vmax]² with Nv cells per dimension. Nv is even, so
    v = 0 is a cell corner and no node sits on the |v|⁻¹ singularity. Arrays are indexed
    [k, l] with k along v_x.
    """

    def __init__(self, vmax: float, nv: int) -> None:
        self.vmax = float(vmax)
        self.nv = int(nv)
        self.dv = 2 * self.vmax / self.nv
        self.weight = self.dv ** 2

    def __repr__(self) -> str:
        return f'<VelocityGrid Vmax={self.vmax} Nv={self.nv}>'

    @property
    def shape(self):
        return (self.nv, self.nv)

    @cached_property
    def centers(self) -> np.ndarray:
        return -self.vmax + (np.arange(self.nv) + 0.5) * self.dv

    @cached_property
    def faces(self) -> np.ndarray:
        return -self.vmax + np.arange(self.nv + 1) * self.dv

    @cached_property
    def vx(self) -> np.ndarray:
        return np.broadcast_to(self.centers[:, None], self.shape).copy()

    @cached_property
    def vy(self) -> np.ndarray:
        return np.broadcast_to(self.centers[None, :], self.shape).copy()

    @cached_property
    def speed_squared(self) -> np.ndarray:
        return self.vx ** 2 + self.vy ** 2

    @cached_property
    def speed(self) -> np.ndarray:
        return np.sqrt(self.speed_squared)

    @property
    def total_weight(self) -> float:
        return self.weight * self.nv ** 2

    def contains(self, v) -> bool:
        """Whether ``v`` lies within the span of cell centres (bilinear interpolation range)."""
        lo, hi = self.centers[0], self.centers[-1]
        return bool(lo <= v[0] <= hi and lo <= v[1] <= hi)


def build_velocity_grid(vmax: float, nv: int) -> VelocityGrid:
    """
    :raises ValueError: If Vmax is not positive or Nv is not a positive even integer
    """
    if not vmax > 0:
        raise ValueError(f'Vmax must be positive, got {vmax}')
    if int(nv) != nv or nv < 2 or nv % 2:
        raise ValueError(f'Nv must be a positive even integer, got {nv}')
    return VelocityGrid(vmax, nv)


def truncation_tail(vmax: float, mu: float, mass_bound: float, tolerance: float) -> float:
    """
    Bound on the mass carried beyond the velocity box by a density whose weighted sup
    norm (1+|v|²)^{μ/2}p is controlled: (1 + Vmax²)^{−μ/2} times the mass bound. A
    warning is logged when it exceeds ``tolerance``.
    """
    tail = (1 + vmax ** 2) ** (-mu / 2) * mass_bound
    if tail > tolerance:
        log.warning(
            'velocity truncation tail %.3g exceeds tolerance %.3g (Vmax=%g)',
            tail, tolerance, vmax,
        )
    return tail
