from dataclasses import dataclass

import numpy as np

from vesselkin.grids import AnnulusGrid, VelocityGrid, integrate_velocity

from .coefficients import fermi_weight
from .params import ModelParams

__all__ = [
    'marginal_density',
    'tip_flux',
    'flux_kernel_norm',
    'AnastomosisAccumulator',
    'accumulate_anastomosis',
    'moment',
    'weighted_sup_norm',
    'lq_norm',
    'total_mass',
]


def marginal_density(p: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """ρ(x) = ∫ p dv, shape (Nr, Nth)."""
    return integrate_velocity(p, vgrid)


def tip_flux(p: np.ndarray, vgrid: VelocityGrid, params: ModelParams) -> np.ndarray:
    """j(x) = ∫ |v| w(v) p dv, the Fermi-weighted speed integral driving TAF uptake."""
    kernel = vgrid.speed * fermi_weight(vgrid.vx, vgrid.vy, params)
    return integrate_velocity(p, vgrid, kernel)


def flux_kernel_norm(vgrid: VelocityGrid, params: ModelParams) -> float:
    """‖|v| w‖_{L¹_v} on the grid, the constant bounding ‖j‖∞ by ‖p‖∞."""
    kernel = vgrid.speed * fermi_weight(vgrid.vx, vgrid.vy, params)
    return float(integrate_velocity(kernel, vgrid))


@dataclass
class AnastomosisAccumulator:
    """b(x, t) = ∫₀ᵗ ρ(x, s) ds, advanced by the trapezoidal rule."""

    b: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, shape) -> 'AnastomosisAccumulator':
        return cls(b=np.zeros(shape))


def accumulate_anastomosis(
    acc: AnastomosisAccumulator, rho_prev: np.ndarray, rho_new: np.ndarray, dt: float
) -> AnastomosisAccumulator:
    """
    :raises ValueError: If dt is not positive
    """
    if not dt > 0:
        raise ValueError(f'time step must be positive, got {dt}')
    return AnastomosisAccumulator(b=acc.b + dt * (rho_prev + rho_new) / 2, t=acc.t + dt)


def moment(p: np.ndarray, ell: float, agrid: AnnulusGrid, vgrid: VelocityGrid) -> float:
    """m^ℓ = Σ A ω |v|^ℓ p."""
    weight = vgrid.speed ** ell if ell else None
    return float(np.sum(agrid.areas * integrate_velocity(p, vgrid, weight)))


def total_mass(p: np.ndarray, agrid: AnnulusGrid, vgrid: VelocityGrid) -> float:
    return moment(p, 0, agrid, vgrid)


def weighted_sup_norm(p: np.ndarray, mu: float, vgrid: VelocityGrid) -> float:
    """‖(1 + |v|²)^{μ/2} p‖∞."""
    if not np.size(p):
        return 0.0
    return float(np.max(np.abs(p) * (1 + vgrid.speed_squared) ** (mu / 2)))


def lq_norm(p: np.ndarray, q: float, agrid: AnnulusGrid, vgrid: VelocityGrid) -> float:
    """Phase-space L^q norm; q = inf gives the max norm."""
    if np.isinf(q):
        return float(np.max(np.abs(p))) if np.size(p) else 0.0
    integral = moment(np.abs(p) ** q, 0, agrid, vgrid)
    return integral ** (1 / q)
