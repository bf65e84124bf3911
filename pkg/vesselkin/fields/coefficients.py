from typing import Optional, Tuple

import numpy as np

from vesselkin import Config
from vesselkin.grids import AnnulusGrid

from .params import ModelParams

__all__ = [
    'branching_rate',
    'concentration_gradient',
    'taf_force',
    'regularized_delta',
    'fermi_weight',
    'boundary_sprouting_velocity',
]


def branching_rate(c, params: ModelParams) -> np.ndarray:
    """
    Tip creation rate α(c) = α₁ (c/c_R) / (1 + c/c_R).

    :raises ValueError: If any concentration is negative
    """
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError('branching rate is undefined for negative concentration')
    ratio = c / params.cR
    return params.alpha1 * ratio / (1 + ratio)


def concentration_gradient(
    c: np.ndarray, grid: AnnulusGrid, inner_flux: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Polar components (∂_r c, r⁻¹∂_θ c) by central differences. At the radial
    boundaries a ghost value is taken from the Neumann data: ∂_r c = c_r0 at r₀ and zero
    flux at r₁, so the boundary cells average their two face derivatives.

    :param c:          Concentration, shape (Nr, Nth)
    :param grid:       Annulus grid
    :param inner_flux: c_r0(θ) at r₀, shape (Nth,); zero when omitted
    :return:           Radial and angular gradient components, each (Nr, Nth)
    """
    flux = np.zeros(grid.nth) if inner_flux is None else np.asarray(inner_flux, dtype=float)
    inner_ghost = c[0] - grid.dr * flux
    padded = np.concatenate([inner_ghost[None, :], c, c[-1:]], axis=0)
    grad_r = (padded[2:] - padded[:-2]) / (2 * grid.dr)
    grad_th = (np.roll(c, -1, axis=1) - np.roll(c, 1, axis=1)) / (
        2 * grid.dth * grid.r[:, None]
    )
    return grad_r, grad_th


def taf_force(
    c: np.ndarray,
    params: ModelParams,
    grid: AnnulusGrid,
    inner_flux: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Chemotactic force F(c) = d₁ (1 + γ₁c)^{−q₁} ∇c in Cartesian components.

    :return: Array of shape (Nr, Nth, 2)
    """
    grad_r, grad_th = concentration_gradient(c, grid, inner_flux)
    scale = params.d1 * (1 + params.gamma1 * c) ** (-params.q1)
    e_r, e_th = grid.e_r[None], grid.e_theta[None]
    return scale[..., None] * (grad_r[..., None] * e_r + grad_th[..., None] * e_th)


def regularized_delta(vx, vy, params: ModelParams) -> np.ndarray:
    """Gaussian stand-in for the sprouting Dirac mass at v₀, width eps_nu."""
    eps2 = params.eps_nu ** 2
    dist2 = (vx - params.v0[0]) ** 2 + (vy - params.v0[1]) ** 2
    return np.exp(-dist2 / (2 * eps2)) / (2 * np.pi * eps2)


def fermi_weight(vx, vy, params: ModelParams, center=None) -> np.ndarray:
    """
    Velocity cut-off w(v) = [1 + exp(|v − χv₀|²/σ_v²)]⁻¹, evaluated in log space.
    Values below the underflow floor are flushed to zero.

    :param center: Window centre; χv₀ when omitted. May carry leading axes, shape (..., 2)
    """
    if center is None:
        center = params.window_center
    center = np.asarray(center, dtype=float)
    cx = center[..., 0, None, None] if center.ndim > 1 else center[0]
    cy = center[..., 1, None, None] if center.ndim > 1 else center[1]
    s = ((vx - cx) ** 2 + (vy - cy) ** 2) / params.sigma_v ** 2
    w = np.exp(-np.logaddexp(0.0, s))
    return np.where(w < Config.UNDERFLOW_FLOOR, 0.0, w)


def boundary_sprouting_velocity(
    params: ModelParams, inward_normals: np.ndarray, tangents: np.ndarray
) -> np.ndarray:
    """
    Sprouting velocity in the frame of each boundary point: v₀ = (v_0, w_0) read as
    components along the inward normal and the counter-clockwise tangent.

    :return: Cartesian vectors, shape (m, 2)
    """
    return params.v0[0] * inward_normals + params.v0[1] * tangents
