import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.special import exprel

from vesselkin import Config, NumericalException
from vesselkin.fields import ModelParams
from vesselkin.grids import AnnulusGrid, VelocityGrid, half_space_quadrature
from vesselkin.utils import cached_property

__all__ = [
    'Splitting',
    'StepControls',
    'StepRecord',
    'CFLLimits',
    'KineticGeometry',
    'cfl_limits',
    'cfl_dt',
    'transport_step',
    'velocity_step',
    'absorption_step',
    'reaction_step',
]

log = logging.getLogger(__name__)

# Monotonicity checks accept this much rounding above the exact limit.
_RATE_SLACK = 1e-12
MOMENT_ORDERS = (0, 1, 2)


class Splitting(Enum):
    STRANG = 'strang'
    LIE = 'lie'


@dataclass
class StepControls:
    dt: float
    cfl_safety: float = Config.CFL_SAFETY
    splitting: Splitting = Splitting.STRANG


@dataclass
class StepRecord:
    """
    Per step bookkeeping. Boundary fluxes are rates (per unit time) over the kinetic
    measure, indexed by the speed power in ``MOMENT_ORDERS``; reaction gains are the exact
    changes of Σ A ω |v|^s p made by the reaction sub-steps, divided by dt.
    """

    dt: float
    inflow: np.ndarray
    outflow: np.ndarray
    reaction_gain: np.ndarray
    trace_square_in: float = 0.0
    trace_square_out: float = 0.0
    inner_clamp: float = 0.0
    outer_clamp: float = 0.0
    clamp_events: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def trace_square(self) -> float:
        """∫ Tr p² over the kinetic measure, both halves of the boundary."""
        return self.trace_square_in + self.trace_square_out

    def serialize(self) -> dict:
        return {
            'dt': self.dt,
            'inflow': self.inflow,
            'outflow': self.outflow,
            'reaction_gain': self.reaction_gain,
            'trace_square': self.trace_square,
            'inner_clamp': self.inner_clamp,
            'outer_clamp': self.outer_clamp,
            'clamp_events': self.clamp_events,
        }


@dataclass
class CFLLimits:
    transport: float
    drift: float
    diffusion: float
    safety: float = Config.CFL_SAFETY

    @property
    def dt(self) -> float:
        return self.safety * min(self.transport, self.drift, self.diffusion)


class KineticGeometry:
    """
    Grid-derived data shared by every kinetic step: the radial and angular velocity
    components on the faces, the half-space split at both circles and the worst-case
    transport outflow rate. Built once per pair of grids.
    """

    def __init__(self, agrid: AnnulusGrid, vgrid: VelocityGrid, params: ModelParams) -> None:
        self.agrid = agrid
        self.vgrid = vgrid
        self.params = params

    @cached_property
    def inner(self):
        return half_space_quadrature(self.vgrid, self.agrid.inner_normals)

    @cached_property
    def outer(self):
        return half_space_quadrature(self.vgrid, self.agrid.outer_normals)

    @cached_property
    def u_r(self) -> np.ndarray:
        """v·ê_r(θ_j), shape (Nth, Nv, Nv). Equal to v·n on the outer circle."""
        return self.outer.vn

    @cached_property
    def u_theta(self) -> np.ndarray:
        """v·ê_θ(θ_{j+½}) on the angular faces, shape (Nth, Nv, Nv)."""
        e = self.agrid.e_theta_faces[:, None, None, :]
        return self.vgrid.vx * e[..., 0] + self.vgrid.vy * e[..., 1]

    @cached_property
    def cell_measure(self) -> np.ndarray:
        return self.agrid.areas[..., None, None]

    @cached_property
    def speed_powers(self) -> np.ndarray:
        return np.stack([self.vgrid.speed ** s for s in MOMENT_ORDERS])

    @cached_property
    def transport_rate(self) -> float:
        """max over cells of (outflow coefficient)/area; dt times this must stay ≤ 1."""
        lengths = self.agrid.radial_face_lengths[:, None, None, None]
        u = self.u_r[None]
        radial = np.maximum(u, 0) * lengths[1:] + np.maximum(-u, 0) * lengths[:-1]
        angular = self.agrid.dr * (
            np.maximum(self.u_theta, 0) + np.maximum(-np.roll(self.u_theta, 1, axis=0), 0)
        )
        return float(np.max((radial + angular[None]) / self.cell_measure))


def cfl_limits(
    agrid: AnnulusGrid,
    vgrid: VelocityGrid,
    params: ModelParams,
    force: Optional[np.ndarray] = None,
    safety: float = Config.CFL_SAFETY,
) -> CFLLimits:
    """
    The three explicit sub-step limits: Δx/Vmax for transport, Δv/max|F − βv| for the
    drift (largest drift component over the box) and Δv²/(4σ) for velocity diffusion.
    """
    dx = min(agrid.dr, agrid.r0 * agrid.dth)
    transport = dx / vgrid.vmax
    force_max = float(np.max(np.abs(force))) if force is not None and np.size(force) else 0.0
    drift_speed = force_max + params.beta * vgrid.vmax
    drift = vgrid.dv / drift_speed if drift_speed > 0 else math.inf
    diffusion = vgrid.dv ** 2 / (4 * params.sigma) if params.sigma > 0 else math.inf
    return CFLLimits(transport=transport, drift=drift, diffusion=diffusion, safety=safety)


def cfl_dt(agrid, vgrid, params, force=None, safety: float = Config.CFL_SAFETY) -> float:
    return cfl_limits(agrid, vgrid, params, force, safety).dt


def transport_step(
    p: np.ndarray,
    inner_in: np.ndarray,
    outer_in: np.ndarray,
    dt: float,
    geometry: KineticGeometry,
) -> Tuple[np.ndarray, dict]:
    """
    First-order upwind finite-volume advection v·∇ₓp over one step of length ``dt``.
    Incoming boundary faces read the supplied inflow traces, grazing velocities carry no
    boundary flux.

    :param p:        Density, (Nr, Nth, Nv, Nv)
    :param inner_in: Incoming trace at r₀, (Nth, Nv, Nv)
    :param outer_in: Incoming trace at r₁, (Nth, Nv, Nv)
    :return:         Updated density and the boundary flux record
    :raises NumericalException: If dt exceeds the monotonicity limit
    """
    if dt * geometry.transport_rate > 1 + _RATE_SLACK:
        raise NumericalException(
            f'transport step violates the CFL limit (dt={dt:.3g}, '
            f'limit={1 / geometry.transport_rate:.3g})'
        )
    agrid, vgrid = geometry.agrid, geometry.vgrid
    inner, outer = geometry.inner, geometry.outer
    lengths = agrid.radial_face_lengths
    u = geometry.u_r

    inner_trace_in = np.where(inner.incoming, inner_in, 0.0)
    inner_trace_out = np.where(inner.outgoing, p[0], 0.0)
    outer_trace_out = np.where(outer.outgoing, p[-1], 0.0)
    outer_trace_in = np.where(outer.incoming, outer_in, 0.0)

    interior = u[None] * np.where(u[None] > 0, p[:-1], p[1:])
    radial = np.concatenate([
        (u * (inner_trace_in + inner_trace_out))[None],
        interior,
        (u * (outer_trace_out + outer_trace_in))[None],
    ]) * lengths[:, None, None, None]

    u_th = geometry.u_theta[None]
    angular = agrid.dr * u_th * np.where(u_th > 0, p, np.roll(p, -1, axis=1))

    divergence = radial[1:] - radial[:-1] + angular - np.roll(angular, 1, axis=1)
    p_new = p - dt / geometry.cell_measure * divergence

    kinetic_inner = lengths[0] * np.abs(u)
    kinetic_outer = lengths[-1] * np.abs(u)
    powers = geometry.speed_powers[:, None]
    inflow = (
        (powers * kinetic_inner * inner_trace_in).sum(axis=(1, 2, 3))
        + (powers * kinetic_outer * outer_trace_in).sum(axis=(1, 2, 3))
    ) * vgrid.weight
    outflow = (
        (powers * kinetic_inner * inner_trace_out).sum(axis=(1, 2, 3))
        + (powers * kinetic_outer * outer_trace_out).sum(axis=(1, 2, 3))
    ) * vgrid.weight
    square_in = float(
        (kinetic_inner * inner_trace_in ** 2 + kinetic_outer * outer_trace_in ** 2).sum()
    ) * vgrid.weight
    square_out = float(
        (kinetic_inner * inner_trace_out ** 2 + kinetic_outer * outer_trace_out ** 2).sum()
    ) * vgrid.weight
    return p_new, {
        'inflow': inflow,
        'outflow': outflow,
        'trace_square_in': square_in,
        'trace_square_out': square_out,
    }


def bernoulli(x) -> np.ndarray:
    """B(x) = x / (eˣ − 1)."""
    return 1.0 / exprel(x)


def _fitted_coefficients(a: np.ndarray, sigma: float, dv: float):
    """
    Exponentially fitted face flux Φ = c₊ p_left − c₋ p_right for drift ``a`` and
    diffusivity σ. Without diffusion it is plain upwinding.
    """
    if sigma > 0:
        w = a * dv / sigma
        return sigma / dv * bernoulli(-w), sigma / dv * bernoulli(w)
    return np.maximum(a, 0.0), np.maximum(-a, 0.0)


def _drift_field(force: Optional[np.ndarray], shape) -> np.ndarray:
    if force is None:
        return np.zeros(shape + (2,))
    return np.broadcast_to(np.asarray(force, dtype=float), shape + (2,))


def velocity_step(
    p: np.ndarray,
    force: Optional[np.ndarray],
    dt: float,
    vgrid: VelocityGrid,
    params: ModelParams,
) -> np.ndarray:
    """
    Fokker-Planck step ∂ₜp = −div_v((F − βv)p) + σΔ_v p with zero flux through the
    velocity box. Face fluxes are exponentially fitted, which is monotone for any cell
    Péclet number and keeps the discrete Maxwellian centred at F/β fixed.

    :param force: Force per spatial cell, (Nr, Nth, 2), or None for F = 0
    :raises NumericalException: If dt exceeds the monotonicity limit
    """
    spatial = p.shape[:-2]
    force = _drift_field(force, spatial)
    inner_faces = vgrid.faces[1:-1]
    drift_x = force[..., 0, None] - params.beta * inner_faces
    drift_y = force[..., 1, None] - params.beta * inner_faces
    cx_plus, cx_minus = _fitted_coefficients(drift_x, params.sigma, vgrid.dv)
    cy_plus, cy_minus = _fitted_coefficients(drift_y, params.sigma, vgrid.dv)

    pad = [(0, 0)] * len(spatial)
    rate_x = np.pad(cx_plus, pad + [(0, 1)]) + np.pad(cx_minus, pad + [(1, 0)])
    rate_y = np.pad(cy_plus, pad + [(0, 1)]) + np.pad(cy_minus, pad + [(1, 0)])
    rate = float(np.max(rate_x.max(axis=-1) + rate_y.max(axis=-1))) / vgrid.dv
    if dt * rate > 1 + _RATE_SLACK:
        raise NumericalException(
            f'velocity step violates the monotonicity limit (dt={dt:.3g}, limit={1 / rate:.3g})'
        )

    flux_x = cx_plus[..., :, None] * p[..., :-1, :] - cx_minus[..., :, None] * p[..., 1:, :]
    flux_y = cy_plus[..., None, :] * p[..., :, :-1] - cy_minus[..., None, :] * p[..., :, 1:]
    flux_x = np.pad(flux_x, pad + [(1, 1), (0, 0)])
    flux_y = np.pad(flux_y, pad + [(0, 0), (1, 1)])
    divergence = (
        flux_x[..., 1:, :] - flux_x[..., :-1, :] + flux_y[..., :, 1:] - flux_y[..., :, :-1]
    ) / vgrid.dv
    return p - dt * divergence


def absorption_step(
    p: np.ndarray, absorption, source, dt: float
) -> np.ndarray:
    """
    Exact solution of ∂ₜp = −a p + h over ``dt`` for frozen a and h:
    p' = p e^{−a dt} + h dt φ(−a dt), φ(z) = (eᶻ − 1)/z.
    """
    if absorption is None:
        return p if source is None else p + dt * source
    z = -np.asarray(absorption, dtype=float) * dt
    p_new = p * np.exp(z)
    if source is not None:
        p_new = p_new + source * dt * exprel(z)
    return p_new


def reaction_step(p, alpha_field, nu_field, b, gamma: float, dt: float) -> np.ndarray:
    """
    Model reaction p' = p exp(dt (α(c)ν(v) − γb)).

    :param alpha_field: α(c) per spatial cell, (Nr, Nth)
    :param nu_field:    ν(v) on the velocity grid, (Nv, Nv)
    :param b:           Anastomosis accumulator values, (Nr, Nth)
    """
    return absorption_step(p, model_absorption(alpha_field, nu_field, b, gamma), None, dt)


def model_absorption(alpha_field, nu_field, b, gamma: float) -> np.ndarray:
    """a = γb − α(c)ν, shape (Nr, Nth, Nv, Nv)."""
    alpha_field = np.asarray(alpha_field, dtype=float)
    b = np.asarray(b, dtype=float)
    return gamma * b[..., None, None] - alpha_field[..., None, None] * nu_field
