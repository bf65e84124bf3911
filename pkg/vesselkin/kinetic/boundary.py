import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from vesselkin import Config, ConfigException
from vesselkin.fields import (
    ModelParams,
    boundary_sprouting_velocity,
    branching_rate,
    fermi_weight,
)
from vesselkin.grids import (
    AnnulusGrid,
    HalfSpaceQuadrature,
    VelocityGrid,
    half_space_quadrature,
)

__all__ = [
    'BoundaryConstants',
    'BoundaryTrace',
    'TraceSummary',
    'compute_boundary_constants',
    'compute_j0',
    'apply_inner_bc',
    'apply_outer_bc',
    'inner_trace_from_bracket',
    'outer_trace_from_bracket',
    'NonlocalBoundary',
    'admissibility_constants',
]

log = logging.getLogger(__name__)


@dataclass
class BoundaryConstants:
    """
    Per boundary cell data of the nonlocal operators. Profiles are the Gaussians
    e^{−(β/σ)|v − v₀|²} centred at the boundary-frame sprouting velocity, restricted to
    the incoming set; ``f1`` is (v·n) w(v) with the Fermi window centred at χ times that
    velocity. Arrays are (Nth, Nv, Nv) and normalizers (Nth,).
    """

    inner: HalfSpaceQuadrature
    outer: HalfSpaceQuadrature
    inner_profile: np.ndarray
    outer_profile: np.ndarray
    f1: np.ndarray
    window: np.ndarray
    I0: np.ndarray
    I1: np.ndarray
    inner_velocity: np.ndarray
    outer_velocity: np.ndarray

    @property
    def abs_I1(self) -> np.ndarray:
        return np.abs(self.I1)


@dataclass
class BoundaryTrace:
    """Incoming and outgoing traces at both circles, each (Nth, Nv, Nv), zero off their set."""

    inner_in: np.ndarray
    inner_out: np.ndarray
    outer_in: np.ndarray
    outer_out: np.ndarray


@dataclass
class TraceSummary:
    """
    Per boundary cell integrals of one step's traces. This is all a later iterate needs
    to rebuild the lagged boundary data, so trajectories keep these instead of traces.
    """

    inner_in_mass: np.ndarray
    inner_out_mass: np.ndarray
    outer_in_weighted: np.ndarray
    outer_out_weighted: np.ndarray
    j0: np.ndarray
    inner_clamp: np.ndarray
    outer_clamp: np.ndarray
    outer_in_sup: float = 0.0
    outer_out_sup: float = 0.0

    @property
    def inner_marginal(self) -> np.ndarray:
        return self.inner_in_mass + self.inner_out_mass


def _gaussian(vgrid: VelocityGrid, centers: np.ndarray, kappa: float) -> np.ndarray:
    dx = vgrid.vx[None] - centers[:, 0, None, None]
    dy = vgrid.vy[None] - centers[:, 1, None, None]
    return np.exp(-kappa * (dx ** 2 + dy ** 2))


def compute_boundary_constants(
    agrid: AnnulusGrid, vgrid: VelocityGrid, params: ModelParams
) -> BoundaryConstants:
    """
    :raises ConfigException: If I0 or |I1| underflows, the operator cannot be represented
    """
    kappa = params.beta / params.sigma
    inner = half_space_quadrature(vgrid, agrid.inner_normals)
    outer = half_space_quadrature(vgrid, agrid.outer_normals)
    inner_velocity = boundary_sprouting_velocity(params, agrid.e_r, agrid.e_theta)
    outer_velocity = boundary_sprouting_velocity(params, -agrid.e_r, agrid.e_theta)

    inner_profile = np.where(inner.incoming, _gaussian(vgrid, inner_velocity, kappa), 0.0)
    outer_profile = np.where(outer.incoming, _gaussian(vgrid, outer_velocity, kappa), 0.0)
    window = fermi_weight(vgrid.vx, vgrid.vy, params, center=params.chi * outer_velocity)
    f1 = outer.vn * window

    I0 = inner_profile.sum(axis=(-2, -1)) * vgrid.weight
    I1 = (outer_profile * f1).sum(axis=(-2, -1)) * vgrid.weight
    if I0.min() < Config.UNDERFLOW_FLOOR:
        raise ConfigException(
            f'inner boundary normalizer underflows (min I0 = {I0.min():.3g})'
        )
    if np.abs(I1).min() < Config.UNDERFLOW_FLOOR:
        raise ConfigException(
            f'outer boundary normalizer underflows (min |I1| = {np.abs(I1).min():.3g}); '
            'the Fermi window does not reach the incoming velocities'
        )
    log.debug('boundary normalizers: I0 in [%g, %g], I1 in [%g, %g]',
              I0.min(), I0.max(), I1.min(), I1.max())
    return BoundaryConstants(
        inner=inner,
        outer=outer,
        inner_profile=inner_profile,
        outer_profile=outer_profile,
        f1=f1,
        window=window,
        I0=I0,
        I1=I1,
        inner_velocity=inner_velocity,
        outer_velocity=outer_velocity,
    )


def compute_j0(
    c_outer: np.ndarray,
    p_outer: np.ndarray,
    params: ModelParams,
    vgrid: VelocityGrid,
    consts: BoundaryConstants,
) -> np.ndarray:
    """
    Sprouting flux j₀ = v_0 α(c(r₁,θ)) p(r₁,θ,v₀) per outer boundary cell, with p taken
    at the boundary-frame sprouting velocity by bilinear interpolation in v.

    :param c_outer: Concentration in the outer ring of cells, (Nth,)
    :param p_outer: Tip density in the outer ring of cells, (Nth, Nv, Nv)

    :raises ConfigException: If the sprouting velocity lies outside the velocity box
    """
    points = consts.outer_velocity
    lo, hi = vgrid.centers[0], vgrid.centers[-1]
    if points.min() < lo or points.max() > hi:
        raise ConfigException('sprouting velocity v0 lies outside the velocity box')
    nth = p_outer.shape[0]
    interpolator = RegularGridInterpolator(
        (np.arange(nth, dtype=float), vgrid.centers, vgrid.centers), p_outer
    )
    values = interpolator(np.column_stack([np.arange(nth, dtype=float), points]))
    return params.v0[0] * branching_rate(c_outer, params) * np.maximum(values, 0.0)


def inner_trace_from_bracket(bracket: np.ndarray, consts: BoundaryConstants):
    """Incoming inner trace for a given bracket, clamped at zero. Returns (trace, clamp)."""
    clamp = np.maximum(-bracket, 0.0)
    amount = np.maximum(bracket, 0.0) / consts.I0
    return consts.inner_profile * amount[:, None, None], clamp


def outer_trace_from_bracket(bracket: np.ndarray, consts: BoundaryConstants):
    clamp = np.maximum(-bracket, 0.0)
    amount = np.maximum(bracket, 0.0) / consts.abs_I1
    return consts.outer_profile * amount[:, None, None], clamp


def apply_inner_bc(
    p_out: np.ndarray, rho_r0: np.ndarray, consts: BoundaryConstants, vgrid: VelocityGrid
) -> Tuple[np.ndarray, np.ndarray]:
    """
    p⁻ = e^{−(β/σ)|v−v₀|²}/I0 · [ρ(r₀,θ) − ∫_{v·n>0} p⁺ dv].

    :param p_out:  Inner ring values, only the outgoing set is read, (Nth, Nv, Nv)
    :param rho_r0: Marginal at r₀, (Nth,)
    :return:       Incoming trace and the clamp magnitude per boundary cell
    """
    bracket = rho_r0 - consts.inner.integrate_outgoing(p_out)
    trace, clamp = inner_trace_from_bracket(bracket, consts)
    if clamp.any():
        log.info('inner boundary bracket clamped in %d cells (max %.3g)',
                 np.count_nonzero(clamp), clamp.max())
    return trace, clamp


def apply_outer_bc(
    p_out: np.ndarray, j0: np.ndarray, consts: BoundaryConstants, vgrid: VelocityGrid
) -> Tuple[np.ndarray, np.ndarray]:
    """
    p⁻ = e^{−(β/σ)|v−v₀|²}/|I1| · [j₀ − ∫_{v·n>0} p⁺ f₁ dv].

    :return: Incoming trace and the clamp magnitude per boundary cell
    """
    bracket = j0 - consts.outer.integrate_outgoing(p_out, consts.f1)
    trace, clamp = outer_trace_from_bracket(bracket, consts)
    if clamp.any():
        log.info('outer boundary bracket clamped in %d cells (max %.3g)',
                 np.count_nonzero(clamp), clamp.max())
    return trace, clamp


class NonlocalBoundary:
    """
    Builds incoming traces from the nonlocal operators. The marginal fed to the inner
    operator is the marginal of the boundary trace, i.e. the incoming mass applied at
    the lagged step plus the current outgoing mass.
    """

    def __init__(self, consts: BoundaryConstants, params: ModelParams, vgrid: VelocityGrid):
        self.consts = consts
        self.params = params
        self.vgrid = vgrid

    def outgoing(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        inner = np.where(self.consts.inner.outgoing, p[0], 0.0)
        outer = np.where(self.consts.outer.outgoing, p[-1], 0.0)
        return inner, outer

    def summarize(
        self,
        p: np.ndarray,
        inner_in: np.ndarray,
        outer_in: np.ndarray,
        j0: np.ndarray,
        inner_clamp=None,
        outer_clamp=None,
    ) -> TraceSummary:
        """Integrals of the traces of state ``p`` and the incoming traces applied with it."""
        consts = self.consts
        inner_out, outer_out = self.outgoing(p)
        zeros = np.zeros(p.shape[1])
        outer_vn = np.abs(consts.outer.vn)
        return TraceSummary(
            inner_in_mass=consts.inner.integrate_incoming(inner_in),
            inner_out_mass=consts.inner.integrate_outgoing(inner_out),
            outer_in_weighted=consts.outer.integrate_incoming(outer_in, np.abs(consts.f1)),
            outer_out_weighted=consts.outer.integrate_outgoing(outer_out, consts.f1),
            j0=np.asarray(j0, dtype=float) * np.ones(p.shape[1]),
            inner_clamp=zeros if inner_clamp is None else inner_clamp,
            outer_clamp=zeros if outer_clamp is None else outer_clamp,
            outer_in_sup=float(np.max(outer_vn * outer_in)),
            outer_out_sup=float(np.max(np.where(consts.outer.outgoing, outer_vn * outer_out, 0))),
        )

    def incoming_from_state(self, p: np.ndarray, lagged_inner_mass: np.ndarray, j0: np.ndarray):
        """
        Incoming traces for the step that starts from ``p``.

        :return: (inner trace, outer trace, inner clamp, outer clamp)
        """
        inner_out, outer_out = self.outgoing(p)
        rho_r0 = lagged_inner_mass + self.consts.inner.integrate_outgoing(inner_out)
        inner_in, inner_clamp = apply_inner_bc(inner_out, rho_r0, self.consts, self.vgrid)
        outer_in, outer_clamp = apply_outer_bc(outer_out, j0, self.consts, self.vgrid)
        return inner_in, outer_in, inner_clamp, outer_clamp

    def incoming_from_summary(self, previous: TraceSummary):
        """Incoming traces rebuilt from the trace integrals of the previous iterate."""
        inner_bracket = previous.inner_marginal - previous.inner_out_mass
        outer_bracket = previous.j0 - previous.outer_out_weighted
        inner_in, inner_clamp = inner_trace_from_bracket(inner_bracket, self.consts)
        outer_in, outer_clamp = outer_trace_from_bracket(outer_bracket, self.consts)
        return inner_in, outer_in, inner_clamp, outer_clamp


def admissibility_constants(
    consts: BoundaryConstants, params: ModelParams, vgrid: VelocityGrid
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per outer boundary cell constants of the boundary fixed point:

    - K1 = max_{v·n>0} |v·n| e^{−(β/σ)|v−v₀|²} / |I1|
    - K2 = ∫_{v·n>0} w(v) dv
    - the inflow constant max_{v·n<0} |v·n| e^{−(β/σ)|v−v₀|²} / |I1|, which bounds the
      weighted incoming trace by the bracket

    :return: (K1, K2, inflow constant), each (Nth,)
    """
    kappa = params.beta / params.sigma
    weighted = np.abs(consts.outer.vn) * _gaussian(vgrid, consts.outer_velocity, kappa)
    outgoing_peak = np.where(consts.outer.outgoing, weighted, 0.0).max(axis=(-2, -1))
    incoming_peak = np.where(consts.outer.incoming, weighted, 0.0).max(axis=(-2, -1))
    k2 = consts.outer.integrate_outgoing(consts.window)
    return outgoing_peak / consts.abs_I1, k2, incoming_peak / consts.abs_I1
