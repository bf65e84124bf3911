from typing import Optional

import numpy as np

from vesselkin import Config
from vesselkin.kinetic import KineticCoefficients, KineticGeometry, StepRecord

__all__ = [
    'mass_balance_residual',
    'momentum_balance_residual',
    'lq_identity_residual',
    'velocity_dirichlet_form',
]


def _integrate(values: np.ndarray, geometry: KineticGeometry) -> float:
    """Σ A ω values over phase space."""
    return float(np.sum(values * geometry.cell_measure)) * geometry.vgrid.weight


def _reaction_rate(
    p: np.ndarray,
    coefficients: Optional[KineticCoefficients],
    geometry: KineticGeometry,
    weight=1.0,
) -> float:
    """∫ w (h − a p) at the state ``p``."""
    if coefficients is None:
        return 0.0
    rate = np.zeros(p.shape)
    if coefficients.absorption is not None:
        rate = rate - np.asarray(coefficients.absorption) * p
    if coefficients.source is not None:
        rate = rate + np.asarray(coefficients.source)
    return _integrate(weight * rate, geometry)


def mass_balance_residual(
    p_before: np.ndarray,
    p_after: np.ndarray,
    record: StepRecord,
    geometry: KineticGeometry,
    coefficients: Optional[KineticCoefficients] = None,
    exact_reaction: bool = True,
) -> float:
    """
    |Δmass/dt − (inflow − outflow + ∫h − ∫ap)| for one step.

    With ``exact_reaction`` the reaction contribution is the change the reaction
    sub-steps actually made, which leaves only rounding for the conservative core.
    Otherwise ∫h − ∫ap is evaluated at the step midpoint and the residual measures the
    splitting error.
    """
    dm = (_integrate(p_after, geometry) - _integrate(p_before, geometry)) / record.dt
    boundary = float(record.inflow[0] - record.outflow[0])
    if exact_reaction:
        reaction = float(record.reaction_gain[0])
    else:
        reaction = _reaction_rate((p_before + p_after) / 2, coefficients, geometry)
    return abs(dm - (boundary + reaction))


def momentum_balance_residual(
    p_before: np.ndarray,
    p_after: np.ndarray,
    record: StepRecord,
    geometry: KineticGeometry,
    mu: int,
    coefficients: Optional[KineticCoefficients] = None,
) -> float:
    """
    Residual of the balance of the velocity moment m^μ = ∫|v|^μ p for μ ∈ {1, 2}:

        dm^μ/dt = in − out − βμ m^μ + μ(μ−2+N)σ m^{μ−2} + μ∫F·v|v|^{μ−2}p + reaction

    Boundary fluxes and the reaction contribution come from the step record, the
    velocity terms are evaluated at the step midpoint. For μ = 1 the weight |v|⁻¹ is cut
    off at Δv/2.

    :raises ValueError: For other orders
    """
    if mu not in (1, 2):
        raise ValueError(f'momentum balance is available for mu in (1, 2), got {mu}')
    vgrid, params = geometry.vgrid, geometry.params
    n = Config.N
    mid = (p_before + p_after) / 2
    weight = geometry.speed_powers[mu]
    if mu == 1:
        inverse = 1 / np.maximum(vgrid.speed, vgrid.dv / 2)
    else:
        inverse = np.ones(vgrid.shape)

    dm = (_integrate(weight * p_after, geometry) - _integrate(weight * p_before, geometry))
    dm /= record.dt
    velocity = -params.beta * mu * _integrate(weight * mid, geometry)
    velocity += mu * (mu - 2 + n) * params.sigma * _integrate(inverse * mid, geometry)
    if coefficients is not None and coefficients.force is not None:
        force = np.broadcast_to(np.asarray(coefficients.force), mid.shape[:-2] + (2,))
        f_dot_v = force[..., 0, None, None] * vgrid.vx + force[..., 1, None, None] * vgrid.vy
        if mu == 1:
            f_dot_v = f_dot_v * inverse
        velocity += mu * _integrate(f_dot_v * mid, geometry)
    boundary = float(record.inflow[mu] - record.outflow[mu])
    return abs(dm - (boundary + velocity + float(record.reaction_gain[mu])))


def velocity_dirichlet_form(
    p: np.ndarray, geometry: KineticGeometry, other: Optional[np.ndarray] = None
) -> float:
    """
    Σ A Σ_faces Δp Δq over the interior velocity faces, the discrete ∫∇_v p·∇_v q that
    pairs with the diffusion stencil of the velocity step. ``other`` defaults to ``p``,
    which gives ∫|∇_v p|².
    """
    q = p if other is None else other
    total = (np.diff(p, axis=-2) * np.diff(q, axis=-2)).sum(axis=(-2, -1))
    total = total + (np.diff(p, axis=-1) * np.diff(q, axis=-1)).sum(axis=(-2, -1))
    return float(np.sum(geometry.agrid.areas * total))


def lq_identity_residual(
    p_before: np.ndarray,
    p_after: np.ndarray,
    record: StepRecord,
    geometry: KineticGeometry,
    coefficients: Optional[KineticCoefficients] = None,
    q: int = 2,
) -> float:
    """
    Residual of the L² identity

        d‖p‖²/dt = Nβ‖p‖² − 2σ∫|∇_v p|² − 2∫a p² + 2∫h p + ∫_in |v·n| g² − ∫_out |v·n| p²

    in the discrete form ‖p'‖² − ‖p‖² = 2⟨(p + p')/2, p' − p⟩: the rate terms pair the
    step midpoint with the state at the start of the step. An explicit velocity
    diffusion step satisfies it up to rounding.

    :raises ValueError: If q is not 2
    """
    if q != 2:
        raise ValueError(f'the L^q identity is evaluated for q = 2 only, got {q}')
    params = geometry.params
    mid = (p_before + p_after) / 2
    dn = (_integrate(p_after ** 2, geometry) - _integrate(p_before ** 2, geometry)) / record.dt
    rate = Config.N * params.beta * _integrate(mid * p_before, geometry)
    rate -= 2 * params.sigma * velocity_dirichlet_form(mid, geometry, p_before)
    rate += 2 * _reaction_rate(p_before, coefficients, geometry, weight=mid)
    rate += record.trace_square_in - record.trace_square_out
    return abs(dn - rate)
