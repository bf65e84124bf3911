import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from vesselkin import Config
from vesselkin.fields import ModelParams, branching_rate
from vesselkin.kinetic import BoundaryConstants, BoundaryIterate, BoundaryTrace

__all__ = ['BoundaryIdentity', 'boundary_identity_check', 'recursion_check', 'sprouting_gain']

log = logging.getLogger(__name__)


@dataclass
class BoundaryIdentity:
    """
    Re-evaluated boundary identities, maxima over the boundary cells. The mismatches
    are ∫_in p⁻ + ∫_out p⁺ − ρ(r₀) and ∫_in |f₁|p⁻ + ∫_out f₁p⁺ − j₀; each equals the
    recorded clamp, so the residuals are the distances to the clamp.
    """

    inner_residual: float
    outer_residual: float
    inner_mismatch: float
    outer_mismatch: float
    scale: float = 1.0

    @property
    def passed(self) -> bool:
        tolerance = Config.IDENTITY_TOLERANCE * max(1.0, self.scale)
        return self.inner_residual <= tolerance and self.outer_residual <= tolerance

    def serialize(self) -> dict:
        return {
            'inner_residual': self.inner_residual,
            'outer_residual': self.outer_residual,
            'inner_mismatch': self.inner_mismatch,
            'outer_mismatch': self.outer_mismatch,
            'pass': self.passed,
        }


def boundary_identity_check(
    trace: BoundaryTrace,
    rho_r0: np.ndarray,
    j0: np.ndarray,
    consts: BoundaryConstants,
    inner_clamp: Optional[np.ndarray] = None,
    outer_clamp: Optional[np.ndarray] = None,
) -> BoundaryIdentity:
    """
    Checks the nonlocal boundary conditions by quadrature on the traces they produced.

    :param trace:  Incoming and outgoing traces at both circles
    :param rho_r0: Marginal the inner operator was fed, (Nth,)
    :param j0:     Datum the outer operator was fed, (Nth,)
    """
    nth = trace.inner_in.shape[0]
    inner_clamp = np.zeros(nth) if inner_clamp is None else inner_clamp
    outer_clamp = np.zeros(nth) if outer_clamp is None else outer_clamp
    marginal = (
        consts.inner.integrate_incoming(trace.inner_in)
        + consts.inner.integrate_outgoing(trace.inner_out)
    )
    flux = (
        consts.outer.integrate_incoming(trace.outer_in, np.abs(consts.f1))
        + consts.outer.integrate_outgoing(trace.outer_out, consts.f1)
    )
    inner_mismatch = marginal - rho_r0
    outer_mismatch = flux - j0
    scale = float(max(np.max(np.abs(rho_r0), initial=0.0), np.max(np.abs(j0), initial=0.0)))
    return BoundaryIdentity(
        inner_residual=float(np.max(np.abs(inner_mismatch - inner_clamp), initial=0.0)),
        outer_residual=float(np.max(np.abs(outer_mismatch - outer_clamp), initial=0.0)),
        inner_mismatch=float(np.max(np.abs(inner_mismatch), initial=0.0)),
        outer_mismatch=float(np.max(np.abs(outer_mismatch), initial=0.0)),
        scale=scale,
    )


def recursion_check(
    iterates: Sequence[BoundaryIterate],
    k1_inflow: float,
    K2: float,
    slack: float = Config.RECURSION_SLACK,
) -> List[bool]:
    """
    For every boundary pass m ≥ 3, whether the weighted outer inflow obeys

        ‖e^{−ωt}|v·n|p⁻_m‖ ≤ slack·(K₁‖e^{−ωt}j₀‖ + K₁K₂‖e^{−ωt}|v·n|p⁺_{m−1}‖)

    with K₁ the inflow constant, which bounds the weighted incoming trace by its bracket.
    """
    results = []
    for previous, current in zip(iterates, iterates[1:]):
        bound = k1_inflow * (current.j0_sup + K2 * previous.outer_out_sup)
        ok = current.outer_weighted_sup <= slack * bound + Config.UNDERFLOW_FLOOR
        if not ok:
            log.warning('boundary pass %d exceeds the recursion bound: %.6g > %.6g',
                        current.m, current.outer_weighted_sup, bound)
        results.append(ok)
    return results


def sprouting_gain(c_outer: np.ndarray, consts: BoundaryConstants, params: ModelParams) -> float:
    """
    Largest factor by which one outer boundary pass can amplify the tip density at the
    sprouting velocity. At v₀ the profile is one, so p⁻(v₀) ≤ v_0 α(c)/|I₁| · p(r₁, v₀);
    above one the inflow feeds on itself and the outer trace grows without bound.

    :param c_outer: Concentration in the outer ring of cells, (Nth,)
    """
    alpha = branching_rate(np.maximum(c_outer, 0.0), params)
    return float(np.max(params.v0[0] * alpha / consts.abs_I1))
