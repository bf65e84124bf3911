import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from vesselkin import Config
from vesselkin.fields import (
    ModelParams,
    flux_kernel_norm,
    marginal_density,
    moment,
    tip_flux,
    weighted_sup_norm,
)
from vesselkin.grids import AnnulusGrid, VelocityGrid, integrate_velocity

__all__ = [
    'Check',
    'BoundTracker',
    'bound_suite',
    'interpolation_report',
    'relative_margin',
]

log = logging.getLogger(__name__)


def relative_margin(bound: float, observed: float) -> float:
    """(bound − observed) scaled by the larger magnitude; zero when both vanish."""
    scale = max(abs(bound), abs(observed))
    if scale == 0:
        return 0.0
    return (bound - observed) / scale


@dataclass
class Check:
    """
    One inequality evaluated on a snapshot. ``margin`` is bound − observed; ``passed``
    compares the relative margin against ``slack``. Checks that are not ``applicable``
    under the run's data always pass.
    """

    bound: float
    observed: float
    slack: float = 0.0
    applicable: bool = True

    @property
    def margin(self) -> float:
        return self.bound - self.observed

    @property
    def passed(self) -> bool:
        if not self.applicable:
            return True
        return relative_margin(self.bound, self.observed) >= -self.slack

    def serialize(self) -> dict:
        return {
            'bound': self.bound,
            'observed': self.observed,
            'margin': self.margin,
            'pass': self.passed,
            'applicable': self.applicable,
        }


@dataclass
class BoundTracker:
    """
    Time integrals and running maxima of the data that enter the a priori bounds.
    Built from the initial state and advanced once per step by ``advance``.
    """

    p0_sup: float
    p0_l1: float
    p0_l2: float
    p0_weighted: float
    c0_sup: float
    mu: float = Config.MOMENT_ORDER
    t: float = 0.0
    a_minus: float = 0.0  # ∫‖a⁻‖∞ ds
    weighted_rate: float = 0.0  # ∫ A(s) ds
    g_sup: float = 0.0
    g_weighted: float = 0.0
    h_integral: float = 0.0
    h_weighted_integral: float = 0.0
    g_l1: float = 0.0  # ∫ inflow over the kinetic measure
    g_l2: float = 0.0  # ∫ inflow trace square over the kinetic measure
    rho_square: float = 0.0  # trapezoid of ‖ρ‖₂²
    injection: float = 0.0  # ∫ max|c_r0| ds
    source_free: bool = True
    force_in_box: bool = True

    @classmethod
    def start(
        cls,
        p0: np.ndarray,
        c0: np.ndarray,
        agrid: AnnulusGrid,
        vgrid: VelocityGrid,
        mu: float = Config.MOMENT_ORDER,
    ) -> 'BoundTracker':
        areas = agrid.areas[..., None, None]
        return cls(
            p0_sup=float(np.max(np.abs(p0))) if np.size(p0) else 0.0,
            p0_l1=float(np.sum(areas * np.abs(p0))) * vgrid.weight,
            p0_l2=math.sqrt(float(np.sum(areas * p0 ** 2)) * vgrid.weight),
            p0_weighted=weighted_sup_norm(p0, mu, vgrid),
            c0_sup=float(np.max(np.abs(c0))) if np.size(c0) else 0.0,
            mu=mu,
        )

    def advance(
        self,
        dt: float,
        params: ModelParams,
        vgrid: VelocityGrid,
        agrid: AnnulusGrid,
        absorption=None,
        source=None,
        force=None,
        inner_in=None,
        outer_in=None,
        inflow_mass: float = 0.0,
        inflow_square: float = 0.0,
        rho_before: Optional[np.ndarray] = None,
        rho_after: Optional[np.ndarray] = None,
        inner_flux: Optional[np.ndarray] = None,
    ) -> None:
        n = Config.N
        a_minus = 0.0 if absorption is None else float(np.max(np.maximum(-absorption, 0.0)))
        force_sup = 0.0
        if force is not None and np.size(force):
            force = np.asarray(force)
            force_sup = float(np.max(np.hypot(force[..., 0], force[..., 1])))
            if float(np.max(np.abs(force))) > params.beta * (vgrid.vmax - vgrid.dv):
                self.force_in_box = False
        mu = self.mu
        self.a_minus += dt * a_minus
        self.weighted_rate += dt * (
            (n * force_sup + params.beta) * mu + params.sigma * mu * (mu + 2 + n)
            + n * params.beta + a_minus
        )
        for trace in (inner_in, outer_in):
            if trace is not None and np.size(trace):
                self.g_sup = max(self.g_sup, float(np.max(np.abs(trace))))
                self.g_weighted = max(self.g_weighted, weighted_sup_norm(trace, mu, vgrid))
        if source is not None:
            self.source_free = False
            self.h_integral += dt * float(np.max(np.abs(source)))
            self.h_weighted_integral += dt * weighted_sup_norm(
                np.asarray(source) * np.ones(vgrid.shape), mu, vgrid
            )
        self.g_l1 += dt * inflow_mass
        self.g_l2 += dt * inflow_square
        if rho_before is not None and rho_after is not None:
            self.rho_square += dt * float(
                np.sum(agrid.areas * (rho_before ** 2 + rho_after ** 2))
            ) / 2
        if inner_flux is not None:
            self.injection += dt * float(np.max(np.abs(inner_flux)))
        self.t += dt

    def serialize(self) -> dict:
        return {
            't': self.t,
            'p0_sup': self.p0_sup,
            'g_sup': self.g_sup,
            'a_minus_integral': self.a_minus,
            'weighted_exponent': self.weighted_rate,
            'source_free': self.source_free,
            'force_in_box': self.force_in_box,
        }


def bound_suite(
    p: np.ndarray,
    tracker: BoundTracker,
    agrid: AnnulusGrid,
    vgrid: VelocityGrid,
    params: ModelParams,
    c: Optional[np.ndarray] = None,
    b: Optional[np.ndarray] = None,
    b_from_same_run: bool = True,
) -> Dict[str, Check]:
    """
    The a priori bounds at the snapshot time ``tracker.t``:

    - ``linf``: ‖p‖∞ ≤ e^{∫(Nβ + ‖a⁻‖)}(‖p₀‖∞ + ‖g‖∞ + ∫‖h‖∞), when |F| stays inside the
      drift range of the velocity box
    - ``l1``, ``l2``: ‖p‖_q ≤ e^{(Nβ(q−1)/q)t + ∫‖a⁻‖}(‖p₀‖_q + ‖g‖_{q,in}) without source
    - ``weighted``: ‖(1+|v|²)^{μ/2}p‖∞ ≤ B e^{∫A} with
      A = (N‖F‖+β)μ + σμ(μ+2+N) + Nβ + ‖a⁻‖
    - ``flux``: ‖j‖∞ ≤ ‖|v|w‖_{L¹}‖p‖∞
    - ``anastomosis``: ‖b‖₂ ≤ t^{1/2}‖ρ‖_{L²(0,t;L²)}
    - ``taf``: ‖c‖∞ ≤ ‖c₀‖∞ plus the injected amount, an alarm for the inner flux datum

    The last two need c and b. The anastomosis bound only applies when b was built from
    the marginals the tracker integrated, i.e. not inside a Picard iterate.
    """
    n = Config.N
    t = tracker.t
    areas = agrid.areas[..., None, None]
    p_sup = float(np.max(np.abs(p))) if np.size(p) else 0.0

    checks = {
        'linf': Check(
            bound=math.exp(n * params.beta * t + tracker.a_minus)
            * (tracker.p0_sup + tracker.g_sup + tracker.h_integral),
            observed=p_sup,
            applicable=tracker.force_in_box,
        ),
        'l1': Check(
            bound=math.exp(tracker.a_minus) * (tracker.p0_l1 + tracker.g_l1),
            observed=float(np.sum(areas * np.abs(p))) * vgrid.weight,
            slack=1e-12,
            applicable=tracker.source_free,
        ),
        'l2': Check(
            bound=math.exp(n * params.beta * t / 2 + tracker.a_minus)
            * (tracker.p0_l2 + math.sqrt(tracker.g_l2)),
            observed=math.sqrt(float(np.sum(areas * p ** 2)) * vgrid.weight),
            applicable=tracker.source_free,
        ),
        'weighted': Check(
            bound=(tracker.p0_weighted + tracker.g_weighted + tracker.h_weighted_integral)
            * math.exp(tracker.weighted_rate),
            observed=weighted_sup_norm(p, tracker.mu, vgrid),
        ),
        'flux': Check(
            bound=flux_kernel_norm(vgrid, params) * p_sup,
            observed=float(np.max(np.abs(tip_flux(p, vgrid, params)))) if np.size(p) else 0.0,
            slack=1e-12,
        ),
    }
    if b is not None:
        checks['anastomosis'] = Check(
            bound=math.sqrt(t * tracker.rho_square),
            observed=math.sqrt(float(np.sum(agrid.areas * b ** 2))),
            slack=1e-12,
            applicable=b_from_same_run,
        )
    if c is not None:
        checks['taf'] = Check(
            bound=tracker.c0_sup + params.d * tracker.injection * agrid.r0
            / (agrid.r[0] * agrid.dr),
            observed=float(np.max(np.abs(c))) if np.size(c) else 0.0,
            slack=1e-12,
        )
    for name, check in checks.items():
        if not check.passed:
            log.warning('bound %s violated at t=%.4g: %.6g > %.6g',
                        name, t, check.observed, check.bound)
    return checks


def _speed_constant(mu: float) -> float:
    """Constant of the sup bound on ∫|v| p, valid for μ > 3 in two dimensions."""
    return 2 * math.pi * mu / (3 * (mu - 3))


def interpolation_report(
    p: np.ndarray,
    agrid: AnnulusGrid,
    vgrid: VelocityGrid,
    mu: float = Config.MOMENT_ORDER,
    ell: float = Config.INTERPOLATION_ORDER,
    slack: float = Config.INTERPOLATION_SLACK,
) -> Dict[str, Check]:
    """
    Interpolation inequalities between velocity moments and weighted sup norms,
    evaluated by grid quadrature on a nonnegative density.

    - ``moment``: m^ℓ ≤ (m⁰)^{1−ℓ/μ} (m^μ)^{ℓ/μ}
    - ``moment_lq``: ‖∫|v|^ℓ p‖_{L^r}, r = (N+μ)/(N+ℓ), against ‖p‖∞^a (m^μ)^b. The
      constant is not known, so only the exponents are checked
      (``moment_lq_exponents``: a + b = 1)
    - ``speed_sup``: ‖∫|v|p‖∞ ≤ C ‖p‖∞^{1−(N+1)/μ'} Y_{μ'}^{(N+1)/μ'}, μ' = max(μ, 4),
      C = 2πμ'/(3(μ'−3))
    - ``density_sup``: ‖ρ‖∞ ≤ πμ/(μ−2) ‖p‖∞^{1−N/μ} Y_μ^{N/μ}
    - ``weight_step``: ‖(1+|v|²)^{(μ−1)/2}p‖∞ ≤ ‖p‖∞^{1/μ} Y_μ^{1−1/μ}

    with Y_μ = ‖(1+|v|²)^{μ/2}p‖∞.

    :raises ValueError: Unless μ > ℓ > 0 and μ > N
    """
    n = Config.N
    if not mu > ell > 0 or not mu > n:
        raise ValueError(
            f'interpolation needs mu > ell > 0 and mu > {n}, got mu={mu}, ell={ell}'
        )
    p = np.maximum(p, 0.0)
    areas = agrid.areas
    p_sup = float(np.max(p)) if np.size(p) else 0.0
    y_mu = weighted_sup_norm(p, mu, vgrid)

    m0 = moment(p, 0, agrid, vgrid)
    m_ell = moment(p, ell, agrid, vgrid)
    m_mu = moment(p, mu, agrid, vgrid)

    r = (n + mu) / (n + ell)
    speed_moment = integrate_velocity(p, vgrid, vgrid.speed ** ell)
    lq = float(np.sum(areas * speed_moment ** r)) ** (1 / r)
    a = (mu - ell) / (n + mu)
    b_exp = (n + ell) / (n + mu)
    lq_rhs = p_sup ** a * m_mu ** b_exp

    mu_prime = max(mu, 4.0)
    y_prime = weighted_sup_norm(p, mu_prime, vgrid)
    speed_sup = float(np.max(integrate_velocity(p, vgrid, vgrid.speed))) if np.size(p) else 0.0
    rho_sup = float(np.max(marginal_density(p, vgrid))) if np.size(p) else 0.0
    y_lower = weighted_sup_norm(p, mu - 1, vgrid)

    return {
        'moment': Check(
            bound=m0 ** (1 - ell / mu) * m_mu ** (ell / mu), observed=m_ell, slack=slack
        ),
        'moment_lq': Check(bound=lq_rhs, observed=lq, applicable=False),
        'moment_lq_exponents': Check(bound=1.0, observed=a + b_exp, slack=1e-14),
        'speed_sup': Check(
            bound=_speed_constant(mu_prime) * p_sup ** (1 - (n + 1) / mu_prime)
            * y_prime ** ((n + 1) / mu_prime),
            observed=speed_sup,
            slack=slack,
        ),
        'density_sup': Check(
            bound=math.pi * mu / (mu - 2) * p_sup ** (1 - n / mu) * y_mu ** (n / mu),
            observed=rho_sup,
            slack=slack,
        ),
        'weight_step': Check(
            bound=p_sup ** (1 / mu) * y_mu ** (1 - 1 / mu), observed=y_lower, slack=slack
        ),
    }
