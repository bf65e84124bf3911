import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from vesselkin import Config
from vesselkin.diffusion import (
    RadialSpectralOracle,
    TafTrajectory,
    gradient_l2_norm,
    gradient_sup_norm,
    l2_norm,
    mean_value,
    radial_oracle_solve,
    solve_heat_homogeneous,
    sup_norm,
)
from vesselkin.grids import AnnulusGrid

from .bounds import Check

__all__ = [
    'HeatDecayReport',
    'homogeneous_decay_checks',
    'inhomogeneous_decay_checks',
    'smoothing_exponent',
    'default_fit_window',
    'oracle_error',
    'heat_decay_report',
]

log = logging.getLogger(__name__)

SMOOTHING_EXPONENT = -1.5
EXPONENT_TOLERANCE = 0.15
ORACLE_TOLERANCE = 1e-3
DEFAULT_TIMES = (0.01, 0.1, 1.0)


@dataclass
class HeatDecayReport:
    homogeneous: Dict[str, Check] = field(default_factory=dict)
    inhomogeneous: Dict[str, Check] = field(default_factory=dict)
    smoothing_slope: Optional[float] = None
    oracle_error: Optional[float] = None

    @property
    def slope_passed(self) -> bool:
        if self.smoothing_slope is None:
            return True
        return abs(self.smoothing_slope - SMOOTHING_EXPONENT) <= EXPONENT_TOLERANCE

    @property
    def oracle_passed(self) -> bool:
        return self.oracle_error is None or self.oracle_error <= ORACLE_TOLERANCE

    @property
    def passed(self) -> bool:
        checks = list(self.homogeneous.values()) + list(self.inhomogeneous.values())
        return all(c.passed for c in checks) and self.slope_passed and self.oracle_passed

    def serialize(self) -> dict:
        return {
            'homogeneous': self.homogeneous,
            'inhomogeneous': self.inhomogeneous,
            'smoothing_slope': self.smoothing_slope,
            'oracle_error': self.oracle_error,
            'pass': self.passed,
        }


def homogeneous_decay_checks(
    trajectory: TafTrajectory,
    grid: AnnulusGrid,
    d: float,
    slack: float = Config.HEAT_SLACK,
) -> Dict[str, Check]:
    """
    Decay of the homogeneous Neumann flow at every stored time t > 0: the maximum
    principle, monotone L² norm, the smoothing bound ‖∇u(t)‖₂ ≤ (2dt)^{−1/2}‖u₀‖₂ (with the
    t^{−1/2} form as well when d ≥ ½) and conservation of ∫u.
    """
    u0 = trajectory.values[0]
    sup0, l2_0, mean0 = sup_norm(u0), l2_norm(u0, grid), mean_value(u0, grid)
    scale = float(np.sum(grid.areas * np.abs(u0)))
    checks = {}
    previous_l2 = l2_0
    for t, u in zip(trajectory.times[1:], trajectory.values[1:]):
        key = f'{t:.4g}'
        l2 = l2_norm(u, grid)
        gradient = gradient_l2_norm(u, grid)
        checks[f'sup@{key}'] = Check(bound=sup0, observed=sup_norm(u), slack=1e-14)
        checks[f'l2@{key}'] = Check(bound=previous_l2, observed=l2, slack=1e-14)
        checks[f'gradient@{key}'] = Check(
            bound=slack * l2_0 / math.sqrt(2 * d * t), observed=gradient
        )
        if d >= 0.5:
            checks[f'gradient_t@{key}'] = Check(
                bound=slack * l2_0 / math.sqrt(t), observed=gradient
            )
        checks[f'mean@{key}'] = Check(
            bound=Config.IDENTITY_TOLERANCE * scale, observed=abs(mean_value(u, grid) - mean0)
        )
        previous_l2 = l2
    return checks


def inhomogeneous_decay_checks(
    trajectory: TafTrajectory,
    source: np.ndarray,
    grid: AnnulusGrid,
    d: float,
    slack: float = Config.HEAT_SLACK,
) -> Dict[str, Check]:
    """
    Growth from zero data under a bounded source h: ‖u(t)‖∞ ≤ t‖h‖∞ and
    ‖∇u(t)‖∞ ≤ 2(t/d)^{1/2}‖h‖∞, both with ``slack``.
    """
    h_sup = sup_norm(source)
    checks = {}
    for t, u in zip(trajectory.times[1:], trajectory.values[1:]):
        key = f'{t:.4g}'
        checks[f'sup@{key}'] = Check(bound=slack * t * h_sup, observed=sup_norm(u))
        checks[f'gradient@{key}'] = Check(
            bound=slack * 2 * math.sqrt(t / d) * h_sup, observed=gradient_sup_norm(u, grid)
        )
    return checks


def smoothing_exponent(
    trajectory: TafTrajectory, grid: AnnulusGrid, window: Tuple[float, float]
) -> float:
    """
    Least squares slope of log ‖∇u(t)‖∞ against log t over the stored times inside
    ``window``. Point-like data in two dimensions give −3/2.

    :raises ValueError: If fewer than two stored times fall inside the window
    """
    lo, hi = window
    points = [
        (math.log(t), math.log(gradient_sup_norm(u, grid)))
        for t, u in zip(trajectory.times, trajectory.values)
        if lo <= t <= hi
    ]
    if len(points) < 2:
        raise ValueError(f'need two stored times inside the fit window {window}')
    x, y = np.array(points).T
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def point_source(grid: AnnulusGrid) -> np.ndarray:
    """Unit mass in one cell half way between the circles."""
    u = np.zeros(grid.shape)
    i = grid.nr // 2
    u[i, 0] = 1 / grid.areas[i, 0]
    return u


def oracle_error(
    profile: Callable[[np.ndarray], np.ndarray],
    grid: AnnulusGrid,
    d: float,
    t: float,
    dt: Optional[float] = None,
    oracle: Optional[RadialSpectralOracle] = None,
) -> float:
    """
    Relative L² distance at time t between the finite-volume heat flow of the radial
    profile and the eigen-expansion solution sampled at the cell radii.
    """
    oracle = oracle or RadialSpectralOracle(grid.r0, grid.r1, d)
    u0 = np.repeat(profile(grid.r)[:, None], grid.nth, axis=1)
    fv = solve_heat_homogeneous(u0, t, grid, d, dt=dt).final
    exact = oracle.sample(radial_oracle_solve(profile, [t], oracle)[0], grid.r)
    reference = np.repeat(exact[:, None], grid.nth, axis=1)
    return l2_norm(fv - reference, grid) / l2_norm(reference, grid)


def default_profile(grid: AnnulusGrid) -> Callable[[np.ndarray], np.ndarray]:
    width = grid.r1 - grid.r0
    return lambda r: 1 + np.cos(math.pi * (r - grid.r0) / width)


def default_fit_window(grid: AnnulusGrid, d: float) -> Tuple[float, float]:
    """
    Fit window [5Δr²/d, 0.05/d] of the smoothing exponent: late enough for point-like
    data to have spread over several radial cells, early enough to stay clear of the
    circles.

    :raises ValueError: If the radial cells are too coarse for the window to be open
    """
    lo, hi = 5 * grid.dr ** 2 / d, 0.05 / d
    if lo >= hi:
        raise ValueError(
            f'radial spacing {grid.dr:.4g} is too coarse for the smoothing fit window '
            f'[{lo:.4g}, {hi:.4g}]'
        )
    return lo, hi


def heat_decay_report(
    grid: AnnulusGrid,
    d: float,
    u0: np.ndarray,
    source: Optional[np.ndarray] = None,
    times: Sequence[float] = DEFAULT_TIMES,
    slack: float = Config.HEAT_SLACK,
    fit_window: Optional[Tuple[float, float]] = None,
    oracle_time: Optional[float] = 0.1,
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> HeatDecayReport:
    """
    Runs the heat laboratory on ``grid``: homogeneous decay from ``u0``, growth from
    zero data under ``source``, the smoothing exponent of point-like data and the
    comparison with the radial eigen-expansion.

    :param fit_window: Time window of the exponent fit, by default from 5Δr²/d to 0.05/d
    :param oracle_time: Time of the oracle comparison, None to skip it

    :raises ValueError: If the fit window is empty
    """
    report = HeatDecayReport()
    horizon = max(times)
    run = solve_heat_homogeneous(u0, horizon, grid, d, times=times)
    report.homogeneous = homogeneous_decay_checks(run, grid, d, slack)

    if source is not None:
        source = np.asarray(source, dtype=float) * np.ones(grid.shape)
        grown = solve_heat_homogeneous(
            np.zeros(grid.shape), horizon, grid, d, times=times, source=source
        )
        report.inhomogeneous = inhomogeneous_decay_checks(grown, source, grid, d, slack)

    if fit_window is None:
        fit_window = default_fit_window(grid, d)
    lo, hi = fit_window
    if lo >= hi:
        raise ValueError(f'empty smoothing fit window {fit_window}')
    spread = solve_heat_homogeneous(
        point_source(grid), hi, grid, d, times=np.geomspace(lo, hi, 12)
    )
    report.smoothing_slope = smoothing_exponent(spread, grid, fit_window)

    if oracle_time is not None:
        report.oracle_error = oracle_error(
            profile or default_profile(grid), grid, d, oracle_time
        )
    log.info('heat laboratory: slope %.3f, oracle error %s, pass %s',
             report.smoothing_slope, report.oracle_error, report.passed)
    return report
