import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from vesselkin import NumericalException
from vesselkin.grids import AnnulusGrid
from vesselkin.utils import cached_property

__all__ = [
    'DiffusionScheme',
    'NeumannData',
    'NeumannOperator',
    'TafTrajectory',
    'neumann_step',
    'solve_taf',
    'solve_heat_homogeneous',
    'diffusion_cfl_dt',
    'l2_norm',
    'sup_norm',
    'mean_value',
    'dirichlet_energy',
    'gradient_l2_norm',
    'gradient_sup_norm',
]

log = logging.getLogger(__name__)

_RATE_SLACK = 1e-12


class DiffusionScheme(Enum):
    EXPLICIT = 'explicit'
    IMPLICIT_RADIAL = 'implicit-radial'


@dataclass
class NeumannData:
    """
    Flux datum ∂_r c = c_r0(θ, t) at r₀, zero flux at r₁. ``inner_flux`` is a constant,
    an (Nth,) array or a callable of time.

    :param model: Enforce c_r0 ≤ 0, i.e. TAF enters through the inner circle
    """

    inner_flux: object = 0.0
    model: bool = True

    def at(self, t: float, nth: int) -> np.ndarray:
        value = self.inner_flux(t) if callable(self.inner_flux) else self.inner_flux
        flux = np.asarray(value, dtype=float) * np.ones(nth)
        if self.model and np.any(flux > 0):
            raise ValueError('inner flux datum c_r0 must be nonpositive')
        return flux


class NeumannOperator:
    """
    Conservative finite-volume Laplacian d Δ on the annulus. Face transmissibilities are
    r_{i+½}Δθ/Δr radially and Δr/(r_iΔθ) angularly; the outer circle is closed.
    """

    def __init__(self, grid: AnnulusGrid, d: float) -> None:
        self.grid = grid
        self.d = d

    @cached_property
    def radial_transmissibility(self) -> np.ndarray:
        """Interior radial faces 1..Nr−1, shape (Nr−1,)."""
        g = self.grid
        return g.r_faces[1:-1] * g.dth / g.dr

    @cached_property
    def angular_transmissibility(self) -> np.ndarray:
        g = self.grid
        return g.dr / (g.r * g.dth)

    def face_fluxes(self, c: np.ndarray):
        """d · transmissibility · jump; radial (Nr−1, Nth) and angular (Nr, Nth)."""
        radial = self.d * self.radial_transmissibility[:, None] * (c[1:] - c[:-1])
        angular = self.d * self.angular_transmissibility[:, None] * (np.roll(c, -1, axis=1) - c)
        return radial, angular

    def apply(self, c: np.ndarray, radial: bool = True) -> np.ndarray:
        """Σ face fluxes per cell (before division by the area)."""
        fr, fa = self.face_fluxes(c)
        total = fa - np.roll(fa, 1, axis=1)
        if radial:
            total[:-1] += fr
            total[1:] -= fr
        return total

    def injection(self, inner_flux: np.ndarray) -> np.ndarray:
        """Flux −d c_r0 r₀Δθ entering the inner ring of cells."""
        g = self.grid
        return -self.d * inner_flux * g.r0 * g.dth

    @cached_property
    def explicit_rate(self) -> float:
        g = self.grid
        radial = np.zeros(g.nr)
        radial[:-1] += self.radial_transmissibility
        radial[1:] += self.radial_transmissibility
        total = radial[:, None] + 2 * self.angular_transmissibility[:, None]
        return float(np.max(self.d * total / g.areas))

    @cached_property
    def angular_rate(self) -> float:
        g = self.grid
        return float(np.max(2 * self.d * self.angular_transmissibility[:, None] / g.areas))

    def radial_banded(self, dt: float) -> np.ndarray:
        """(I − dt L_r) in the banded layout of ``solve_banded`` with one band each side."""
        g = self.grid
        area = g.r * g.dr * g.dth
        t = self.d * self.radial_transmissibility
        ab = np.zeros((3, g.nr))
        ab[1] = 1.0
        ab[1, :-1] += dt * t / area[:-1]
        ab[1, 1:] += dt * t / area[1:]
        ab[0, 1:] = -dt * t / area[:-1]
        ab[2, :-1] = -dt * t / area[1:]
        return ab


def diffusion_cfl_dt(
    grid: AnnulusGrid, d: float, scheme: DiffusionScheme = DiffusionScheme.EXPLICIT
) -> float:
    op = NeumannOperator(grid, d)
    rate = op.explicit_rate if scheme is DiffusionScheme.EXPLICIT else op.angular_rate
    return math.inf if rate == 0 else 1 / rate


def neumann_step(
    c: np.ndarray,
    j: Optional[np.ndarray],
    data: NeumannData,
    dt: float,
    grid: AnnulusGrid,
    d: float,
    eta: float = 0.0,
    scheme: DiffusionScheme = DiffusionScheme.EXPLICIT,
    t: float = 0.0,
    source: Optional[np.ndarray] = None,
    operator: Optional[NeumannOperator] = None,
) -> np.ndarray:
    """
    One step of ∂ₜc = dΔc − ηcj (+ source) with the Neumann data. Diffusion is explicit
    or backward Euler in r; the sink is applied afterwards as the exact factor e^{−ηj dt}.

    :raises NumericalException: If the explicit part exceeds its monotonicity limit
    """
    op = operator or NeumannOperator(grid, d)
    explicit = scheme is DiffusionScheme.EXPLICIT
    rate = op.explicit_rate if explicit else op.angular_rate
    if dt * rate > 1 + _RATE_SLACK:
        raise NumericalException(
            f'diffusion step violates the CFL limit (dt={dt:.3g}, limit={1 / rate:.3g})'
        )
    flux = op.apply(c, radial=explicit)
    flux[0] += op.injection(data.at(t, grid.nth))
    c_new = c + dt * flux / grid.areas
    if source is not None:
        c_new = c_new + dt * source
    if not explicit:
        c_new = solve_banded((1, 1), op.radial_banded(dt), c_new)
    if j is not None and eta:
        c_new = c_new * np.exp(-eta * np.asarray(j) * dt)
    if not np.isfinite(c_new).all():
        raise NumericalException('non-finite concentration after diffusion step')
    return c_new


@dataclass
class TafTrajectory:
    dt: float
    times: List[float] = field(default_factory=list)
    values: List[np.ndarray] = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


def solve_taf(
    c0: np.ndarray,
    flux_source: Callable[[int, float], Optional[np.ndarray]],
    data: NeumannData,
    T: float,
    dt: float,
    grid: AnnulusGrid,
    d: float,
    eta: float,
    scheme: DiffusionScheme = DiffusionScheme.EXPLICIT,
    snapshot_every: int = 1,
) -> TafTrajectory:
    """
    Time loop of ``neumann_step``. ``flux_source(n, t)`` returns the tip flux j used for
    step n, so the caller decides which kinetic state feeds the sink.
    """
    n_steps = max(1, math.ceil(T / dt - 1e-9))
    dt = T / n_steps
    op = NeumannOperator(grid, d)
    c = np.array(c0, dtype=float)
    trajectory = TafTrajectory(dt=dt, times=[0.0], values=[c])
    for n in range(n_steps):
        t = n * dt
        c = neumann_step(c, flux_source(n, t), data, dt, grid, d, eta, scheme, t, operator=op)
        if (n + 1) % snapshot_every == 0 or n + 1 == n_steps:
            trajectory.times.append((n + 1) * dt)
            trajectory.values.append(c)
    return trajectory


def solve_heat_homogeneous(
    u0: np.ndarray,
    T: float,
    grid: AnnulusGrid,
    d: float,
    dt: Optional[float] = None,
    times: Sequence[float] = (),
    source: Optional[np.ndarray] = None,
    safety: float = 0.9,
) -> TafTrajectory:
    """
    Homogeneous Neumann heat flow ∂ₜu = dΔu (+ source), explicit. Snapshots are taken at
    the step ends closest to ``times`` and at T.
    """
    dt = dt or safety * diffusion_cfl_dt(grid, d)
    n_steps = max(1, math.ceil(T / dt - 1e-9))
    dt = T / n_steps
    wanted = {min(n_steps, max(1, round(t / dt))) for t in times} | {n_steps}
    op = NeumannOperator(grid, d)
    data = NeumannData(0.0, model=False)
    u = np.array(u0, dtype=float)
    trajectory = TafTrajectory(dt=dt, times=[0.0], values=[u])
    for n in range(1, n_steps + 1):
        u = neumann_step(u, None, data, dt, grid, d, source=source, operator=op)
        if n in wanted:
            trajectory.times.append(n * dt)
            trajectory.values.append(u)
    return trajectory


def l2_norm(u: np.ndarray, grid: AnnulusGrid) -> float:
    return float(np.sqrt(np.sum(grid.areas * u ** 2)))


def sup_norm(u: np.ndarray) -> float:
    return float(np.max(np.abs(u)))


def mean_value(u: np.ndarray, grid: AnnulusGrid) -> float:
    return float(np.sum(grid.areas * u))


def dirichlet_energy(u: np.ndarray, grid: AnnulusGrid) -> float:
    """Σ over faces of transmissibility times the squared jump, the discrete ∫|∇u|²."""
    op = NeumannOperator(grid, 1.0)
    fr, fa = op.face_fluxes(u)
    radial = fr ** 2 / op.radial_transmissibility[:, None]
    angular = fa ** 2 / op.angular_transmissibility[:, None]
    return float(radial.sum() + angular.sum())


def gradient_l2_norm(u: np.ndarray, grid: AnnulusGrid) -> float:
    return math.sqrt(dirichlet_energy(u, grid))


def gradient_sup_norm(u: np.ndarray, grid: AnnulusGrid) -> float:
    """Largest face difference quotient."""
    radial = np.abs(np.diff(u, axis=0)) / grid.dr
    angular = np.abs(np.roll(u, -1, axis=1) - u) / (grid.r[:, None] * grid.dth)
    return float(max(radial.max(initial=0.0), angular.max(initial=0.0)))
