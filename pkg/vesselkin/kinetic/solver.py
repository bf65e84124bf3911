import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from vesselkin import AdmissibilityException, Config, NumericalException

from .boundary import (
    BoundaryConstants,
    NonlocalBoundary,
    TraceSummary,
    admissibility_constants,
)
from .steps import (
    KineticGeometry,
    Splitting,
    StepControls,
    StepRecord,
    absorption_step,
    transport_step,
    velocity_step,
)

__all__ = [
    'BoundaryMode',
    'LinearProblemSpec',
    'KineticCoefficients',
    'BoundaryIterate',
    'KineticRun',
    'KineticStep',
    'evaluate',
    'step_count',
    'fp_step',
    'solve_linear_fp',
]

log = logging.getLogger(__name__)


class BoundaryMode(Enum):
    FIXED = 'fixed-g'
    NONLOCAL = 'nonlocal'


def evaluate(value, t: float):
    """Data may be given as constants, arrays or callables of time."""
    return value(t) if callable(value) else value


def step_count(T: float, dt: float) -> Tuple[int, float]:
    """Number of uniform steps covering [0, T] with steps no longer than ``dt``."""
    if not dt > 0:
        raise ValueError(f'time step must be positive, got {dt}')
    n = max(1, math.ceil(T / dt - 1e-9))
    return n, T / n


@dataclass
class LinearProblemSpec:
    """
    ∂ₜp + v·∇ₓp + div_v((F − βv)p) − σΔ_v p + a p = h with inflow traces g on both
    circles. Fields may be constants, arrays or callables of time. ``j0`` is the outer
    sprouting flux datum used by the nonlocal boundary mode.
    """

    p0: np.ndarray
    inner_inflow: object = 0.0
    outer_inflow: object = 0.0
    absorption: object = None
    source: object = None
    force: object = None
    j0: object = 0.0

    def coefficients(self, t: float) -> 'KineticCoefficients':
        return KineticCoefficients(
            force=evaluate(self.force, t),
            absorption=evaluate(self.absorption, t),
            source=evaluate(self.source, t),
        )


@dataclass
class KineticCoefficients:
    force: Optional[np.ndarray] = None
    absorption: Optional[np.ndarray] = None
    source: Optional[np.ndarray] = None


@dataclass
class BoundaryIterate:
    """One pass of the boundary fixed point: trace norms and distance to the previous pass."""

    m: int
    inner_l1: float
    outer_weighted_sup: float
    distance: float
    clamp_events: int = 0
    outer_out_sup: float = 0.0
    j0_sup: float = 0.0

    def serialize(self) -> dict:
        return {
            'm': self.m,
            'inner_l1': self.inner_l1,
            'outer_weighted_sup': self.outer_weighted_sup,
            'distance': self.distance,
            'clamp_events': self.clamp_events,
            'outer_out_sup': self.outer_out_sup,
            'j0_sup': self.j0_sup,
        }


@dataclass
class KineticRun:
    dt: float
    times: List[float] = field(default_factory=list)
    snapshots: List[np.ndarray] = field(default_factory=list)
    records: List[StepRecord] = field(default_factory=list)
    summaries: List[TraceSummary] = field(default_factory=list)
    iterates: List[BoundaryIterate] = field(default_factory=list)
    converged: bool = True

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]


def _moment_gain(p_before, p_after, geometry: KineticGeometry) -> np.ndarray:
    delta = ((p_after - p_before) * geometry.cell_measure).sum(axis=(0, 1))
    return np.einsum('sij,ij->s', geometry.speed_powers, delta) * geometry.vgrid.weight


def fp_step(
    p: np.ndarray,
    coefficients: KineticCoefficients,
    inner_in: np.ndarray,
    outer_in: np.ndarray,
    controls: StepControls,
    geometry: KineticGeometry,
    dt: Optional[float] = None,
) -> Tuple[np.ndarray, StepRecord]:
    """
    One split step. Strang order is reaction, velocity, transport, velocity, reaction
    with half steps around the full transport step; Lie runs each once.

    :raises NumericalException: On a CFL violation or a non-finite result
    """
    dt = controls.dt if dt is None else dt
    params = geometry.params
    gain = np.zeros(3)

    def react(state, tau):
        nonlocal gain
        if coefficients.absorption is None and coefficients.source is None:
            return state
        new = absorption_step(state, coefficients.absorption, coefficients.source, tau)
        gain = gain + _moment_gain(state, new, geometry)
        return new

    if controls.splitting is Splitting.STRANG:
        half = dt / 2
        p = react(p, half)
        p = velocity_step(p, coefficients.force, half, geometry.vgrid, params)
        p, fluxes = transport_step(p, inner_in, outer_in, dt, geometry)
        p = velocity_step(p, coefficients.force, half, geometry.vgrid, params)
        p = react(p, half)
    else:
        p = react(p, dt)
        p = velocity_step(p, coefficients.force, dt, geometry.vgrid, params)
        p, fluxes = transport_step(p, inner_in, outer_in, dt, geometry)

    if not np.isfinite(p).all():
        raise NumericalException('non-finite tip density after kinetic step')
    record = StepRecord(
        dt=dt,
        inflow=fluxes['inflow'],
        outflow=fluxes['outflow'],
        reaction_gain=gain / dt,
        trace_square_in=fluxes['trace_square_in'],
        trace_square_out=fluxes['trace_square_out'],
    )
    return p, record


class _FixedInflow:
    def __init__(self, spec: LinearProblemSpec, shape) -> None:
        self.spec = spec
        self.shape = shape

    def __call__(self, n: int, t: float, p: np.ndarray):
        inner = np.broadcast_to(evaluate(self.spec.inner_inflow, t), self.shape)
        outer = np.broadcast_to(evaluate(self.spec.outer_inflow, t), self.shape)
        return inner, outer, None, None


class _LaggedInflow:
    """Inflow rebuilt from the trace integrals of the previous boundary iterate."""

    def __init__(self, boundary: NonlocalBoundary, previous: Sequence[TraceSummary]) -> None:
        self.boundary = boundary
        self.previous = previous

    def __call__(self, n: int, t: float, p: np.ndarray):
        return self.boundary.incoming_from_summary(self.previous[n])


@dataclass
class KineticStep:
    """
    What hooks see after each step of ``solve_linear_fp``. ``inner_marginal`` and
    ``outer_datum`` are the right-hand sides of the boundary identities for this step's
    traces, set when the inflow came from the nonlocal operators.
    """

    n: int
    t: float
    p_before: np.ndarray
    p_after: np.ndarray
    record: StepRecord
    coefficients: KineticCoefficients
    inner_in: np.ndarray
    outer_in: np.ndarray
    summary: Optional[TraceSummary] = None
    inner_marginal: Optional[np.ndarray] = None
    outer_datum: Optional[np.ndarray] = None
    iterate: Optional[int] = None


def _march(
    spec: LinearProblemSpec,
    T: float,
    geometry: KineticGeometry,
    controls: StepControls,
    inflow: Callable,
    boundary: Optional[NonlocalBoundary],
    snapshot_every: int,
    hooks: Sequence[Callable[[KineticStep], None]],
    iterate: Optional[int] = None,
) -> KineticRun:
    n_steps, dt = step_count(T, controls.dt)
    nth = geometry.agrid.nth
    run = KineticRun(dt=dt, times=[0.0], snapshots=[np.array(spec.p0, dtype=float)])
    p = run.snapshots[0]
    for n in range(n_steps):
        t = n * dt
        inner_in, outer_in, inner_clamp, outer_clamp = inflow(n, t, p)
        summary = inner_marginal = outer_datum = None
        if boundary is not None:
            j0 = evaluate(spec.j0, t) * np.ones(nth)
            summary = boundary.summarize(p, inner_in, outer_in, j0, inner_clamp, outer_clamp)
            run.summaries.append(summary)
        if isinstance(inflow, _LaggedInflow):
            prior = inflow.previous[n]
            inner_marginal = prior.inner_in_mass + summary.inner_out_mass
            outer_datum = prior.j0 - prior.outer_out_weighted + summary.outer_out_weighted
        coefficients = spec.coefficients(t + dt / 2)
        p_new, record = fp_step(p, coefficients, inner_in, outer_in, controls, geometry, dt)
        if inner_clamp is not None:
            record.inner_clamp = float(np.sum(inner_clamp))
            record.outer_clamp = float(np.sum(outer_clamp))
            record.clamp_events = int(
                np.count_nonzero(inner_clamp) + np.count_nonzero(outer_clamp)
            )
        run.records.append(record)
        for hook in hooks:
            hook(KineticStep(
                n=n, t=t + dt, p_before=p, p_after=p_new, record=record,
                coefficients=coefficients, inner_in=inner_in, outer_in=outer_in,
                summary=summary, inner_marginal=inner_marginal, outer_datum=outer_datum,
                iterate=iterate,
            ))
        p = p_new
        if (n + 1) % snapshot_every == 0 or n + 1 == n_steps:
            run.times.append((n + 1) * dt)
            run.snapshots.append(p)
    return run


def _iterate_norms(run: KineticRun, geometry: KineticGeometry, omega: float) -> dict:
    """
    Inner incoming L¹ norm over the boundary and time, and e^{−ωt}-weighted sups of the
    outer incoming and outgoing weighted traces and of j₀.
    """
    agrid = geometry.agrid
    arc = agrid.r0 * agrid.dth
    weights = [math.exp(-omega * n * run.dt) for n in range(len(run.summaries))]
    return {
        'inner_l1': sum(run.dt * arc * float(s.inner_in_mass.sum()) for s in run.summaries),
        'outer_weighted_sup': max(
            (w * s.outer_in_sup for w, s in zip(weights, run.summaries)), default=0.0
        ),
        'outer_out_sup': max(
            (w * s.outer_out_sup for w, s in zip(weights, run.summaries)), default=0.0
        ),
        'j0_sup': max(
            (w * float(np.max(s.j0)) for w, s in zip(weights, run.summaries)), default=0.0
        ),
    }


def _trace_distance(current: Sequence[TraceSummary], previous: Sequence[TraceSummary]) -> float:
    scale = max(
        max(float(s.outer_in_weighted.max()), float(s.inner_in_mass.max())) for s in current
    )
    if scale == 0:
        return 0.0
    diff = max(
        max(
            float(np.abs(a.outer_in_weighted - b.outer_in_weighted).max()),
            float(np.abs(a.inner_in_mass - b.inner_in_mass).max()),
        )
        for a, b in zip(current, previous)
    )
    return diff / scale


def solve_linear_fp(
    spec: LinearProblemSpec,
    T: float,
    geometry: KineticGeometry,
    controls: StepControls,
    bc_mode: BoundaryMode = BoundaryMode.FIXED,
    consts: Optional[BoundaryConstants] = None,
    snapshot_every: int = 1,
    hooks: Sequence[Callable] = (),
    tolerance: float = Config.BC_ITERATION_TOLERANCE,
    max_iterations: int = Config.BC_MAX_ITERATIONS,
) -> KineticRun:
    """
    Time loop of ``fp_step`` over [0, T].

    With fixed inflow the traces come from ``spec``. In nonlocal mode the boundary fixed
    point is constructed: the first pass uses the inflow of ``spec`` as seed, every later
    pass feeds the nonlocal operators with the traces of the pass before, until the
    incoming traces stop changing.

    :param consts: Boundary constants, required in nonlocal mode
    :param hooks:  Callables run with a ``KineticStep`` after each step
    :raises AdmissibilityException: If K1·K2 ≥ 1 in nonlocal mode
    """
    shape = (geometry.agrid.nth, geometry.vgrid.nv, geometry.vgrid.nv)
    seed = _FixedInflow(spec, shape)
    if bc_mode is BoundaryMode.FIXED:
        return _march(spec, T, geometry, controls, seed, None, snapshot_every, hooks)

    if consts is None:
        raise ValueError('nonlocal boundary mode needs boundary constants')
    k1, k2, _ = admissibility_constants(consts, geometry.params, geometry.vgrid)
    product = float(k1.max() * k2.max())
    if not product < 1:
        raise AdmissibilityException(product)

    boundary = NonlocalBoundary(consts, geometry.params, geometry.vgrid)
    a_minus = _absorption_negative_part(spec, T)
    omega = Config.N * geometry.params.beta + a_minus

    run = _march(spec, T, geometry, controls, seed, boundary, snapshot_every, hooks, 2)
    run.iterates.append(
        BoundaryIterate(m=2, distance=math.inf, **_iterate_norms(run, geometry, omega))
    )
    run.converged = False
    for m in range(3, max_iterations + 1):
        lagged = _LaggedInflow(boundary, run.summaries)
        current = _march(
            spec, T, geometry, controls, lagged, boundary, snapshot_every, hooks, m
        )
        distance = _trace_distance(current.summaries, run.summaries)
        norms = _iterate_norms(current, geometry, omega)
        clamps = sum(r.clamp_events for r in current.records)
        current.iterates = run.iterates + [
            BoundaryIterate(m=m, distance=distance, clamp_events=clamps, **norms)
        ]
        log.info('boundary iterate %d: distance %.3e, inner L1 %.12g',
                 m, distance, norms['inner_l1'])
        run = current
        if distance <= tolerance:
            run.converged = True
            break
    if not run.converged:
        log.warning('boundary iteration stopped at the cap of %d passes', max_iterations)
    return run


def _absorption_negative_part(spec: LinearProblemSpec, T: float) -> float:
    """‖a⁻‖∞ over the start, middle and end of the interval."""
    values = [evaluate(spec.absorption, t) for t in (0.0, T / 2, T)]
    return max(
        (float(np.max(np.maximum(-np.asarray(a), 0.0))) for a in values if a is not None),
        default=0.0,
    )
