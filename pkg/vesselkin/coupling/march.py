import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from vesselkin.diffusion import neumann_step
from vesselkin.fields import (
    AnastomosisAccumulator,
    accumulate_anastomosis,
    marginal_density,
    tip_flux,
)
from vesselkin.kinetic import (
    BoundaryMode,
    StepRecord,
    TraceSummary,
    compute_j0,
    fp_step,
)

from .problem import CoupledProblem, StepEvent

__all__ = ['MarchState', 'CoupledTrajectory', 'initial_state', 'direct_coupled_march']

log = logging.getLogger(__name__)


@dataclass
class MarchState:
    """
    Complete state of the direct march after ``n`` steps. ``inner_in``/``outer_in`` are
    the incoming traces applied in the step that produced it (the seeds at n = 0).
    """

    n: int
    t: float
    p: np.ndarray
    c: np.ndarray
    b: np.ndarray
    inner_in: np.ndarray
    outer_in: np.ndarray


@dataclass
class CoupledTrajectory:
    dt: float
    times: List[float] = field(default_factory=list)
    p: List[np.ndarray] = field(default_factory=list)
    c: List[np.ndarray] = field(default_factory=list)
    b: List[np.ndarray] = field(default_factory=list)
    records: List[StepRecord] = field(default_factory=list)
    summaries: List[TraceSummary] = field(default_factory=list)
    final_state: Optional[MarchState] = None

    def store(self, t: float, p: np.ndarray, c: np.ndarray, b: np.ndarray) -> None:
        self.times.append(t)
        self.p.append(p)
        self.c.append(c)
        self.b.append(b)


def initial_state(problem: CoupledProblem) -> MarchState:
    shape = problem.agrid.shape
    return MarchState(
        n=0,
        t=0.0,
        p=np.array(problem.p0, dtype=float),
        c=np.array(problem.c0, dtype=float),
        b=np.zeros(shape),
        inner_in=np.array(problem.inner_seed, dtype=float),
        outer_in=np.array(problem.outer_seed, dtype=float),
    )


def direct_coupled_march(
    problem: CoupledProblem,
    observers: Sequence[Callable[[StepEvent], None]] = (),
    start: Optional[MarchState] = None,
    checkpoint: Optional[Callable[[MarchState], None]] = None,
    checkpoint_every: int = 0,
) -> CoupledTrajectory:
    """
    Production time march. Each step first advances c with the tip flux of the current
    p, then advances p with F and α of the new c, the current b, and the inflow built
    from the current traces.

    :param start:      Resume from this state instead of the initial data
    :param checkpoint: Called with the state every ``checkpoint_every`` steps
    """
    n_steps, dt = problem.steps
    agrid, vgrid, params = problem.agrid, problem.vgrid, problem.params
    nonlocal_mode = problem.bc_mode is BoundaryMode.NONLOCAL
    boundary, consts = problem.boundary, problem.consts

    state = start or initial_state(problem)
    trajectory = CoupledTrajectory(dt=dt)
    trajectory.store(state.t, state.p, state.c, state.b)
    acc = AnastomosisAccumulator(b=state.b, t=state.t)

    for n in range(state.n, n_steps):
        t = n * dt
        p, c = state.p, state.c
        rho = marginal_density(p, vgrid)
        c_new = neumann_step(
            c, tip_flux(p, vgrid, params), problem.taf_data, dt, agrid, params.d,
            params.eta, problem.scheme, t, operator=problem.operator,
        )

        summary = inner_marginal = outer_datum = None
        if nonlocal_mode:
            j0 = compute_j0(c[-1], p[-1], params, vgrid, consts)
            lagged = consts.inner.integrate_incoming(state.inner_in)
            inner_in, outer_in, inner_clamp, outer_clamp = boundary.incoming_from_state(
                p, lagged, j0
            )
            summary = boundary.summarize(p, inner_in, outer_in, j0, inner_clamp, outer_clamp)
            inner_marginal = lagged + summary.inner_out_mass
            outer_datum = summary.j0
            trajectory.summaries.append(summary)
        else:
            inner_in, outer_in = state.inner_in, state.outer_in

        coefficients = problem.coefficients(c_new, acc.b, t + dt)
        p_new, record = fp_step(
            p, coefficients, inner_in, outer_in, problem.controls, problem.geometry, dt
        )
        if summary is not None:
            record.inner_clamp = float(summary.inner_clamp.sum())
            record.outer_clamp = float(summary.outer_clamp.sum())
            record.clamp_events = int(
                np.count_nonzero(summary.inner_clamp) + np.count_nonzero(summary.outer_clamp)
            )
        trajectory.records.append(record)
        acc = accumulate_anastomosis(acc, rho, marginal_density(p_new, vgrid), dt)

        for observer in observers:
            observer(StepEvent(
                n=n, t=t + dt, p_before=p, p_after=p_new, c_before=c, c_after=c_new,
                b=acc.b, record=record, coefficients=coefficients,
                inner_in=inner_in, outer_in=outer_in, summary=summary,
                inner_marginal=inner_marginal, outer_datum=outer_datum,
            ))

        state = MarchState(
            n=n + 1, t=(n + 1) * dt, p=p_new, c=c_new, b=acc.b,
            inner_in=inner_in, outer_in=outer_in,
        )
        if problem.is_snapshot(n):
            trajectory.store(state.t, p_new, c_new, acc.b)
        if checkpoint is not None and checkpoint_every and (n + 1) % checkpoint_every == 0:
            checkpoint(state)

    trajectory.final_state = state
    log.info('direct march finished: %d steps of %.4g', n_steps - (start.n if start else 0), dt)
    return trajectory
