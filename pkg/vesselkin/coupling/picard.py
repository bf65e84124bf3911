import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from vesselkin import Config
from vesselkin.diffusion import neumann_step
from vesselkin.fields import marginal_density, tip_flux
from vesselkin.kinetic import (
    BoundaryMode,
    StepRecord,
    TraceSummary,
    compute_j0,
    fp_step,
)

from .problem import CoupledProblem, StepEvent

__all__ = ['IterateHistory', 'PicardState', 'picard_solve', 'relative_l1_distance']

log = logging.getLogger(__name__)


@dataclass
class IterateHistory:
    """
    One Picard iterate. c and ρ are kept at every step index 0..N since the next
    iterate freezes its coefficients on them; p only at the snapshot cadence.
    """

    m: int
    c: List[np.ndarray] = field(default_factory=list)
    rho: List[np.ndarray] = field(default_factory=list)
    summaries: List[TraceSummary] = field(default_factory=list)
    records: List[StepRecord] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    p: List[np.ndarray] = field(default_factory=list)
    c_snapshots: List[np.ndarray] = field(default_factory=list)
    b: List[np.ndarray] = field(default_factory=list)

    @property
    def final_p(self) -> np.ndarray:
        return self.p[-1]

    @property
    def final_c(self) -> np.ndarray:
        return self.c[-1]


@dataclass
class PicardState:
    m: int
    current: IterateHistory
    p_distances: List[float] = field(default_factory=list)
    c_distances: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def monotone_from_third(self) -> bool:
        """Successive p distances decrease from iterate 3 on (first entry belongs to m = 2)."""
        tail = self.p_distances[1:]
        return all(b <= a for a, b in zip(tail, tail[1:]))

    def serialize(self) -> dict:
        return {
            'iterations': self.m,
            'converged': self.converged,
            'p_distances': self.p_distances,
            'c_distances': self.c_distances,
            'monotone': self.monotone_from_third,
        }


def relative_l1_distance(a: np.ndarray, b: np.ndarray, measure: np.ndarray) -> float:
    """Σ μ|a − b| / Σ μ|a|, zero when both vanish."""
    diff = float(np.sum(measure * np.abs(a - b)))
    if diff == 0:
        return 0.0
    norm = float(np.sum(measure * np.abs(a)))
    return diff / norm if norm else math.inf


def _relative_l2_distance(a, b, areas) -> float:
    diff = math.sqrt(float(np.sum(areas * (a - b) ** 2)))
    if diff == 0:
        return 0.0
    norm = math.sqrt(float(np.sum(areas * a ** 2)))
    return diff / norm if norm else math.inf


def _first_iterate(problem: CoupledProblem) -> IterateHistory:
    """p₁ = 0 and c₁ the TAF evolution without consumption."""
    n_steps, dt = problem.steps
    agrid, params = problem.agrid, problem.params
    zero_p = np.zeros(problem.p0.shape)
    zero_rho = np.zeros(agrid.shape)
    history = IterateHistory(m=1)
    c = np.array(problem.c0, dtype=float)
    history.c.append(c)
    history.rho.append(zero_rho)
    history.times.append(0.0)
    history.p.append(zero_p)
    history.c_snapshots.append(c)
    history.b.append(zero_rho)
    for n in range(n_steps):
        c = neumann_step(
            c, None, problem.taf_data, dt, agrid, params.d, params.eta, problem.scheme,
            n * dt, operator=problem.operator,
        )
        history.c.append(c)
        history.rho.append(zero_rho)
        if problem.is_snapshot(n):
            history.times.append((n + 1) * dt)
            history.p.append(zero_p)
            history.c_snapshots.append(c)
            history.b.append(zero_rho)
    return history


def _next_iterate(
    problem: CoupledProblem,
    previous: IterateHistory,
    m: int,
    observers: Sequence[Callable[[StepEvent], None]],
) -> IterateHistory:
    n_steps, dt = problem.steps
    agrid, vgrid, params = problem.agrid, problem.vgrid, problem.params
    nonlocal_mode = problem.bc_mode is BoundaryMode.NONLOCAL
    lagged = nonlocal_mode and m > 2
    boundary, consts = problem.boundary, problem.consts

    p = np.array(problem.p0, dtype=float)
    c = np.array(problem.c0, dtype=float)
    b = np.zeros(agrid.shape)
    history = IterateHistory(m=m)
    history.c.append(c)
    history.rho.append(marginal_density(p, vgrid))
    history.times.append(0.0)
    history.p.append(p)
    history.c_snapshots.append(c)
    history.b.append(b)

    for n in range(n_steps):
        t = n * dt
        c_new = neumann_step(
            c, tip_flux(p, vgrid, params), problem.taf_data, dt, agrid, params.d,
            params.eta, problem.scheme, t, operator=problem.operator,
        )

        summary = inner_marginal = outer_datum = None
        inner_clamp = outer_clamp = None
        if lagged:
            inner_in, outer_in, inner_clamp, outer_clamp = boundary.incoming_from_summary(
                previous.summaries[n]
            )
        else:
            inner_in, outer_in = problem.inner_seed, problem.outer_seed
        if nonlocal_mode:
            j0 = compute_j0(c[-1], p[-1], params, vgrid, consts)
            summary = boundary.summarize(p, inner_in, outer_in, j0, inner_clamp, outer_clamp)
            history.summaries.append(summary)
        if lagged:
            # The operators saw the previous iterate's outgoing traces.
            prior = previous.summaries[n]
            inner_marginal = prior.inner_in_mass + summary.inner_out_mass
            outer_datum = prior.j0 - prior.outer_out_weighted + summary.outer_out_weighted

        coefficients = problem.coefficients(previous.c[n + 1], b, t + dt)
        p_new, record = fp_step(
            p, coefficients, inner_in, outer_in, problem.controls, problem.geometry, dt
        )
        if summary is not None:
            record.inner_clamp = float(summary.inner_clamp.sum())
            record.outer_clamp = float(summary.outer_clamp.sum())
            record.clamp_events = int(
                np.count_nonzero(summary.inner_clamp) + np.count_nonzero(summary.outer_clamp)
            )
        history.records.append(record)
        b = b + dt * (previous.rho[n] + previous.rho[n + 1]) / 2

        for observer in observers:
            observer(StepEvent(
                n=n, t=t + dt, p_before=p, p_after=p_new, c_before=c, c_after=c_new,
                b=b, record=record, coefficients=coefficients,
                inner_in=inner_in, outer_in=outer_in, summary=summary,
                inner_marginal=inner_marginal, outer_datum=outer_datum, iterate=m,
            ))

        p, c = p_new, c_new
        history.c.append(c)
        history.rho.append(marginal_density(p, vgrid))
        if problem.is_snapshot(n):
            history.times.append((n + 1) * dt)
            history.p.append(p)
            history.c_snapshots.append(c)
            history.b.append(b)
    return history


def picard_solve(
    problem: CoupledProblem,
    tol: float = Config.PICARD_TOLERANCE,
    m_max: int = Config.PICARD_MAX_ITERATIONS,
    observers: Sequence[Callable[[StepEvent], None]] = (),
    on_iterate: Optional[Callable[[PicardState], None]] = None,
) -> PicardState:
    """
    Global-in-time Picard iteration. Iterate m solves the kinetic problem with F and α
    frozen on c_{m−1}, b built from ρ_{m−1} and, in nonlocal mode, boundary operators
    fed with the traces of iterate m−1 (iterate 2 uses the seed inflow); c_m then follows
    from the tip flux of p_m. Stops once the relative L¹ distance of successive iterates
    is within ``tol`` at every snapshot, or at ``m_max``.
    """
    measure = problem.geometry.cell_measure * problem.vgrid.weight
    areas = problem.agrid.areas
    history = _first_iterate(problem)
    state = PicardState(m=1, current=history)

    for m in range(2, m_max + 1):
        current = _next_iterate(problem, history, m, observers)
        p_distance = max(
            relative_l1_distance(a, b, measure) for a, b in zip(current.p, history.p)
        )
        c_distance = _relative_l2_distance(current.final_c, history.final_c, areas)
        state.m = m
        state.current = current
        state.p_distances.append(p_distance)
        state.c_distances.append(c_distance)
        log.info('Picard iterate %d: p distance %.3e, c distance %.3e', m, p_distance, c_distance)
        if on_iterate is not None:
            on_iterate(state)
        history = current
        if p_distance <= tol:
            state.converged = True
            break
    if not state.converged:
        log.warning('Picard iteration did not reach tol=%.1e within %d iterates', tol, m_max)
    return state
