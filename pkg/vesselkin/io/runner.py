import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from vesselkin import (
    Config,
    ConfigException,
    GateException,
    NumericalException,
    ReportEncoder,
    SimulationException,
    __version__,
)
from vesselkin.coupling import (
    AdmissibilityReport,
    CoupledProblem,
    check_admissibility,
    direct_coupled_march,
    picard_solve,
)
from vesselkin.diagnostics import (
    DiagnosticsCollector,
    DiagnosticsReport,
    default_fit_window,
    heat_decay_report,
    recursion_check,
)
from vesselkin.diffusion import NeumannData, diffusion_cfl_dt, sup_norm
from vesselkin.fields import lq_norm, taf_force, total_mass
from vesselkin.grids import AnnulusGrid, VelocityGrid
from vesselkin.kinetic import (
    BoundaryMode,
    KineticGeometry,
    LinearProblemSpec,
    StepControls,
    cfl_dt,
    compute_boundary_constants,
    solve_linear_fp,
    step_count,
)

from .config import DtPolicy, RunConfig, RunMode, phase_profile, space_profile
from .snapshot import Snapshot, checkpoint_read, checkpoint_write, read_snapshot, write_snapshot

__all__ = ['RunResult', 'build_grids', 'choose_dt', 'check', 'run', 'record_failure']

log = logging.getLogger(__name__)

DIFFUSION_SAFETY = 0.9


@dataclass
class RunResult:
    """What a mode hands back to ``run``: stored states and the diagnostics report."""

    dt: Optional[float] = None
    steps: int = 0
    snapshots: List[Snapshot] = field(default_factory=list)
    report: DiagnosticsReport = field(default_factory=DiagnosticsReport)
    extra: Dict[str, Any] = field(default_factory=dict)


def build_grids(config: RunConfig) -> Tuple[AnnulusGrid, VelocityGrid]:
    """
    :raises ConfigException: If the grid cannot be built
    """
    try:
        return config.grid.annulus(), config.grid.velocity()
    except ValueError as e:
        raise ConfigException(f'Invalid data: {e} (key "grid")', key='grid')


def choose_dt(
    config: RunConfig,
    agrid: AnnulusGrid,
    vgrid: VelocityGrid,
    force: Optional[np.ndarray] = None,
    coupled: bool = False,
) -> float:
    """
    The configured step, or the kinetic CFL step scaled by the configured safety. Coupled
    modes also respect the explicit diffusion limit.
    """
    if config.dt_policy is DtPolicy.FIXED:
        return config.dt_value
    dt = cfl_dt(agrid, vgrid, config.params, force, config.cfl_safety)
    if coupled:
        dt = min(
            dt, DIFFUSION_SAFETY * diffusion_cfl_dt(agrid, config.params.d, config.scheme)
        )
    log.info('time step chosen by the CFL policy: %.6g', dt)
    return dt


def _initial_density(config: RunConfig, agrid: AnnulusGrid, vgrid: VelocityGrid) -> np.ndarray:
    spec = config.initial_p
    if spec['profile'] != 'snapshot':
        return phase_profile(spec, agrid, vgrid, config.params, config.seed)
    path = os.path.join(config.base_dir, spec['path'])
    snapshot = read_snapshot(path)
    expected = agrid.shape + vgrid.shape
    if snapshot.p.shape != expected:
        raise ConfigException(
            f'Invalid data: snapshot {spec["path"]} has shape {snapshot.p.shape}, the grid '
            f'needs {expected} (key "initial.p.path")',
            key='initial.p.path',
        )
    return snapshot.p


def _seeds(config: RunConfig, agrid: AnnulusGrid, vgrid: VelocityGrid):
    params, seed = config.params, config.seed
    inner = phase_profile(config.g_inner, agrid, vgrid, params, seed, ring=0)
    outer = phase_profile(config.g_outer, agrid, vgrid, params, seed, ring=-1)
    return inner, outer


def _admissibility(
    config: RunConfig, agrid: AnnulusGrid, vgrid: VelocityGrid, consts=None
) -> Optional[AdmissibilityReport]:
    if config.bc_mode is not BoundaryMode.NONLOCAL:
        return None
    return check_admissibility(config.params, agrid, vgrid, consts)


def _coupled_problem(config: RunConfig, agrid: AnnulusGrid, vgrid: VelocityGrid):
    params = config.params
    c0 = space_profile(config.initial_c, agrid, config.seed)
    taf_data = NeumannData(config.c_r0)
    force = taf_force(c0, params, agrid, taf_data.at(0.0, agrid.nth))
    dt = choose_dt(config, agrid, vgrid, force, coupled=True)
    inner_seed, outer_seed = _seeds(config, agrid, vgrid)
    return CoupledProblem(
        agrid=agrid,
        vgrid=vgrid,
        params=params,
        p0=_initial_density(config, agrid, vgrid),
        c0=c0,
        taf_data=taf_data,
        inner_seed=inner_seed,
        outer_seed=outer_seed,
        controls=StepControls(dt=dt, cfl_safety=config.cfl_safety, splitting=config.splitting),
        T=config.T,
        bc_mode=config.bc_mode,
        scheme=config.scheme,
        snapshot_every=config.snapshot_every,
    )


def _collector(config: RunConfig, geometry, p0, n_steps, **kwargs):
    if not config.diagnostics.enabled:
        return None
    return DiagnosticsCollector(
        geometry, p0, n_steps, config.snapshot_every,
        mu=config.diagnostics.mu, ell=config.diagnostics.ell, **kwargs,
    )


def _run_heat_lab(config: RunConfig, agrid, vgrid, out_dir, resume) -> RunResult:
    heat = config.heat
    d = heat['d'] or config.params.d
    u0 = space_profile(config.initial_c, agrid, config.seed)
    try:
        fit_window = default_fit_window(agrid, d)
    except ValueError as e:
        raise ConfigException(f'Invalid data: {e} (key "grid.nr")', key='grid.nr')
    report = heat_decay_report(
        agrid, d, u0,
        fit_window=fit_window,
        source=heat['source'] if heat['source'] else None,
        times=heat['times'],
        slack=config.tolerances.heat_slack,
        oracle_time=heat['oracle_time'],
    )
    return RunResult(report=DiagnosticsReport(heat=report), extra={'d': d})


def _run_linear(config: RunConfig, agrid, vgrid, out_dir, resume) -> RunResult:
    params, linear = config.params, config.linear
    force = np.array(linear['force'], dtype=float)
    dt = choose_dt(config, agrid, vgrid, force)
    geometry = KineticGeometry(agrid, vgrid, params)
    inner_seed, outer_seed = _seeds(config, agrid, vgrid)
    spec = LinearProblemSpec(
        p0=_initial_density(config, agrid, vgrid),
        inner_inflow=inner_seed,
        outer_inflow=outer_seed,
        absorption=linear['absorption'] or None,
        source=linear['source'] or None,
        force=force if force.any() else None,
        j0=config.j0,
    )
    consts = None
    if config.bc_mode is BoundaryMode.NONLOCAL:
        consts = compute_boundary_constants(agrid, vgrid, params)
    admissibility = _admissibility(config, agrid, vgrid, consts)
    n_steps, dt = step_count(config.T, dt)
    collector = _collector(config, geometry, spec.p0, n_steps, consts=consts)
    controls = StepControls(dt=dt, cfl_safety=config.cfl_safety, splitting=config.splitting)
    run = solve_linear_fp(
        spec, config.T, geometry, controls, config.bc_mode, consts,
        snapshot_every=config.snapshot_every,
        hooks=[collector] if collector else [],
        tolerance=config.tolerances.bc,
        max_iterations=config.tolerances.bc_max_iterations,
    )
    recursion = []
    if admissibility is not None:
        recursion = recursion_check(
            run.iterates, admissibility.k1_inflow, admissibility.K2,
            config.tolerances.recursion_slack,
        )
    zeros = np.zeros(agrid.shape)
    snapshots = [
        Snapshot(
            step=0, t=t, p=p, c=zeros, b=zeros, inner_in=inner_seed, outer_in=outer_seed,
            r0=agrid.r0, r1=agrid.r1, vmax=vgrid.vmax,
        )
        for t, p in zip(run.times, run.snapshots)
    ]
    report = collector.report() if collector else DiagnosticsReport()
    report.admissibility = admissibility
    report.iterates = run.iterates
    report.recursion = recursion
    return RunResult(
        dt=dt, steps=n_steps, snapshots=snapshots, report=report,
        extra={'boundary_converged': run.converged},
    )


def _run_direct(config: RunConfig, agrid, vgrid, out_dir, resume) -> RunResult:
    problem = _coupled_problem(config, agrid, vgrid)
    admissibility = _admissibility(config, agrid, vgrid, problem.consts)
    n_steps, dt = problem.steps
    start = checkpoint_read(resume, agrid, vgrid) if resume else None
    if start is not None:
        log.info('resuming from step %d (t=%.6g)', start.n, start.t)
    collector = _collector(
        config, problem.geometry, start.p if start else problem.p0, n_steps,
        c0=start.c if start else problem.c0,
        consts=problem.consts,
        taf_data=problem.taf_data,
        t0=start.t if start else 0.0,
    )
    checkpoint_dir = os.path.join(out_dir, 'checkpoints')
    if config.checkpoint_every:
        os.makedirs(checkpoint_dir, exist_ok=True)

    def checkpoint(state):
        path = os.path.join(checkpoint_dir, f'step_{state.n:06d}.vkin')
        checkpoint_write(path, state, agrid, vgrid)

    trajectory = direct_coupled_march(
        problem,
        observers=[collector] if collector else [],
        start=start,
        checkpoint=checkpoint,
        checkpoint_every=config.checkpoint_every,
    )
    first = start.n if start else 0
    steps = [first] + [
        n + 1 for n in range(first, n_steps) if problem.is_snapshot(n)
    ]
    snapshots = [
        Snapshot(
            step=n, t=t, p=p, c=c, b=b,
            inner_in=problem.inner_seed, outer_in=problem.outer_seed,
            r0=agrid.r0, r1=agrid.r1, vmax=vgrid.vmax,
        )
        for n, t, p, c, b in zip(steps, trajectory.times, trajectory.p, trajectory.c,
                                 trajectory.b)
    ]
    snapshots[-1] = Snapshot.from_state(trajectory.final_state, agrid, vgrid)
    report = collector.report() if collector else DiagnosticsReport()
    report.admissibility = admissibility
    return RunResult(dt=dt, steps=n_steps, snapshots=snapshots, report=report)


def _run_picard(config: RunConfig, agrid, vgrid, out_dir, resume) -> RunResult:
    problem = _coupled_problem(config, agrid, vgrid)
    admissibility = _admissibility(config, agrid, vgrid, problem.consts)
    n_steps, dt = problem.steps
    collector = _collector(
        config, problem.geometry, problem.p0, n_steps,
        c0=problem.c0, consts=problem.consts, taf_data=problem.taf_data,
    )
    state = picard_solve(
        problem,
        tol=config.tolerances.picard,
        m_max=config.tolerances.picard_max_iterations,
        observers=[collector] if collector else [],
    )
    current = state.current
    snapshots = [
        Snapshot(
            step=0, t=t, p=p, c=c, b=b,
            inner_in=problem.inner_seed, outer_in=problem.outer_seed,
            r0=agrid.r0, r1=agrid.r1, vmax=vgrid.vmax,
        )
        for t, p, c, b in zip(current.times, current.p, current.c_snapshots, current.b)
    ]
    report = collector.report() if collector else DiagnosticsReport()
    report.admissibility = admissibility
    report.picard = state
    return RunResult(dt=dt, steps=n_steps, snapshots=snapshots, report=report)


MODES = {
    RunMode.HEAT_LAB: _run_heat_lab,
    RunMode.LINEAR_FP: _run_linear,
    RunMode.DIRECT: _run_direct,
    RunMode.PICARD: _run_picard,
}


def check(config: RunConfig) -> Dict[str, Any]:
    """
    Dry validation: builds grids, initial data and the time step, and in nonlocal mode
    evaluates K1·K2 without running.

    :raises AdmissibilityException: If K1·K2 ≥ 1 in nonlocal mode
    :raises ConfigException:        If the configuration cannot be turned into a run
    """
    agrid, vgrid = build_grids(config)
    _initial_density(config, agrid, vgrid)
    coupled = config.mode in (RunMode.DIRECT, RunMode.PICARD)
    force = np.array(config.linear['force']) if config.mode is RunMode.LINEAR_FP else None
    dt = choose_dt(config, agrid, vgrid, force, coupled=coupled)
    n_steps, dt = step_count(config.T, dt)
    return {
        'mode': config.mode,
        'bc_mode': config.bc_mode,
        'dt': dt,
        'steps': n_steps,
        'admissibility': _admissibility(config, agrid, vgrid),
    }


def _final_norms(snapshot: Snapshot, agrid, vgrid) -> dict:
    return {
        't': snapshot.t,
        'mass': total_mass(snapshot.p, agrid, vgrid),
        'p_l1': lq_norm(snapshot.p, 1, agrid, vgrid),
        'p_inf': lq_norm(snapshot.p, np.inf, agrid, vgrid),
        'p_min': float(np.min(snapshot.p)),
        'c_inf': sup_norm(snapshot.c),
        'c_min': float(np.min(snapshot.c)),
    }


def _write_json(path: str, data: dict) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(json.dumps(data, cls=ReportEncoder, indent=2))


def _write_outputs(result: RunResult, out_dir: str) -> List[str]:
    snapshot_dir = os.path.join(out_dir, 'snapshots')
    os.makedirs(snapshot_dir, exist_ok=True)
    names = []
    for index, snapshot in enumerate(result.snapshots):
        name = f'snapshot_{index:05d}.vkin'
        write_snapshot(os.path.join(snapshot_dir, name), snapshot)
        names.append(name)
    with open(os.path.join(out_dir, 'diagnostics.jsonl'), 'w', encoding='utf-8') as f:
        for line in result.report.lines():
            f.write(json.dumps(line, cls=ReportEncoder) + '\n')
    return names


def run(
    config: RunConfig,
    out_dir: str,
    resume: Optional[str] = None,
    threads: Optional[str] = None,
) -> int:
    """
    Execute the configured mode and write snapshots, ``diagnostics.jsonl`` and
    ``summary.json`` into ``out_dir``. The summary is written on every exit path and
    carries the failure reason.

    :param resume:  Checkpoint to continue from, direct mode only
    :param threads: Value of VESSELKIN_THREADS, recorded in the summary

    :return: The process exit code, 0 iff every enabled gate passed
    """
    os.makedirs(out_dir, exist_ok=True)
    summary: Dict[str, Any] = {
        'schema_version': Config.REPORT_SCHEMA_VERSION,
        'version': __version__,
        'mode': config.mode,
        'bc_mode': config.bc_mode,
        'T': config.T,
        'seed': config.seed,
        'threads': threads,
        'status': 'running',
        'exit_code': None,
        'reason': None,
    }
    try:
        _write_json(os.path.join(out_dir, 'config.json'), config.raw)
        if resume and config.mode is not RunMode.DIRECT:
            raise ConfigException(
                'Invalid data: only direct runs can resume from a checkpoint (key "mode")',
                key='mode',
            )
        agrid, vgrid = build_grids(config)
        try:
            result = MODES[config.mode](config, agrid, vgrid, out_dir, resume)
        except ValueError as e:
            raise NumericalException(f'Numerical abort: {e}') from e
        summary['snapshots'] = _write_outputs(result, out_dir)
        report = result.report
        enabled = list(config.diagnostics.gates) if config.diagnostics.enabled else []
        if report.heat is not None and 'heat' not in enabled:
            enabled.append('heat')
        summary.update(
            dt=result.dt,
            steps=result.steps,
            final=_final_norms(result.snapshots[-1], agrid, vgrid) if result.snapshots else None,
            maxima=report.maxima(),
            admissibility=report.admissibility,
            picard=report.picard,
            iterates=report.iterates,
            heat=report.heat,
            sprouting_alarm=report.sprouting_alarm,
            gates=report.gate_results(),
            enabled_gates=enabled,
            **result.extra,
        )
        failed = report.failed_gates(enabled)
        summary['failed_gates'] = failed
        if failed:
            raise GateException(failed)
        summary.update(status='ok', exit_code=Config.EXIT_OK)
    except SimulationException as e:
        log.error('run failed: %s', e.message)
        summary.update(status='failed', exit_code=e.exit_code, reason=e.message)
    finally:
        _write_json(os.path.join(out_dir, 'summary.json'), summary)
    return summary['exit_code']


def record_failure(out_dir: str, error: SimulationException) -> int:
    """Summary of a run that failed before it could start, e.g. on an unreadable config."""
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, 'summary.json'), {
        'schema_version': Config.REPORT_SCHEMA_VERSION,
        'version': __version__,
        'status': 'failed',
        'exit_code': error.exit_code,
        'reason': error.message,
    })
    return error.exit_code
