import json

import numpy as np

from vesselkin import ReportEncoder
from vesselkin.conftest import random_density
from vesselkin.coupling import PicardState
from vesselkin.diagnostics import GATES, DiagnosticsCollector, DiagnosticsReport
from vesselkin.kinetic import (
    BoundaryMode,
    LinearProblemSpec,
    StepControls,
    cfl_dt,
    compute_boundary_constants,
    solve_linear_fp,
    step_count,
)


def _collect(agrid, vgrid, params, geometry, T=0.2, snapshot_every=2, nonlocal_=False):
    spec = LinearProblemSpec(p0=random_density(agrid, vgrid, seed=21))
    controls = StepControls(dt=cfl_dt(agrid, vgrid, params))
    n_steps, _ = step_count(T, controls.dt)
    consts = compute_boundary_constants(agrid, vgrid, params) if nonlocal_ else None
    collector = DiagnosticsCollector(geometry, spec.p0, n_steps, snapshot_every, consts=consts)
    mode = BoundaryMode.NONLOCAL if nonlocal_ else BoundaryMode.FIXED
    solve_linear_fp(spec, T, geometry, controls, mode, consts,
                    snapshot_every=snapshot_every, hooks=[collector])
    return collector, n_steps


def test_collector_records_every_snapshot(agrid, vgrid, params, geometry):
    collector, n_steps = _collect(agrid, vgrid, params, geometry)
    assert len(collector.records) == 1 + (n_steps + 1) // 2
    assert collector.records[0].t == 0.0
    assert set(collector.records[-1].gates()) == set(GATES) - {'recursion', 'picard', 'heat'}


def test_report_lines_are_json(agrid, vgrid, params, geometry):
    collector, _ = _collect(agrid, vgrid, params, geometry)
    lines = list(collector.report().lines())
    assert lines[0]['kind'] == 'header'
    assert lines[0]['snapshots'] == len(lines) - 1
    assert all(line['kind'] == 'snapshot' for line in lines[1:])
    decoded = [json.loads(json.dumps(line, cls=ReportEncoder)) for line in lines]
    assert decoded[1]['norms']['l1'] > 0


def test_nonlocal_run_keeps_last_iterate(agrid, vgrid, params, geometry):
    """Only the final boundary pass is reported and its identities hold."""
    collector, n_steps = _collect(agrid, vgrid, params, geometry, snapshot_every=1, nonlocal_=True)
    assert collector.iterate is not None and collector.iterate > 2
    assert len(collector.records) == 1 + n_steps
    assert collector.report().gate_results()['boundary']


def test_failed_gates():
    report = DiagnosticsReport(
        picard=PicardState(m=3, current=None, converged=False), recursion=[True, False]
    )
    assert report.failed_gates() == []
    assert report.failed_gates(['picard', 'recursion', 'heat']) == ['picard', 'recursion']


def test_empty_report_maxima():
    maxima = DiagnosticsReport().maxima()
    assert maxima['mass_residual'] == 0.0
    assert maxima['clamp_events'] == 0
    assert np.isfinite(maxima['min_p'])
