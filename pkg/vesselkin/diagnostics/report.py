import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from vesselkin import Config
from vesselkin.coupling import AdmissibilityReport, PicardState
from vesselkin.diffusion import NeumannData
from vesselkin.fields import lq_norm, marginal_density, moment, weighted_sup_norm
from vesselkin.kinetic import (
    BoundaryConstants,
    BoundaryIterate,
    BoundaryTrace,
    KineticGeometry,
)

from .balance import lq_identity_residual, mass_balance_residual, momentum_balance_residual
from .boundary import BoundaryIdentity, boundary_identity_check, sprouting_gain
from .bounds import BoundTracker, Check, bound_suite, interpolation_report
from .heat import HeatDecayReport

__all__ = [
    'GATES',
    'DEFAULT_GATES',
    'SnapshotDiagnostics',
    'DiagnosticsReport',
    'DiagnosticsCollector',
]

log = logging.getLogger(__name__)

GATES = (
    'positivity',
    'linf',
    'l1',
    'flux',
    'weighted',
    'interpolation',
    'boundary',
    'sprouting',
    'recursion',
    'picard',
    'heat',
)
DEFAULT_GATES = (
    'positivity', 'linf', 'l1', 'flux', 'interpolation', 'boundary', 'sprouting',
)


@dataclass
class SnapshotDiagnostics:
    """
    Diagnostics of one stored state. Residuals and positivity minima are the worst
    values over the steps since the previous snapshot.
    """

    t: float
    mass: float
    inflow: float = 0.0
    outflow: float = 0.0
    mass_residual: float = 0.0
    momentum_residual: Dict[int, float] = field(default_factory=lambda: {1: 0.0, 2: 0.0})
    lq_residual: float = 0.0
    trace_square: float = 0.0
    norms: Dict[str, float] = field(default_factory=dict)
    moments: Dict[int, float] = field(default_factory=dict)
    weighted_sup: float = 0.0
    interpolation: Dict[str, Check] = field(default_factory=dict)
    bounds: Dict[str, Check] = field(default_factory=dict)
    boundary: Optional[BoundaryIdentity] = None
    sprouting_gain: Optional[float] = None
    min_p: float = 0.0
    min_c: Optional[float] = None
    clamp_events: int = 0
    iterate: Optional[int] = None

    def gates(self) -> Dict[str, bool]:
        bounds = self.bounds
        return {
            'positivity': self.min_p >= 0 and (self.min_c is None or self.min_c >= 0),
            'linf': bounds['linf'].passed if 'linf' in bounds else True,
            'l1': bounds['l1'].passed if 'l1' in bounds else True,
            'flux': bounds['flux'].passed if 'flux' in bounds else True,
            'weighted': bounds['weighted'].passed if 'weighted' in bounds else True,
            'interpolation': all(c.passed for c in self.interpolation.values()),
            'boundary': self.boundary is None or self.boundary.passed,
            'sprouting': self.sprouting_gain is None
            or self.sprouting_gain <= Config.SPROUTING_GAIN_LIMIT,
        }

    def serialize(self) -> dict:
        return {
            't': self.t,
            'iterate': self.iterate,
            'mass': self.mass,
            'inflow': self.inflow,
            'outflow': self.outflow,
            'mass_residual': self.mass_residual,
            'momentum_residual': {str(k): v for k, v in self.momentum_residual.items()},
            'lq_residual': self.lq_residual,
            'trace_square': self.trace_square,
            'norms': self.norms,
            'moments': {str(k): v for k, v in self.moments.items()},
            'weighted_sup': self.weighted_sup,
            'interpolation': self.interpolation,
            'bounds': self.bounds,
            'boundary': self.boundary,
            'sprouting_gain': self.sprouting_gain,
            'min_p': self.min_p,
            'min_c': self.min_c,
            'clamp_events': self.clamp_events,
            'gates': self.gates(),
        }


@dataclass
class DiagnosticsReport:
    records: List[SnapshotDiagnostics] = field(default_factory=list)
    admissibility: Optional[AdmissibilityReport] = None
    picard: Optional[PicardState] = None
    iterates: List[BoundaryIterate] = field(default_factory=list)
    recursion: List[bool] = field(default_factory=list)
    heat: Optional[HeatDecayReport] = None
    sprouting_alarm: Optional[float] = None
    schema_version: int = Config.REPORT_SCHEMA_VERSION

    def gate_results(self) -> Dict[str, bool]:
        results = {name: True for name in GATES}
        for record in self.records:
            for name, ok in record.gates().items():
                results[name] = results[name] and ok
        results['recursion'] = all(self.recursion)
        results['picard'] = self.picard is None or self.picard.converged
        results['heat'] = self.heat is None or self.heat.passed
        return results

    def failed_gates(self, enabled: Sequence[str] = DEFAULT_GATES) -> List[str]:
        results = self.gate_results()
        return [name for name in enabled if not results[name]]

    def maxima(self) -> dict:
        """Largest residuals over all snapshots, for the run summary."""
        records = self.records or [SnapshotDiagnostics(t=0.0, mass=0.0)]
        return {
            'mass_residual': max(r.mass_residual for r in records),
            'momentum_residual': max(max(r.momentum_residual.values()) for r in records),
            'lq_residual': max(r.lq_residual for r in records),
            'clamp_events': sum(r.clamp_events for r in records),
            'min_p': min(r.min_p for r in records),
        }

    def header(self) -> dict:
        return {
            'kind': 'header',
            'schema_version': self.schema_version,
            'snapshots': len(self.records),
            'admissibility': self.admissibility,
            'picard': self.picard,
            'iterates': self.iterates,
            'recursion': self.recursion,
            'heat': self.heat,
            'sprouting_alarm': self.sprouting_alarm,
            'maxima': self.maxima(),
            'gates': self.gate_results(),
        }

    def lines(self) -> Iterator[dict]:
        """The report as one header record followed by one record per snapshot."""
        yield self.header()
        for record in self.records:
            yield dict(kind='snapshot', **record.serialize())

    def serialize(self) -> dict:
        return dict(self.header(), records=self.records)


class _Window:
    """Worst values over the steps between two snapshots."""

    def __init__(self) -> None:
        self.mass = 0.0
        self.momentum = {1: 0.0, 2: 0.0}
        self.lq = 0.0
        self.trace_square = 0.0
        self.min_p = np.inf
        self.min_c = np.inf
        self.clamps = 0
        self.boundary: Optional[BoundaryIdentity] = None
        self.sprouting: Optional[float] = None
        self.inflow = 0.0
        self.outflow = 0.0


class DiagnosticsCollector:
    """
    Step observer that turns a run into per-snapshot diagnostics. It accepts the events
    of the coupled drivers and the steps of ``solve_linear_fp`` alike. When steps carry
    an iterate number only the most recent iterate is kept.

    :param n_steps:        Number of steps of the run, the last one is always stored
    :param snapshot_every: Snapshot cadence of the run
    :param consts:         Boundary constants, enables the boundary identity and sprouting
                           gain checks
    :param taf_data:       Neumann datum of a coupled run, enters the TAF alarm
    :param t0:             Start time, non-zero when a run resumes from a checkpoint
    """

    def __init__(
        self,
        geometry: KineticGeometry,
        p0: np.ndarray,
        n_steps: int,
        snapshot_every: int = 1,
        c0: Optional[np.ndarray] = None,
        consts: Optional[BoundaryConstants] = None,
        taf_data: Optional[NeumannData] = None,
        mu: int = Config.MOMENT_ORDER,
        ell: int = Config.INTERPOLATION_ORDER,
        t0: float = 0.0,
    ) -> None:
        self.geometry = geometry
        self.p0 = np.asarray(p0, dtype=float)
        self.c0 = None if c0 is None else np.asarray(c0, dtype=float)
        self.n_steps = n_steps
        self.snapshot_every = snapshot_every
        self.consts = consts
        self.taf_data = taf_data
        self.mu = mu
        self.ell = ell
        self.t0 = t0
        self.iterate: Optional[int] = None
        self.alarm: Optional[float] = None
        self.records: List[SnapshotDiagnostics] = []
        self._start(None)

    def _start(self, iterate: Optional[int]) -> None:
        self.alarm = None
        agrid, vgrid = self.geometry.agrid, self.geometry.vgrid
        c0 = self.c0 if self.c0 is not None else np.zeros(agrid.shape)
        self.iterate = iterate
        self.tracker = BoundTracker.start(self.p0, c0, agrid, vgrid, self.mu)
        self._window = _Window()
        b0 = None if self.c0 is None else np.zeros(agrid.shape)
        self.records = [self._snapshot(self.t0, self.p0, self.c0, b0, _Window())]

    def _snapshot(self, t, p, c, b, window: _Window) -> SnapshotDiagnostics:
        agrid, vgrid, params = self.geometry.agrid, self.geometry.vgrid, self.geometry.params
        min_p = min(window.min_p, float(np.min(p))) if np.size(p) else 0.0
        min_c = None
        if c is not None:
            min_c = min(window.min_c, float(np.min(c)))
        return SnapshotDiagnostics(
            t=t,
            mass=moment(p, 0, agrid, vgrid),
            inflow=window.inflow,
            outflow=window.outflow,
            mass_residual=window.mass,
            momentum_residual=dict(window.momentum),
            lq_residual=window.lq,
            trace_square=window.trace_square,
            norms={
                'l1': lq_norm(p, 1, agrid, vgrid),
                'l2': lq_norm(p, 2, agrid, vgrid),
                'inf': lq_norm(p, np.inf, agrid, vgrid),
            },
            moments={ell: moment(p, ell, agrid, vgrid) for ell in range(self.mu + 1)},
            weighted_sup=weighted_sup_norm(p, self.mu, vgrid),
            interpolation=interpolation_report(p, agrid, vgrid, self.mu, self.ell),
            bounds=bound_suite(
                p, self.tracker, agrid, vgrid, params, c=c, b=b,
                b_from_same_run=self.iterate is None and self.t0 == 0,
            ),
            boundary=window.boundary,
            sprouting_gain=window.sprouting,
            min_p=min_p,
            min_c=min_c,
            clamp_events=window.clamps,
            iterate=self.iterate,
        )

    def _identity(self, step) -> Optional[BoundaryIdentity]:
        if self.consts is None or step.inner_marginal is None:
            return None
        p = step.p_before
        trace = BoundaryTrace(
            inner_in=step.inner_in,
            inner_out=np.where(self.consts.inner.outgoing, p[0], 0.0),
            outer_in=step.outer_in,
            outer_out=np.where(self.consts.outer.outgoing, p[-1], 0.0),
        )
        summary = step.summary
        return boundary_identity_check(
            trace, step.inner_marginal, step.outer_datum, self.consts,
            summary.inner_clamp, summary.outer_clamp,
        )

    def __call__(self, step) -> None:
        iterate = getattr(step, 'iterate', None)
        if iterate != self.iterate:
            self._start(iterate)
        geometry = self.geometry
        agrid, vgrid, params = geometry.agrid, geometry.vgrid, geometry.params
        record, coefficients = step.record, step.coefficients
        p_before, p_after = step.p_before, step.p_after
        c_after = getattr(step, 'c_after', None)

        window = self._window
        window.mass = max(window.mass, mass_balance_residual(
            p_before, p_after, record, geometry, coefficients
        ))
        for mu in (1, 2):
            window.momentum[mu] = max(window.momentum[mu], momentum_balance_residual(
                p_before, p_after, record, geometry, mu, coefficients
            ))
        window.lq = max(window.lq, lq_identity_residual(
            p_before, p_after, record, geometry, coefficients
        ))
        window.trace_square = record.trace_square
        window.inflow = float(record.inflow[0])
        window.outflow = float(record.outflow[0])
        window.min_p = min(window.min_p, float(np.min(p_after)))
        if c_after is not None:
            window.min_c = min(window.min_c, float(np.min(c_after)))
        window.clamps += record.clamp_events
        identity = self._identity(step)
        if identity is not None and (
            window.boundary is None
            or max(identity.inner_residual, identity.outer_residual)
            > max(window.boundary.inner_residual, window.boundary.outer_residual)
        ):
            window.boundary = identity
        c_before = getattr(step, 'c_before', None)
        if self.consts is not None and step.summary is not None and c_before is not None:
            gain = sprouting_gain(c_before[-1], self.consts, params)
            if window.sprouting is None or gain > window.sprouting:
                window.sprouting = gain
            if gain > Config.SPROUTING_GAIN_LIMIT and self.alarm is None:
                self.alarm = step.t
                log.warning('sprouting gain %.4g exceeds %g at t = %.4g',
                            gain, Config.SPROUTING_GAIN_LIMIT, step.t)

        inner_flux = None
        if self.taf_data is not None:
            inner_flux = self.taf_data.at(step.t - record.dt, agrid.nth)
        self.tracker.advance(
            record.dt, params, vgrid, agrid,
            absorption=coefficients.absorption,
            source=coefficients.source,
            force=coefficients.force,
            inner_in=step.inner_in,
            outer_in=step.outer_in,
            inflow_mass=float(record.inflow[0]),
            inflow_square=record.trace_square_in,
            rho_before=marginal_density(p_before, vgrid),
            rho_after=marginal_density(p_after, vgrid),
            inner_flux=inner_flux,
        )

        n = step.n
        if (n + 1) % self.snapshot_every == 0 or n + 1 == self.n_steps:
            self.records.append(self._snapshot(
                step.t, p_after, c_after, getattr(step, 'b', None), window
            ))
            self._window = _Window()

    def report(self, **kwargs) -> DiagnosticsReport:
        kwargs.setdefault('sprouting_alarm', self.alarm)
        return DiagnosticsReport(records=list(self.records), **kwargs)
