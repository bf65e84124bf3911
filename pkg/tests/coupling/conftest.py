import numpy as np
import pytest

from vesselkin.conftest import maxwellian
from vesselkin.coupling import CoupledProblem
from vesselkin.diffusion import NeumannData, diffusion_cfl_dt
from vesselkin.kinetic import BoundaryMode, StepControls, cfl_dt


@pytest.fixture
def make_problem(agrid, vgrid, params):
    """Factory of small coupled problems: a Maxwellian tip population in a TAF ramp."""

    def _make(T=0.1, bc_mode=BoundaryMode.FIXED, zero=False, snapshot_every=1):
        trace_shape = (agrid.nth,) + vgrid.shape
        if zero:
            p0 = np.zeros(agrid.shape + vgrid.shape)
            c0 = np.zeros(agrid.shape)
            flux = 0.0
        else:
            p0 = 0.5 * np.broadcast_to(maxwellian(vgrid, params), agrid.shape + vgrid.shape)
            c0 = np.repeat(agrid.r[:, None], agrid.nth, axis=1)
            flux = -0.5
        dt = min(cfl_dt(agrid, vgrid, params), 0.9 * diffusion_cfl_dt(agrid, params.d))
        return CoupledProblem(
            agrid=agrid,
            vgrid=vgrid,
            params=params,
            p0=np.array(p0),
            c0=c0,
            taf_data=NeumannData(flux),
            inner_seed=np.zeros(trace_shape),
            outer_seed=np.zeros(trace_shape),
            controls=StepControls(dt=dt),
            T=T,
            bc_mode=bc_mode,
            snapshot_every=snapshot_every,
        )

    return _make
