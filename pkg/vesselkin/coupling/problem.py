from dataclasses import dataclass
from typing import Optional

import numpy as np

from vesselkin.diffusion import DiffusionScheme, NeumannData, NeumannOperator
from vesselkin.fields import (
    ModelParams,
    branching_rate,
    regularized_delta,
    taf_force,
)
from vesselkin.grids import AnnulusGrid, VelocityGrid
from vesselkin.kinetic import (
    BoundaryMode,
    KineticCoefficients,
    KineticGeometry,
    NonlocalBoundary,
    StepControls,
    StepRecord,
    TraceSummary,
    compute_boundary_constants,
    step_count,
)
from vesselkin.kinetic.steps import model_absorption
from vesselkin.utils import cached_property

__all__ = ['CoupledProblem', 'StepEvent']


@dataclass
class CoupledProblem:
    """Everything a coupled run needs: grids, parameters, initial and boundary data."""

    agrid: AnnulusGrid
    vgrid: VelocityGrid
    params: ModelParams
    p0: np.ndarray
    c0: np.ndarray
    taf_data: NeumannData
    inner_seed: np.ndarray
    outer_seed: np.ndarray
    controls: StepControls
    T: float
    bc_mode: BoundaryMode = BoundaryMode.FIXED
    scheme: DiffusionScheme = DiffusionScheme.EXPLICIT
    snapshot_every: int = 1

    @cached_property
    def geometry(self) -> KineticGeometry:
        return KineticGeometry(self.agrid, self.vgrid, self.params)

    @cached_property
    def operator(self) -> NeumannOperator:
        return NeumannOperator(self.agrid, self.params.d)

    @cached_property
    def consts(self):
        if self.bc_mode is not BoundaryMode.NONLOCAL:
            return None
        return compute_boundary_constants(self.agrid, self.vgrid, self.params)

    @cached_property
    def boundary(self) -> Optional[NonlocalBoundary]:
        if self.consts is None:
            return None
        return NonlocalBoundary(self.consts, self.params, self.vgrid)

    @cached_property
    def nu(self) -> np.ndarray:
        return regularized_delta(self.vgrid.vx, self.vgrid.vy, self.params)

    @cached_property
    def steps(self):
        """(number of steps, uniform dt)."""
        return step_count(self.T, self.controls.dt)

    def is_snapshot(self, n: int) -> bool:
        """Whether the state after step n is stored."""
        n_steps = self.steps[0]
        return (n + 1) % self.snapshot_every == 0 or n + 1 == n_steps

    def coefficients(self, c: np.ndarray, b: np.ndarray, t: float) -> KineticCoefficients:
        """Frozen kinetic coefficients F(c), a = γb − α(c)ν."""
        inner_flux = self.taf_data.at(t, self.agrid.nth)
        return KineticCoefficients(
            force=taf_force(c, self.params, self.agrid, inner_flux),
            absorption=model_absorption(
                branching_rate(c, self.params), self.nu, b, self.params.gamma
            ),
        )


@dataclass
class StepEvent:
    """
    What observers see after each coupled step. Arrays must not be mutated.
    ``inner_marginal`` and ``outer_datum`` are the right-hand sides the inner marginal
    and outer flux identities close against with this step's traces; absent when the
    inflow was the seed.
    """

    n: int
    t: float
    p_before: np.ndarray
    p_after: np.ndarray
    c_before: np.ndarray
    c_after: np.ndarray
    b: np.ndarray
    record: StepRecord
    coefficients: KineticCoefficients
    inner_in: np.ndarray
    outer_in: np.ndarray
    summary: Optional[TraceSummary] = None
    inner_marginal: Optional[np.ndarray] = None
    outer_datum: Optional[np.ndarray] = None
    iterate: Optional[int] = None
