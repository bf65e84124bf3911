import logging
from dataclasses import dataclass
from typing import Optional

from vesselkin import AdmissibilityException
from vesselkin.fields import ModelParams
from vesselkin.grids import AnnulusGrid, VelocityGrid
from vesselkin.kinetic import (
    BoundaryConstants,
    admissibility_constants,
    compute_boundary_constants,
)

__all__ = ['AdmissibilityReport', 'compute_K1', 'compute_K2', 'check_admissibility']

log = logging.getLogger(__name__)


@dataclass
class AdmissibilityReport:
    K1: float
    K2: float
    k1_inflow: float

    @property
    def product(self) -> float:
        return self.K1 * self.K2

    @property
    def passed(self) -> bool:
        return self.product < 1

    def serialize(self) -> dict:
        return {
            'K1': self.K1,
            'K2': self.K2,
            'product': self.product,
            'pass': self.passed,
            'k1_inflow': self.k1_inflow,
        }


def _constants(params, agrid, vgrid, consts: Optional[BoundaryConstants]):
    consts = consts or compute_boundary_constants(agrid, vgrid, params)
    return admissibility_constants(consts, params, vgrid)


def compute_K1(
    params: ModelParams,
    agrid: AnnulusGrid,
    vgrid: VelocityGrid,
    consts: Optional[BoundaryConstants] = None,
) -> float:
    """Largest K1 over the outer boundary cells."""
    k1, _, _ = _constants(params, agrid, vgrid, consts)
    return float(k1.max())


def compute_K2(
    params: ModelParams,
    agrid: AnnulusGrid,
    vgrid: VelocityGrid,
    consts: Optional[BoundaryConstants] = None,
) -> float:
    _, k2, _ = _constants(params, agrid, vgrid, consts)
    return float(k2.max())


def check_admissibility(
    params: ModelParams,
    agrid: AnnulusGrid,
    vgrid: VelocityGrid,
    consts: Optional[BoundaryConstants] = None,
    strict: bool = True,
) -> AdmissibilityReport:
    """
    :raises AdmissibilityException: If ``strict`` and K1·K2 ≥ 1
    """
    k1, k2, k1_inflow = _constants(params, agrid, vgrid, consts)
    report = AdmissibilityReport(
        K1=float(k1.max()), K2=float(k2.max()), k1_inflow=float(k1_inflow.max())
    )
    log.info('admissibility: K1 = %.6g, K2 = %.6g, K1·K2 = %.6g',
             report.K1, report.K2, report.product)
    if strict and not report.passed:
        raise AdmissibilityException(report.product)
    return report
