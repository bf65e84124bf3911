import math

import mock
import numpy as np
import pytest
from scipy import integrate, optimize

from vesselkin import AdmissibilityException
from vesselkin.conftest import PARAMS, VMAX
from vesselkin.coupling import check_admissibility, compute_K1, compute_K2
from vesselkin.fields import fermi_weight
from vesselkin.grids import build_annulus_grid, build_velocity_grid
from vesselkin.kinetic import admissibility_constants, compute_boundary_constants

INADMISSIBLE = (np.array([4.0, 2.0]), np.array([0.5, 0.25]), np.array([1.0, 1.0]))


def test_default_parameters_are_admissible(agrid, vgrid, params):
    report = check_admissibility(params, agrid, vgrid)
    assert report.passed
    assert report.product == pytest.approx(
        compute_K1(params, agrid, vgrid) * compute_K2(params, agrid, vgrid)
    )
    assert report.serialize()['pass'] is True


def test_inadmissible_strict(agrid, vgrid, params):
    with mock.patch(
        'vesselkin.coupling.admissibility.admissibility_constants', return_value=INADMISSIBLE
    ):
        with pytest.raises(AdmissibilityException) as e:
            check_admissibility(params, agrid, vgrid)
    assert e.value.product == 2.0


def test_inadmissible_reported(agrid, vgrid, params):
    with mock.patch(
        'vesselkin.coupling.admissibility.admissibility_constants', return_value=INADMISSIBLE
    ):
        report = check_admissibility(params, agrid, vgrid, strict=False)
    assert not report.passed
    assert (report.K1, report.K2, report.k1_inflow) == (4.0, 0.5, 1.0)


# θ = π/2 on a six cell ring: the outer normal is (0, 1), so the half-space split of the
# velocity box follows cell faces and the quadratures are plain midpoint rules.
ALIGNED = 1
ORACLE_NV = 256


@pytest.fixture(scope='module')
def aligned():
    agrid = build_annulus_grid(1.0, 2.0, 4, 6)
    vgrid = build_velocity_grid(VMAX, ORACLE_NV)
    consts = compute_boundary_constants(agrid, vgrid, PARAMS)
    k1, k2, _ = admissibility_constants(consts, PARAMS, vgrid)
    return agrid, consts, k1[ALIGNED], k2[ALIGNED]


def _integrands(agrid, consts, vx, vy):
    """|v·n| G w on the incoming half and w on the outgoing half, zero elsewhere."""
    kappa = PARAMS.beta / PARAMS.sigma
    center = consts.outer_velocity[ALIGNED]
    normal = agrid.outer_normals[ALIGNED]
    vn = vx * normal[0] + vy * normal[1]
    gauss = np.exp(-kappa * ((vx - center[0]) ** 2 + (vy - center[1]) ** 2))
    window = fermi_weight(vx, vy, PARAMS, center=PARAMS.chi * center)
    return np.where(vn < 0, -vn * gauss * window, 0.0), np.where(vn > 0, window, 0.0)


def test_admissibility_constants_match_monte_carlo(aligned):
    agrid, consts, _, k2 = aligned
    n = 10 ** 6
    vx, vy = np.random.default_rng(31).uniform(-VMAX, VMAX, size=(2, n))
    area = (2 * VMAX) ** 2
    incoming, outgoing = _integrands(agrid, consts, vx, vy)
    for estimate, samples in ((consts.abs_I1[ALIGNED], incoming), (k2, outgoing)):
        mean = area * samples.mean()
        error = area * samples.std() / math.sqrt(n)
        assert abs(estimate - mean) <= 3 * error


def test_admissibility_constants_match_adaptive_quadrature(aligned):
    agrid, consts, k1, k2 = aligned
    kappa = PARAMS.beta / PARAMS.sigma
    shift = -consts.outer_velocity[ALIGNED][1]

    def integrand(index):
        return lambda vy, vx: float(_integrands(agrid, consts, vx, vy)[index])

    abs_i1, _ = integrate.dblquad(integrand(0), -VMAX, VMAX, -VMAX, 0.0, epsrel=1e-6)
    k2_reference, _ = integrate.dblquad(integrand(1), -VMAX, VMAX, 0.0, VMAX, epsrel=1e-6)
    # the outgoing peak of |v·n| G sits on v_x = 0
    peak = optimize.minimize_scalar(
        lambda y: -y * math.exp(-kappa * (y + shift) ** 2),
        bounds=(0.0, VMAX), method='bounded', options={'xatol': 1e-10},
    )
    k1_reference = -peak.fun / abs_i1
    assert k1 == pytest.approx(k1_reference, rel=1e-2)
    assert k2 == pytest.approx(k2_reference, rel=1e-2)
