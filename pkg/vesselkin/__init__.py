import logging

from vesselkin.exceptions import (  # noqa
    AdmissibilityException,
    ConfigException,
    GateException,
    NumericalException,
    SimulationException,
    SnapshotException,
)
from vesselkin.serializer import ReportEncoder  # noqa

__version__ = '0.1.0'

logging.getLogger(__name__).addHandler(logging.NullHandler())


class Config:
    N = 2  # spatial and velocity dimension
    TRUNCATION_TOLERANCE = 1e-8  # mass allowed beyond Vmax
    GRAZING_TOLERANCE = 1e-14  # relative to Vmax, |v.n| below this is neither half-space
    UNDERFLOW_FLOOR = 1e-300
    CFL_SAFETY = 0.3
    PICARD_TOLERANCE = 1e-6
    PICARD_MAX_ITERATIONS = 12
    BC_ITERATION_TOLERANCE = 1e-10
    BC_MAX_ITERATIONS = 40
    MOMENT_ORDER = 3  # mu
    INTERPOLATION_ORDER = 1  # ell
    HEAT_SLACK = 1.1
    RECURSION_SLACK = 1.05
    IDENTITY_TOLERANCE = 1e-12
    INTERPOLATION_SLACK = 1e-10
    SPROUTING_GAIN_LIMIT = 1.0  # one outer boundary pass must not amplify p(r1, v0)
    ORACLE_CELLS = 800
    ORACLE_MODES = 60
    REPORT_SCHEMA_VERSION = 1
    SNAPSHOT_FORMAT_VERSION = 1
    # Exit codes of ``vesselkin run``; the exceptions carry the non-zero ones.
    EXIT_OK = 0
    EXIT_CONFIG = 2
    EXIT_ADMISSIBILITY = 3
    EXIT_NUMERICAL = 4
    EXIT_GATE = 5
