import logging
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from voluptuous import PREVENT_EXTRA, Any as AnyOf, In, Optional as Opt, Schema

from vesselkin import Config, ConfigException
from vesselkin.diffusion import DiffusionScheme
from vesselkin.diagnostics import DEFAULT_GATES, GATES
from vesselkin.fields import ModelParams, default_vmax
from vesselkin.grids import AnnulusGrid, VelocityGrid, build_annulus_grid, build_velocity_grid
from vesselkin.kinetic import BoundaryMode, Splitting
from vesselkin.utils import load_json, validate_data
from vesselkin.validators import (
    ValEvenCount,
    ValMinCount,
    ValNonNegative,
    ValNonPositive,
    ValPositive,
    ValSproutingVelocity,
    ValVector2,
)

__all__ = [
    'RunMode',
    'DtPolicy',
    'GridSpec',
    'Tolerances',
    'DiagnosticsOptions',
    'RunConfig',
    'CONFIG_SCHEMA',
    'parse_config',
    'load_config',
    'space_profile',
    'velocity_profile',
    'phase_profile',
]

log = logging.getLogger(__name__)


class RunMode(Enum):
    PICARD = 'picard'
    DIRECT = 'direct'
    LINEAR_FP = 'linear-fp'
    HEAT_LAB = 'heat-lab'


class DtPolicy(Enum):
    FIXED = 'fixed'
    CFL = 'cfl'


SPACE_PROFILES = ('zero', 'constant', 'radial-bump', 'random')
PHASE_PROFILES = SPACE_PROFILES + ('gaussian-in-v', 'product', 'snapshot')

SPACE_PROFILE_SCHEMA = Schema(
    {
        'profile': In(SPACE_PROFILES),
        Opt('value', default=0.0): ValNonNegative('value'),
        Opt('amplitude', default=1.0): ValNonNegative('amplitude'),
        Opt('center', default=None): AnyOf(None, ValNonNegative('center')),
        Opt('width', default=0.1): ValPositive('width'),
    },
    required=True,
    extra=PREVENT_EXTRA,
)

VELOCITY_PROFILE_SCHEMA = Schema(
    {
        'profile': In(('constant', 'gaussian-in-v')),
        Opt('value', default=1.0): ValNonNegative('value'),
        Opt('amplitude', default=1.0): ValNonNegative('amplitude'),
        Opt('mean', default=(0.0, 0.0)): ValVector2('mean'),
        Opt('temperature', default=None): AnyOf(None, ValPositive('temperature')),
    },
    required=True,
    extra=PREVENT_EXTRA,
)

PHASE_PROFILE_SCHEMA = Schema(
    {
        'profile': In(PHASE_PROFILES),
        Opt('value', default=0.0): ValNonNegative('value'),
        Opt('amplitude', default=1.0): ValNonNegative('amplitude'),
        Opt('center', default=None): AnyOf(None, ValNonNegative('center')),
        Opt('width', default=0.1): ValPositive('width'),
        Opt('mean', default=(0.0, 0.0)): ValVector2('mean'),
        Opt('temperature', default=None): AnyOf(None, ValPositive('temperature')),
        Opt('space'): SPACE_PROFILE_SCHEMA,
        Opt('velocity'): VELOCITY_PROFILE_SCHEMA,
        Opt('path'): str,
    },
    required=True,
    extra=PREVENT_EXTRA,
)

_DEFAULTS = ModelParams()

PARAMS_SCHEMA = Schema(
    {
        Opt('beta', default=_DEFAULTS.beta): ValPositive('beta'),
        Opt('sigma', default=_DEFAULTS.sigma): ValPositive('sigma'),
        Opt('gamma', default=_DEFAULTS.gamma): ValNonNegative('gamma'),
        Opt('d', default=_DEFAULTS.d): ValPositive('d'),
        Opt('eta', default=_DEFAULTS.eta): ValNonNegative('eta'),
        Opt('alpha1', default=_DEFAULTS.alpha1): ValNonNegative('alpha1'),
        Opt('cR', default=_DEFAULTS.cR): ValPositive('cR'),
        Opt('d1', default=_DEFAULTS.d1): ValNonNegative('d1'),
        Opt('gamma1', default=_DEFAULTS.gamma1): ValNonNegative('gamma1'),
        Opt('q1', default=_DEFAULTS.q1): ValNonNegative('q1'),
        Opt('chi', default=_DEFAULTS.chi): ValPositive('chi'),
        Opt('sigma_v', default=_DEFAULTS.sigma_v): ValPositive('sigma_v'),
        Opt('v0', default=_DEFAULTS.v0): ValSproutingVelocity,
        Opt('eps_nu', default=_DEFAULTS.eps_nu): ValPositive('eps_nu'),
    },
    extra=PREVENT_EXTRA,
)

CONFIG_SCHEMA = Schema(
    {
        Opt('mode', default='picard'): In([m.value for m in RunMode]),
        Opt('bc_mode', default='fixed-g'): In([m.value for m in BoundaryMode]),
        'T': ValPositive('T'),
        Opt('dt', default={}): {
            Opt('policy', default='cfl'): In([p.value for p in DtPolicy]),
            Opt('value', default=None): AnyOf(None, ValPositive('dt.value')),
            Opt('safety', default=Config.CFL_SAFETY): ValPositive('safety'),
        },
        Opt('splitting', default='strang'): In([s.value for s in Splitting]),
        Opt('diffusion_scheme', default='explicit'): In([s.value for s in DiffusionScheme]),
        Opt('params', default={}): PARAMS_SCHEMA,
        'grid': {
            Opt('r0', default=1.0): ValPositive('r0'),
            Opt('r1', default=2.0): ValPositive('r1'),
            'nr': ValMinCount('nr', 2),
            'nth': ValMinCount('nth', 4),
            'nv': ValEvenCount('nv'),
            Opt('vmax', default=None): AnyOf(None, ValPositive('vmax')),
        },
        Opt('initial', default={}): {
            Opt('p', default={'profile': 'zero'}): PHASE_PROFILE_SCHEMA,
            Opt('c', default={'profile': 'zero'}): SPACE_PROFILE_SCHEMA,
        },
        Opt('boundary', default={}): {
            Opt('c_r0', default=0.0): ValNonPositive('c_r0'),
            Opt('g_inner', default={'profile': 'zero'}): PHASE_PROFILE_SCHEMA,
            Opt('g_outer', default={'profile': 'zero'}): PHASE_PROFILE_SCHEMA,
            Opt('j0', default=0.0): ValNonNegative('j0'),
        },
        Opt('linear', default={}): {
            Opt('absorption', default=0.0): AnyOf(int, float),
            Opt('source', default=0.0): ValNonNegative('source'),
            Opt('force', default=(0.0, 0.0)): ValVector2('force'),
        },
        Opt('heat', default={}): {
            Opt('d', default=None): AnyOf(None, ValPositive('heat.d')),
            Opt('source', default=1.0): ValNonNegative('heat.source'),
            Opt('times', default=[0.01, 0.1, 1.0]): [ValPositive('heat.times')],
            Opt('oracle_time', default=0.1): AnyOf(None, ValPositive('heat.oracle_time')),
        },
        Opt('snapshot_every', default=1): ValMinCount('snapshot_every', 1),
        Opt('checkpoint_every', default=0): ValMinCount('checkpoint_every', 0),
        Opt('diagnostics', default={}): {
            Opt('enabled', default=True): bool,
            Opt('gates', default=list(DEFAULT_GATES)): [In(GATES)],
            Opt('mu', default=Config.MOMENT_ORDER): ValMinCount('mu', 3),
            Opt('ell', default=Config.INTERPOLATION_ORDER): ValMinCount('ell', 1),
        },
        Opt('tolerances', default={}): {
            Opt('picard', default=Config.PICARD_TOLERANCE): ValPositive('picard'),
            Opt('picard_max_iterations', default=Config.PICARD_MAX_ITERATIONS): ValMinCount(
                'picard_max_iterations', 2
            ),
            Opt('bc', default=Config.BC_ITERATION_TOLERANCE): ValPositive('bc'),
            Opt('bc_max_iterations', default=Config.BC_MAX_ITERATIONS): ValMinCount(
                'bc_max_iterations', 2
            ),
            Opt('heat_slack', default=Config.HEAT_SLACK): ValPositive('heat_slack'),
            Opt('recursion_slack', default=Config.RECURSION_SLACK): ValPositive(
                'recursion_slack'
            ),
        },
        Opt('seed', default=0): ValMinCount('seed', 0),
    },
    required=True,
    extra=PREVENT_EXTRA,
)


@dataclass
class GridSpec:
    r0: float
    r1: float
    nr: int
    nth: int
    nv: int
    vmax: float

    def annulus(self) -> AnnulusGrid:
        return build_annulus_grid(self.r0, self.r1, self.nr, self.nth)

    def velocity(self) -> VelocityGrid:
        return build_velocity_grid(self.vmax, self.nv)


@dataclass
class Tolerances:
    picard: float = Config.PICARD_TOLERANCE
    picard_max_iterations: int = Config.PICARD_MAX_ITERATIONS
    bc: float = Config.BC_ITERATION_TOLERANCE
    bc_max_iterations: int = Config.BC_MAX_ITERATIONS
    heat_slack: float = Config.HEAT_SLACK
    recursion_slack: float = Config.RECURSION_SLACK


@dataclass
class DiagnosticsOptions:
    enabled: bool = True
    gates: List[str] = field(default_factory=lambda: list(DEFAULT_GATES))
    mu: int = Config.MOMENT_ORDER
    ell: int = Config.INTERPOLATION_ORDER


@dataclass
class RunConfig:
    """
    A validated run configuration. Profiles stay in their validated dictionary form
    and are turned into arrays on the grids by ``space_profile`` and ``phase_profile``.
    """

    mode: RunMode
    bc_mode: BoundaryMode
    T: float
    dt_policy: DtPolicy
    dt_value: Optional[float]
    cfl_safety: float
    splitting: Splitting
    scheme: DiffusionScheme
    params: ModelParams
    grid: GridSpec
    initial_p: Dict[str, Any]
    initial_c: Dict[str, Any]
    c_r0: float
    g_inner: Dict[str, Any]
    g_outer: Dict[str, Any]
    j0: float
    linear: Dict[str, Any]
    heat: Dict[str, Any]
    snapshot_every: int = 1
    checkpoint_every: int = 0
    diagnostics: DiagnosticsOptions = field(default_factory=DiagnosticsOptions)
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    base_dir: str = '.'
    raw: Dict[str, Any] = field(default_factory=dict)

    def serialize(self) -> dict:
        return self.raw


def parse_config(text: str, base_dir: str = '.') -> RunConfig:
    """
    Parse and validate the JSON text of a run configuration.

    :param text:     The configuration document
    :param base_dir: Directory relative snapshot paths are resolved against

    :return:                 The run configuration with every default filled in
    :raises ConfigException: If the text is malformed, a key is unknown or missing, or a
                             value is out of range
    """
    data = validate_data(CONFIG_SCHEMA, load_json(text))
    grid = data['grid']
    params = ModelParams(**data['params'])
    if not grid['r1'] > grid['r0']:
        raise ConfigException(
            'Invalid data: r1 must exceed r0 (key "grid.r1")', key='grid.r1'
        )
    vmax = grid['vmax'] or default_vmax(params)
    if params.v0_norm > vmax - vmax / grid['nv']:
        raise ConfigException(
            'Invalid data: sprouting velocity v0 lies outside the velocity box '
            '(key "params.v0")',
            key='params.v0',
        )
    for key in ('g_inner', 'g_outer'):
        if data['boundary'][key]['profile'] in ('snapshot', 'product'):
            raise ConfigException(
                f'Invalid data: boundary traces take zero, constant, radial-bump, random '
                f'or gaussian-in-v profiles (key "boundary.{key}.profile")',
                key=f'boundary.{key}.profile',
            )
    _check_phase_profile(data['initial']['p'], 'initial.p')
    if not data['diagnostics']['ell'] < data['diagnostics']['mu']:
        raise ConfigException(
            'Invalid data: ell must be smaller than mu (key "diagnostics.ell")',
            key='diagnostics.ell',
        )

    dt = data['dt']
    if dt['policy'] == DtPolicy.FIXED.value and dt['value'] is None:
        raise ConfigException(
            'Invalid data: a fixed time step needs a value (key "dt.value")',
            code='missing_key',
            key='dt.value',
        )
    return RunConfig(
        mode=RunMode(data['mode']),
        bc_mode=BoundaryMode(data['bc_mode']),
        T=data['T'],
        dt_policy=DtPolicy(dt['policy']),
        dt_value=dt['value'],
        cfl_safety=dt['safety'],
        splitting=Splitting(data['splitting']),
        scheme=DiffusionScheme(data['diffusion_scheme']),
        params=params,
        grid=GridSpec(vmax=vmax, **{k: v for k, v in grid.items() if k != 'vmax'}),
        initial_p=data['initial']['p'],
        initial_c=data['initial']['c'],
        c_r0=data['boundary']['c_r0'],
        g_inner=data['boundary']['g_inner'],
        g_outer=data['boundary']['g_outer'],
        j0=data['boundary']['j0'],
        linear=data['linear'],
        heat=data['heat'],
        snapshot_every=data['snapshot_every'],
        checkpoint_every=data['checkpoint_every'],
        diagnostics=DiagnosticsOptions(**data['diagnostics']),
        tolerances=Tolerances(**data['tolerances']),
        seed=data['seed'],
        base_dir=base_dir,
        raw=data,
    )


def load_config(path: str) -> RunConfig:
    """
    :raises ConfigException: If the file cannot be read or its contents are invalid
    """
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigException(f'Unable to read config {path}: {e.strerror}', code='malformed')
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _check_phase_profile(spec: Dict[str, Any], key: str) -> None:
    if spec['profile'] == 'product' and ('space' not in spec or 'velocity' not in spec):
        raise ConfigException(
            f'Invalid data: product profiles need space and velocity parts (key "{key}")',
            code='missing_key',
            key=key,
        )
    if spec['profile'] == 'snapshot' and 'path' not in spec:
        raise ConfigException(
            f'Invalid data: snapshot profiles need a path (key "{key}.path")',
            code='missing_key',
            key=f'{key}.path',
        )


def space_profile(spec: Dict[str, Any], agrid: AnnulusGrid, seed: int = 0) -> np.ndarray:
    """
    Cell values of a spatial profile, shape (Nr, Nth). ``radial-bump`` is a Gaussian
    in r around ``center`` (mid radius by default); ``random`` draws uniform values
    from a generator seeded with ``seed``.
    """
    kind = spec['profile']
    if kind == 'zero':
        return np.zeros(agrid.shape)
    if kind == 'constant':
        return np.full(agrid.shape, float(spec['value']))
    if kind == 'radial-bump':
        center = spec['center'] if spec['center'] is not None else (agrid.r0 + agrid.r1) / 2
        bump = spec['amplitude'] * np.exp(-(((agrid.r - center) / spec['width']) ** 2))
        return np.repeat(bump[:, None], agrid.nth, axis=1)
    if kind == 'random':
        rng = np.random.default_rng(seed)
        return spec['amplitude'] * rng.random(agrid.shape)
    raise ConfigException(f'Invalid data: {kind} is not a spatial profile (key "profile")')


def velocity_profile(
    spec: Dict[str, Any], vgrid: VelocityGrid, params: ModelParams
) -> np.ndarray:
    """
    Values on the velocity grid, shape (Nv, Nv). ``gaussian-in-v`` is a normalized
    Maxwellian around ``mean`` with temperature σ/β unless given.
    """
    if spec['profile'] == 'constant':
        return np.full(vgrid.shape, float(spec['value']))
    temperature = spec['temperature'] or params.sigma / params.beta
    mean = spec['mean']
    dist2 = (vgrid.vx - mean[0]) ** 2 + (vgrid.vy - mean[1]) ** 2
    return spec['amplitude'] * np.exp(-dist2 / (2 * temperature)) / (2 * math.pi * temperature)


def phase_profile(
    spec: Dict[str, Any],
    agrid: AnnulusGrid,
    vgrid: VelocityGrid,
    params: ModelParams,
    seed: int = 0,
    ring: Optional[int] = None,
) -> np.ndarray:
    """
    Phase-space values of a profile, shape (Nr, Nth, Nv, Nv). With ``ring`` only that
    ring of cells is returned, shape (Nth, Nv, Nv), which is how boundary traces are set.
    Snapshot profiles are read by the runner, not here.
    """
    kind = spec['profile']
    if kind == 'gaussian-in-v':
        space = np.ones(agrid.shape)
        velocity = velocity_profile(spec, vgrid, params)
    elif kind == 'product':
        space = space_profile(spec['space'], agrid, seed)
        velocity = velocity_profile(spec['velocity'], vgrid, params)
    elif kind == 'random':
        rng = np.random.default_rng(seed)
        values = spec['amplitude'] * rng.random(agrid.shape + vgrid.shape)
        return values if ring is None else values[ring]
    elif kind == 'snapshot':
        raise ConfigException('Invalid data: snapshot profiles are resolved by the runner')
    else:
        space = space_profile(spec, agrid, seed)
        velocity = np.ones(vgrid.shape)
    values = space[..., None, None] * velocity
    return values if ring is None else values[ring]
