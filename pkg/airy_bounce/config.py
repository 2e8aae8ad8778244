'''
Run configuration: a JSON document with the sections

    constants, wavepacket, grid, numerics, sweep, limits, density

Every key is optional and gets the default of DEFAULTS; unknown keys are
rejected. Validation errors name the offending key by its dotted path.
'''
import copy
import json
import math
from dataclasses import dataclass

from scipy import constants as codata

from airy_bounce.energy import WavepacketParams, is_power_of_two, MIN_GRID_N, SEPARATION_SIGMAS
from airy_bounce.exceptions import AiryBounceError, ConfigError
from airy_bounce.pipeline import GridSettings, Numerics
from airy_bounce.scales import PhysicalConstants, HYDROGEN_MASS, LOCAL_GRAVITY

import logging
logger = logging.getLogger(__name__)

SWEEP_AXES = ('T', 'sigma_v', 'z0')

# range of an axis without sweep.min or sweep.max, None up to the limit of the axis
SWEEP_RANGES = {
    'T': (0.1, 1.0),
    'sigma_v': (0.04, None),
    'z0': (5e-4, None),
}

DEFAULTS = {
    'constants': {
        'hbar': codata.hbar,
        'mass': HYDROGEN_MASS,
        'g': LOCAL_GRAVITY,
        'g0': codata.g,
        'g_band': [1.0, 100.0],
    },
    'wavepacket': {
        'z0_m': 1e-3,
        'v0_mps': -0.0915,
        'sigma_v_mps': 0.079,
        'T_s': 0.3,
        'n_events': 1,
    },
    'grid': {
        'n': 2 ** 16,
        'halfwidth_sigmas': 10.0,
        'momentum_pad': 8,
        'detector_below_m': 0.02,
        'detector_above_m': 0.06,
        'detector_n': 2 ** 13,
    },
    'numerics': {
        'delta_g_rel': 1e-6,
        'check_step': True,
        'step_tolerance': 0.01,
        'norm_tolerance': 1e-6,
        'support_fraction': 1e-8,
        'agreement_band': [0.7, 1.3],
    },
    'sweep': {
        'axis': 'T',
        'min': None,
        'max': None,
        'n_points': 10,
        'couple_v0': False,
        'include_reference': True,
        'with_momentum': False,
    },
    'limits': {
        'sigma_v_max_mps': 0.12,
        'z0_max_m': 0.005,
    },
    'density': {
        't_max_s': 0.05,
        'n_times': 51,
        'z_min_m': -0.003,
        'z_max_m': 0.003,
        'n_z': 301,
    },
}


@dataclass(frozen=True)
class SweepSettings:
    axis: str
    min: float
    max: float
    n_points: int
    couple_v0: bool
    include_reference: bool
    with_momentum: bool


@dataclass(frozen=True)
class Limits:
    '''
    Bounds keeping the wavepacket in the single-bounce regime (sigma_v)
    and the quantum reflection losses small (z0)
    '''
    sigma_v_max: float
    z0_max: float


@dataclass(frozen=True)
class DensitySettings:
    t_max: float
    n_times: int
    z_min: float
    z_max: float
    n_z: int


@dataclass(frozen=True)
class RunConfig:
    constants: PhysicalConstants
    wavepacket: WavepacketParams
    grid: GridSettings
    numerics: Numerics
    agreement_band: tuple
    sweep: SweepSettings
    limits: Limits
    density: DensitySettings
    document: dict

    def with_sweep_axis(self, axis):
        document = copy.deepcopy(self.document)
        document['sweep']['axis'] = axis
        return build_config(document)


def _typed(value, default, path):
    if default is None:
        # optional number
        if value is None:
            return None
        return _typed(value, 0.0, path)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError('should be true or false, got %r' % (value,), key_path=path)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError('should be an integer, got %r' % (value,), key_path=path)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError('should be a finite number, got %r' % (value,), key_path=path)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError('should be a string, got %r' % (value,), key_path=path)
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or len(value) != len(default):
            raise ConfigError('should be a list of %d numbers, got %r' % (len(default), value), key_path=path)
        return [_typed(v, d, '%s[%d]' % (path, i)) for i, (v, d) in enumerate(zip(value, default))]
    raise ConfigError('unsupported value %r' % (value,), key_path=path)


def merge_defaults(document):
    '''
    Return the full configuration document: the defaults updated by the document
    '''
    if not isinstance(document, dict):
        raise ConfigError('the configuration should be a JSON object')
    merged = copy.deepcopy(DEFAULTS)
    for section, values in document.items():
        if section not in DEFAULTS:
            raise ConfigError('unknown section', key_path=section)
        if not isinstance(values, dict):
            raise ConfigError('should be an object', key_path=section)
        for key, value in values.items():
            path = '%s.%s' % (section, key)
            if key not in DEFAULTS[section]:
                raise ConfigError('unknown key', key_path=path)
            merged[section][key] = _typed(value, DEFAULTS[section][key], path)
    return merged


def _require(condition, message, path):
    if not condition:
        raise ConfigError(message, key_path=path)


def _positive(document, section, key):
    value = document[section][key]
    _require(value > 0, 'should be positive, got %r' % (value,), '%s.%s' % (section, key))
    return value


def build_config(document):
    '''
    Validate the full configuration document and build the RunConfig
    '''
    document = merge_defaults(document)
    for key in ('hbar', 'mass', 'g', 'g0'):
        _positive(document, 'constants', key)
    k = document['constants']
    _require(k['g_band'][0] < k['g_band'][1], 'should be an increasing pair', 'constants.g_band')
    for key in ('g', 'g0'):
        _require(
            k['g_band'][0] <= k[key] <= k['g_band'][1],
            '%r m/s^2 is outside of the band %r' % (k[key], k['g_band']), 'constants.%s' % key,
        )
    constants = PhysicalConstants(hbar=k['hbar'], m=k['mass'], g=k['g'], g0=k['g0'], g_band=tuple(k['g_band']))

    for key in ('z0_m', 'sigma_v_mps', 'T_s'):
        _positive(document, 'wavepacket', key)
    w = document['wavepacket']
    _require(w['n_events'] >= 1, 'should be at least 1', 'wavepacket.n_events')
    wavepacket = WavepacketParams(z0=w['z0_m'], v0=w['v0_mps'], sigma_v=w['sigma_v_mps'], T=w['T_s'], n_events=w['n_events'])
    sigma_z = wavepacket.sigma_z(constants)
    _require(
        wavepacket.z0 >= SEPARATION_SIGMAS * sigma_z,
        'should be at least %s sigma_z = %.4g m' % (SEPARATION_SIGMAS, SEPARATION_SIGMAS * sigma_z), 'wavepacket.z0_m',
    )

    lim = document['limits']
    for key in ('sigma_v_max_mps', 'z0_max_m'):
        _positive(document, 'limits', key)
    limits = Limits(sigma_v_max=lim['sigma_v_max_mps'], z0_max=lim['z0_max_m'])
    _require(wavepacket.sigma_v <= limits.sigma_v_max, 'exceeds limits.sigma_v_max_mps', 'wavepacket.sigma_v_mps')
    _require(wavepacket.z0 <= limits.z0_max, 'exceeds limits.z0_max_m', 'wavepacket.z0_m')

    gr = document['grid']
    _require(is_power_of_two(gr['n']) and gr['n'] >= MIN_GRID_N, 'should be a power of two >= %d' % MIN_GRID_N, 'grid.n')
    _require(is_power_of_two(gr['momentum_pad']), 'should be a power of two', 'grid.momentum_pad')
    for key in ('halfwidth_sigmas', 'detector_below_m', 'detector_above_m'):
        _positive(document, 'grid', key)
    _require(gr['detector_n'] >= 2, 'should be at least 2', 'grid.detector_n')
    grid = GridSettings(
        n=gr['n'], halfwidth_sigmas=gr['halfwidth_sigmas'], momentum_pad=gr['momentum_pad'],
        detector_below=gr['detector_below_m'], detector_above=gr['detector_above_m'], detector_n=gr['detector_n'],
    )

    nu = document['numerics']
    for key in ('delta_g_rel', 'step_tolerance', 'norm_tolerance', 'support_fraction'):
        _positive(document, 'numerics', key)
    _require(nu['delta_g_rel'] < 0.1, 'should be a small relative step', 'numerics.delta_g_rel')
    _require(0 < nu['agreement_band'][0] < nu['agreement_band'][1], 'should be an increasing positive pair', 'numerics.agreement_band')
    numerics = Numerics(
        delta_g_rel=nu['delta_g_rel'], check_step=nu['check_step'], step_tolerance=nu['step_tolerance'],
        norm_tolerance=nu['norm_tolerance'], support_fraction=nu['support_fraction'],
    )

    sw = document['sweep']
    _require(sw['axis'] in SWEEP_AXES, 'should be one of %s' % ', '.join(SWEEP_AXES), 'sweep.axis')
    low, high = SWEEP_RANGES[sw['axis']]
    if high is None:
        high = limits.sigma_v_max if sw['axis'] == 'sigma_v' else limits.z0_max
    low = low if sw['min'] is None else sw['min']
    high = high if sw['max'] is None else sw['max']
    _require(low > 0, 'should be positive, got %r' % (low,), 'sweep.min')
    _require(low < high, 'should be above sweep.min', 'sweep.max')
    _require(sw['n_points'] >= 1, 'should be at least 1', 'sweep.n_points')
    if sw['axis'] == 'sigma_v':
        _require(high <= limits.sigma_v_max, 'exceeds limits.sigma_v_max_mps', 'sweep.max')
    if sw['axis'] == 'z0':
        _require(high <= limits.z0_max, 'exceeds limits.z0_max_m', 'sweep.max')
        _require(low >= SEPARATION_SIGMAS * sigma_z, 'is too close to the mirror', 'sweep.min')
    sweep = SweepSettings(
        axis=sw['axis'], min=low, max=high, n_points=sw['n_points'], couple_v0=sw['couple_v0'],
        include_reference=sw['include_reference'], with_momentum=sw['with_momentum'],
    )

    de = document['density']
    _positive(document, 'density', 't_max_s')
    _require(de['z_min_m'] < de['z_max_m'], 'should be above density.z_min_m', 'density.z_max_m')
    for key in ('n_times', 'n_z'):
        _require(de[key] >= 2, 'should be at least 2', 'density.%s' % key)
    density = DensitySettings(t_max=de['t_max_s'], n_times=de['n_times'], z_min=de['z_min_m'], z_max=de['z_max_m'], n_z=de['n_z'])

    return RunConfig(
        constants=constants, wavepacket=wavepacket, grid=grid, numerics=numerics,
        agreement_band=tuple(nu['agreement_band']), sweep=sweep, limits=limits, density=density,
        document=document,
    )


def parse_config(text):
    try:
        document = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError('invalid JSON: %s' % e.msg, line=e.lineno, column=e.colno)
    try:
        return build_config(document)
    except ConfigError:
        raise
    except AiryBounceError as e:
        raise ConfigError(str(e))


def load_config(path=None):
    '''
    Load and validate the configuration file; defaults only without a path
    '''
    if path is None:
        return build_config({})
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError('can not read %s: %s' % (path, e.strerror))
    cfg = parse_config(text)
    logger.info("Configuration loaded from %s", path)
    return cfg


def dump_config(cfg):
    '''
    The full configuration document as JSON text
    '''
    return json.dumps(cfg.document, indent=2, sort_keys=True) + '\n'
