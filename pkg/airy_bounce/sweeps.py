'''
Parameter sweeps of the Fisher information over the time of flight,
the velocity dispersion or the initial altitude.

The points are evaluated by a bounded pool of worker threads and the rows
are returned in the order of the swept values.
'''
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from airy_bounce.exceptions import AiryBounceError, ConfigError
from airy_bounce.fisher import cramer_rao, fisher_simple, momentum_terms, position_information
from airy_bounce.pipeline import Gravimeter
from airy_bounce.semiclassical import optimal_v0

import logging
logger = logging.getLogger(__name__)

THREADS_ENVIRONMENT = 'AIRY_BOUNCE_THREADS'

AXIS_FIELDS = {
    'T': ('T', 'T_s'),
    'sigma_v': ('sigma_v', 'sigma_v_mps'),
    'z0': ('z0', 'z0_m'),
}


@dataclass(frozen=True)
class SweepRow:
    '''
    One point of a sweep; the informations are None for a failed point
    '''
    value: float
    v0: float
    sqrt_i_z: float = None
    sqrt_i_s: float = None
    sqrt_i_p: float = None
    cr_relative: float = None
    status: str = 'ok'

    @property
    def failed(self):
        return self.status != 'ok'


def resolve_threads(threads=None):
    '''
    Number of workers: the explicit value, else the environment, else 1
    '''
    if threads is None:
        value = os.environ.get(THREADS_ENVIRONMENT)
        if not value:
            return 1
        try:
            threads = int(value)
        except ValueError:
            raise ConfigError('should be an integer, got %r' % value, key_path=THREADS_ENVIRONMENT)
    if threads < 1:
        raise ConfigError('should be at least 1, got %r' % threads, key_path='threads')
    return threads


def sweep_values(cfg):
    '''
    The swept values in increasing order, the reference value of the
    wavepacket included when asked for
    '''
    s = cfg.sweep
    values = list(np.linspace(s.min, s.max, s.n_points)) if s.n_points > 1 else [s.min]
    if s.include_reference:
        reference = getattr(cfg.wavepacket, AXIS_FIELDS[s.axis][0])
        if not any(math.isclose(reference, v, rel_tol=1e-9) for v in values):
            values.append(reference)
    return sorted(float(v) for v in values)


def sweep_wavepacket(cfg, value):
    attribute = AXIS_FIELDS[cfg.sweep.axis][0]
    p = replace(cfg.wavepacket, **{attribute: value})
    if cfg.sweep.axis == 'z0' and cfg.sweep.couple_v0:
        p = replace(p, v0=optimal_v0(value, cfg.constants.g))
    return p


def sweep_point(cfg, value):
    '''
    Evaluate one point; numerical and validity failures mark the row failed
    '''
    try:
        p = sweep_wavepacket(cfg, value)
    except AiryBounceError as e:
        logger.warning("Sweep point %s=%g is invalid: %s", cfg.sweep.axis, value, e)
        return SweepRow(value=value, v0=cfg.wavepacket.v0, status='failed')
    try:
        gravimeter = Gravimeter.from_config(cfg, wavepacket=p)
        i_z = position_information(gravimeter)
        i_s = fisher_simple(p, cfg.constants)
        i_p = momentum_terms(gravimeter).total if cfg.sweep.with_momentum else None
        row = SweepRow(
            value=value, v0=p.v0,
            sqrt_i_z=math.sqrt(i_z), sqrt_i_s=math.sqrt(i_s),
            sqrt_i_p=math.sqrt(i_p) if i_p is not None else None,
            cr_relative=float(cramer_rao(i_z, p.n_events)),
        )
    except AiryBounceError as e:
        logger.warning("Sweep point %s=%g failed: %s", cfg.sweep.axis, value, e)
        return SweepRow(value=value, v0=p.v0, status='failed')
    logger.info("Sweep point %s=%g: sqrt(I_Z)=%.6g sqrt(I_S)=%.6g", cfg.sweep.axis, value, row.sqrt_i_z, row.sqrt_i_s)
    return row


def run_sweep(cfg, threads=None):
    '''
    Evaluate every point of the configured sweep
    '''
    values = sweep_values(cfg)
    threads = resolve_threads(threads)
    logger.info("Sweeping %s over %d points with %d threads", cfg.sweep.axis, len(values), threads)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(lambda value: sweep_point(cfg, value), values))


def sweep_header(axis):
    return [AXIS_FIELDS[axis][1], 'v0_mps', 'sqrt_i_z', 'sqrt_i_s', 'sqrt_i_p', 'cr_relative', 'status']


def sweep_record(row):
    return [row.value, row.v0, row.sqrt_i_z, row.sqrt_i_s, row.sqrt_i_p, row.cr_relative, row.status]
