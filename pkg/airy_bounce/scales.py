'''
Physical constants and the natural scales of the quantum bouncer.

All the public interfaces of the package take SI units. The gravitational
quantum states (GQS) scales defined here are only used internally to
reduce positions, energies and velocities to dimensionless numbers.
'''
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as codata

from airy_bounce.exceptions import DomainError

import logging
logger = logging.getLogger(__name__)

HYDROGEN_MASS = 1.6735575e-27
LOCAL_GRAVITY = 9.81
G_BAND = (1.0, 100.0)


def check_positive(name, value):
    '''
    Raise DomainError unless the value is a finite positive number
    '''
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise DomainError('%s should be a number, got %r' % (name, value))
    if not math.isfinite(value) or value <= 0:
        raise DomainError('%s should be finite and positive, got %r' % (name, value))
    return value


@dataclass(frozen=True)
class PhysicalConstants:
    '''
    The constants of the problem: reduced Planck constant, the mass of the particle,
    the local free-fall acceleration g and the reference acceleration g0 used
    to express the relative accuracy.

    Both g and g0 are checked against the g_band to catch unit mistakes.
    '''
    hbar: float = codata.hbar
    m: float = HYDROGEN_MASS
    g: float = LOCAL_GRAVITY
    g0: float = codata.g
    g_band: tuple = G_BAND

    def __post_init__(self):
        for name in ('hbar', 'm', 'g', 'g0'):
            object.__setattr__(self, name, check_positive(name, getattr(self, name)))
        low, high = self.g_band
        if not low < high:
            raise DomainError('g_band should be an increasing pair, got %r' % (self.g_band,))
        for name in ('g', 'g0'):
            value = getattr(self, name)
            if not low <= value <= high:
                raise DomainError('%s=%r m/s^2 is outside of the band [%s, %s]' % (name, value, low, high))

    def with_g(self, g):
        '''
        Return a copy with another local acceleration
        '''
        return replace(self, g=g)


@dataclass(frozen=True)
class GqsScales:
    '''
    Length, energy and time scales of the quantum bouncer for the given mass and g.
    '''
    l_gqs: float
    e_gqs: float
    t_gqs: float

    @property
    def v_gqs(self):
        '''
        Velocity unit l_gqs/t_gqs
        '''
        return self.l_gqs / self.t_gqs


def gqs_scales(c):
    '''
    Natural scales for the constants c:

        l = (hbar^2 / (2 g m^2))^(1/3), e = m g l, t = hbar / e
    '''
    for name in ('hbar', 'm', 'g'):
        check_positive(name, getattr(c, name))
    l_gqs = float(np.cbrt(c.hbar ** 2 / (2.0 * c.g * c.m ** 2)))
    e_gqs = c.m * c.g * l_gqs
    t_gqs = c.hbar / e_gqs
    return GqsScales(l_gqs=l_gqs, e_gqs=e_gqs, t_gqs=t_gqs)


def reduce(z, E, v, s):
    '''
    Reduce the position z, energy E and velocity v to the dimensionless
    (zeta, eps, nu) using the scales s. Accepts scalars or arrays.
    '''
    zeta = np.divide(z, s.l_gqs)
    eps = np.divide(E, s.e_gqs)
    nu = np.multiply(v, s.t_gqs / s.l_gqs)
    return zeta, eps, nu
