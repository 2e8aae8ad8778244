'''
Fisher information on g carried by the detector pattern and the
Cramer-Rao bound on the relative accuracy of the measurement.

The initial wavepacket is prepared before the free fall and does not depend
on g: the derivatives over g keep it fixed in SI units and recompute its
decomposition, the bounce and the propagation. The derivatives are central
differences at the relative steps delta and delta / 2, extrapolated to the
fourth order in delta.
'''
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from airy_bounce.exceptions import DomainError, StepError
from airy_bounce.pipeline import Gravimeter
from airy_bounce.propagation import momentum_gradient
from airy_bounce.semiclassical import gamma

import logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FisherReport:
    i_z: float
    i_p: float
    i_s: float
    cr_relative: float
    n_events: int
    numerics: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            'i_z': self.i_z, 'i_p': self.i_p, 'i_s': self.i_s,
            'cr_relative': self.cr_relative, 'n_events': self.n_events,
            'numerics': dict(self.numerics),
        }


@dataclass(frozen=True)
class MomentumTerms:
    '''
    Split of the momentum-space information: the total, the part of the
    g-derivative of the image wave alone and the part of the propagation alone
    '''
    total: float
    gravity: float
    propagation: float


def _modulus_derivative(psi, derivative):
    # d|psi| = Re(conj(psi) dpsi) / |psi|, zero where psi vanishes
    amplitude = np.abs(psi)
    safe = np.where(amplitude > 0, amplitude, 1.0)
    return np.where(amplitude > 0, np.real(np.conj(psi) * derivative) / safe, 0.0)


def _checked(compute, numerics, what):
    delta = numerics.delta_g_rel
    value = compute(delta)
    if numerics.check_step:
        half = compute(0.5 * delta)
        if abs(value - half) > numerics.step_tolerance * abs(half):
            raise StepError('%s changes from %.6g to %.6g when the step %g is halved' % (what, value, half, delta))
    logger.info("%s = %.6g (relative step %g)", what, value, delta)
    return value


def _g_derivative(gravimeter, delta, wave):
    plus = wave(gravimeter.perturbed(delta))
    minus = wave(gravimeter.perturbed(-delta))
    if plus.n != minus.n or not np.isclose(plus.x_min, minus.x_min, rtol=0, atol=1e-6 * abs(plus.spacing)):
        raise StepError('the perturbed pipelines produced different grids')
    return (np.abs(plus.values) - np.abs(minus.values)) / (2.0 * delta * gravimeter.constants.g)


def _richardson(gravimeter, wave):
    '''
    Derivative over g of |wave| as a function of the relative step delta:
    central differences at delta and delta / 2 extrapolated to the fourth order.
    The perturbed pipelines are shared between the steps.
    '''
    central = {}

    def derivative(delta):
        for step in (delta, 0.5 * delta):
            if step not in central:
                central[step] = _g_derivative(gravimeter, step, wave)
        return (4.0 * central[0.5 * delta] - central[delta]) / 3.0

    return derivative


def position_information(gravimeter):
    '''
    I_Z = (2 g0)^2 integral (d|Psi1(Z, T)|/dg)^2 dZ for the Gravimeter
    '''
    nominal = gravimeter.detector_wave()
    g0 = gravimeter.constants.g0
    derivative_at = _richardson(gravimeter, lambda gm: gm.detector_wave(plan=nominal.plan))

    def compute(delta):
        derivative = derivative_at(delta)
        return (2.0 * g0) ** 2 * float(integrate.trapezoid(derivative ** 2, dx=nominal.spacing))

    return _checked(compute, gravimeter.numerics, 'I_Z')


def momentum_terms(gravimeter):
    '''
    I_p = integral ((2 g0 d/dg + m g0 T d/dp) |Psi1(p, 0)|)^2 dp and its split
    '''
    c = gravimeter.constants
    psi = gravimeter.momentum
    gradient = momentum_gradient(gravimeter.reflected, c, pad=gravimeter.grid.momentum_pad, p_start=psi.x_min)
    d_p = _modulus_derivative(psi.values, gradient.values)
    propagation = c.m * c.g0 * gravimeter.wavepacket.T * d_p
    split = {}
    derivative_at = _richardson(gravimeter, lambda gm: gm.momentum)

    def compute(delta):
        gravity = 2.0 * c.g0 * derivative_at(delta)
        split[delta] = (
            float(integrate.trapezoid(gravity ** 2, dx=psi.spacing)),
            float(integrate.trapezoid(propagation ** 2, dx=psi.spacing)),
        )
        return float(integrate.trapezoid((gravity + propagation) ** 2, dx=psi.spacing))

    total = _checked(compute, gravimeter.numerics, 'I_p')
    gravity, moving = split[gravimeter.numerics.delta_g_rel]
    return MomentumTerms(total=total, gravity=gravity, propagation=moving)


def fisher_position(p, consts, numerics=None, grid=None):
    return position_information(Gravimeter(consts, p, numerics=numerics, grid=grid))


def fisher_momentum(p, consts, numerics=None, grid=None):
    return momentum_terms(Gravimeter(consts, p, numerics=numerics, grid=grid)).total


def fisher_momentum_terms(p, consts, numerics=None, grid=None):
    return momentum_terms(Gravimeter(consts, p, numerics=numerics, grid=grid))


def fisher_simple(p, consts):
    '''
    Closed-form estimate I_S = 2 (m g z0) (m sigma_v^2) T^2 / (3 hbar^2),
    valid with many fringes in the pattern
    '''
    gamma(p.sigma_v, consts)
    return 2.0 * (consts.m * consts.g * p.z0) * (consts.m * p.sigma_v ** 2) * p.T ** 2 / (3.0 * consts.hbar ** 2)


def cramer_rao(i, n_events=1):
    '''
    Relative Cramer-Rao bound sigma_g / g0 = 1 / sqrt(n_events I); infinite when I = 0
    '''
    if not np.isfinite(i) or i < 0:
        raise DomainError('the Fisher information should be finite and non-negative, got %r' % (i,))
    if not np.isfinite(n_events) or int(n_events) != n_events or n_events < 1:
        raise DomainError('n_events should be an integer >= 1, got %r' % (n_events,))
    if i == 0:
        logger.warning("Zero Fisher information: the bound is infinite")
        return float('inf')
    return 1.0 / np.sqrt(n_events * i)


def fisher_report(p, consts, numerics=None, grid=None, with_momentum=True):
    '''
    All the estimates for the wavepacket p; the bound uses I_Z
    '''
    gravimeter = Gravimeter(consts, p, numerics=numerics, grid=grid)
    i_z = position_information(gravimeter)
    i_p = momentum_terms(gravimeter).total if with_momentum else None
    i_s = fisher_simple(p, consts)
    numerics = gravimeter.numerics
    return FisherReport(
        i_z=i_z, i_p=i_p, i_s=i_s,
        cr_relative=float(cramer_rao(i_z, p.n_events)), n_events=p.n_events,
        numerics={'delta_g_rel': numerics.delta_g_rel, 'grid_n': gravimeter.grid.n},
    )
