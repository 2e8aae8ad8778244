'''
Airy functions of real and complex arguments and the mirror reflection phase.

The evaluation is delegated to scipy.special (AMOS and Cephes); this module
adds the domain checks, the overflow policy and the continuous reflection phase.
'''
from dataclasses import dataclass

import numpy as np
from scipy import special

from airy_bounce.exceptions import DomainError, AiryRangeError

import logging
logger = logging.getLogger(__name__)

BI_MAX_ARGUMENT = 100.0
COMPLEX_MAX_IMAG = 1e3


def _finite(x, name='x'):
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise DomainError('%s should be finite' % name)
    return x


def _unwrap_scalar(x, value):
    return value.item() if np.ndim(x) == 0 else value


@dataclass(frozen=True)
class AiryPair:
    '''
    Ai, Bi and their derivatives at a common real argument
    '''
    x: float
    ai: float
    bi: float
    ai_prime: float
    bi_prime: float

    def wronskian(self):
        '''
        Ai Bi' - Ai' Bi, equals 1/pi
        '''
        return self.ai * self.bi_prime - self.ai_prime * self.bi


def airy_pair(x):
    x = _finite(x)
    if np.any(x > BI_MAX_ARGUMENT):
        raise AiryRangeError('Bi overflows for x > %s' % BI_MAX_ARGUMENT)
    ai, aip, bi, bip = special.airy(x.astype(float))
    return AiryPair(
        x=_unwrap_scalar(x, x.astype(float)), ai=_unwrap_scalar(x, ai), bi=_unwrap_scalar(x, bi),
        ai_prime=_unwrap_scalar(x, aip), bi_prime=_unwrap_scalar(x, bip),
    )


def ai_real(x):
    '''
    Ai(x) for real x; underflows gracefully to 0 for large positive x
    '''
    x = _finite(x)
    ai, _, _, _ = special.airy(x.astype(float))
    return _unwrap_scalar(x, ai)


def ai_prime(x):
    x = _finite(x)
    _, aip, _, _ = special.airy(x.astype(float))
    return _unwrap_scalar(x, aip)


def bi_real(x):
    '''
    Bi(x) for real x not above BI_MAX_ARGUMENT; the bounce only needs Bi at
    non-positive reduced energies so larger arguments raise AiryRangeError.
    '''
    x = _finite(x)
    if np.any(x > BI_MAX_ARGUMENT):
        raise AiryRangeError('Bi overflows for x > %s' % BI_MAX_ARGUMENT)
    _, _, bi, _ = special.airy(x.astype(float))
    return _unwrap_scalar(x, bi)


def bi_prime(x):
    x = _finite(x)
    if np.any(x > BI_MAX_ARGUMENT):
        raise AiryRangeError('Bi\' overflows for x > %s' % BI_MAX_ARGUMENT)
    _, _, _, bip = special.airy(x.astype(float))
    return _unwrap_scalar(x, bip)


def ai_complex(w, scaled=False):
    '''
    Ai(w) for complex w.

    With scaled=True returns Ai(w) exp(2/3 w^(3/2)) (principal branch) which stays
    finite where Ai itself overflows or underflows; callers combine the exponent
    in logarithmic form.
    '''
    w = np.asarray(w, dtype=complex)
    if not np.all(np.isfinite(w)):
        raise DomainError('w should be finite')
    if np.any(np.abs(w.imag) > COMPLEX_MAX_IMAG):
        raise DomainError('|Im w| should not exceed %s' % COMPLEX_MAX_IMAG)
    if scaled:
        ai, _, _, _ = special.airye(w)
    else:
        with np.errstate(over='ignore', invalid='ignore'):
            ai, _, _, _ = special.airy(w)
    if not np.all(np.isfinite(ai)):
        raise AiryRangeError('Ai(w) overflows for some of %d arguments' % w.size)
    return _unwrap_scalar(w, ai)


def _wrapped_phase(eps):
    # arg of -(Ai(-eps) - i Bi(-eps)) / (Ai(-eps) + i Bi(-eps)), within (-pi, 3pi)
    shape = np.shape(eps)
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    phase = np.empty_like(eps)
    below = eps <= 0
    if np.any(below):
        # Ai/Bi through the scaled functions, Bi overflows for eps < -100
        x = -eps[below]
        aie, _, bie, _ = special.airye(x)
        zeta = 2.0 / 3.0 * x * np.sqrt(x)
        phase[below] = 2.0 * np.arctan(aie / bie * np.exp(-2.0 * zeta))
    above = ~below
    if np.any(above):
        ai, _, bi, _ = special.airy(-eps[above])
        phase[above] = np.pi - 2.0 * np.arctan2(bi, ai)
    return phase.reshape(shape)


def reflection_phase(eps):
    '''
    Continuous phase 2 pi k(eps) of the mirror reflection amplitude.

    Equals pi/3 at eps=0, tends to 0 for eps -> -inf and follows
    (4/3) eps^(3/2) + pi/2 for large positive eps; the 2 pi branch above
    eps=0 is fixed by that asymptote.
    '''
    eps = _finite(eps, 'eps').astype(float)
    values = np.atleast_1d(eps)
    phase = _wrapped_phase(values)
    above = values > 0
    if np.any(above):
        e = values[above]
        asymptote = np.pi / 2 + 4.0 / 3.0 * e * np.sqrt(e)
        raw = phase[above]
        phase[above] = raw + 2 * np.pi * np.round((asymptote - raw) / (2 * np.pi))
    return _unwrap_scalar(eps, phase.reshape(np.shape(eps)))


def reflection_factor(eps):
    '''
    rho(eps) = -(Ai(-eps) - i Bi(-eps)) / (Ai(-eps) + i Bi(-eps)), unit modulus
    '''
    eps = _finite(eps, 'eps').astype(float)
    return _unwrap_scalar(eps, np.exp(1j * _wrapped_phase(eps)))
