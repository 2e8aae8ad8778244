'''
Energy representation of the bouncing wavepacket.

The initial Gaussian wavepacket is expanded on the continuous Airy basis

    psi_E(z) = Ai((z - E/mg)/l) / sqrt(l e)

where the coefficients c0(E) have a closed form. The bounce on the mirror
multiplies each coefficient by the unit-modulus reflection factor rho(E).
'''
import enum
import math
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np
from scipy import integrate

from airy_bounce.airy import ai_complex, reflection_factor
from airy_bounce.exceptions import DomainError, GridError, UsageError
from airy_bounce.scales import gqs_scales, reduce, check_positive

import logging
logger = logging.getLogger(__name__)

DEFAULT_GRID_N = 2 ** 16
MIN_GRID_N = 2 ** 10
DEFAULT_HALFWIDTH_SIGMAS = 10.0
LOWEST_REDUCED_ENERGY = -20.0
NORM_TOLERANCE = 1e-6
SEPARATION_SIGMAS = 5.0


def is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WavepacketParams:
    '''
    The experiment: mean altitude z0 (m), mean vertical velocity v0 (m/s,
    negative downward), velocity dispersion sigma_v (m/s), time of flight T (s)
    and the number of detected events n_events.

    The position dispersion sigma_z = hbar/(2 m sigma_v) is derived, the wavepacket
    being the minimum-uncertainty Gaussian.
    '''
    z0: float
    v0: float
    sigma_v: float
    T: float
    n_events: int = 1

    def __post_init__(self):
        check_positive('z0', self.z0)
        check_positive('sigma_v', self.sigma_v)
        check_positive('T', self.T)
        if not math.isfinite(self.v0):
            raise DomainError('v0 should be finite, got %r' % (self.v0,))
        if not math.isfinite(self.n_events) or int(self.n_events) != self.n_events or self.n_events < 1:
            raise DomainError('n_events should be an integer >= 1, got %r' % (self.n_events,))

    def sigma_z(self, c):
        return c.hbar / (2.0 * c.m * self.sigma_v)

    def validate(self, c):
        '''
        Check the wavepacket lies well above the mirror
        '''
        sigma_z = self.sigma_z(c)
        if self.z0 < SEPARATION_SIGMAS * sigma_z:
            raise DomainError(
                'z0=%r m should be at least %s sigma_z=%r m above the mirror' % (self.z0, SEPARATION_SIGMAS, sigma_z)
            )
        return self

    def mean_energy(self, c):
        return c.m * c.g * self.z0 + 0.5 * c.m * self.v0 ** 2

    def energy_spread(self, c):
        return c.m * (abs(self.v0) + self.sigma_v) * self.sigma_v + c.m * c.g * self.sigma_z(c)


@dataclass(frozen=True)
class EnergyGrid:
    '''
    Uniform energy grid of n samples from e_min to e_max (J), n being a power of two
    '''
    e_min: float
    e_max: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.e_min) and math.isfinite(self.e_max)) or not self.e_min < self.e_max:
            raise DomainError('energy grid bounds should be finite and increasing, got [%r, %r]' % (self.e_min, self.e_max))
        if int(self.n) != self.n or not is_power_of_two(int(self.n)):
            raise UsageError('energy grid size should be a power of two, got %r' % (self.n,))
        if self.n < MIN_GRID_N:
            raise UsageError('energy grid size should be at least %d, got %d' % (MIN_GRID_N, self.n))

    @property
    def spacing(self):
        return (self.e_max - self.e_min) / (self.n - 1)

    @property
    def energies(self):
        return self.e_min + self.spacing * np.arange(self.n)

    def weights(self):
        '''
        Trapezoid weights of the grid, spacing included
        '''
        w = np.full(self.n, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def scaled(self, factor):
        return EnergyGrid(self.e_min * factor, self.e_max * factor, self.n)

    def resized(self, n):
        return EnergyGrid(self.e_min, self.e_max, n)


class AmplitudeTag(enum.Enum):
    initial = 'initial'
    reflected = 'reflected'


@dataclass(frozen=True)
class EnergyAmplitude:
    '''
    The amplitude c(E) sampled on an energy grid.

    The optional source evaluates the same amplitude at arbitrary energies; it
    is used to resample the amplitude on finer grids for the reference quadratures.
    The momentum_hint (kg m/s) tells around which momentum the wave is located,
    it resolves the periodicity of the momentum grid obtained by FFT.
    '''
    grid: EnergyGrid
    values: np.ndarray
    tag: AmplitudeTag
    source: object = field(default=None, compare=False, repr=False)
    momentum_hint: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.n,):
            raise UsageError('amplitude has %s values for a grid of %d' % (values.shape, self.grid.n))
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def norm(self):
        '''
        Trapezoid integral of |c|^2 over the grid
        '''
        return float(integrate.trapezoid(np.abs(self.values) ** 2, dx=self.grid.spacing))

    def check_norm(self, tolerance=NORM_TOLERANCE):
        norm = self.norm()
        logger.debug("Norm of the %s amplitude on %d samples: %.12g", self.tag.value, self.grid.n, norm)
        if abs(norm - 1.0) > tolerance:
            raise GridError(
                'norm of the %s amplitude is %.9g, the energy grid [%g, %g] J does not capture the wavepacket'
                % (self.tag.value, norm, self.grid.e_min, self.grid.e_max)
            )
        return norm

    def mean_energy(self):
        density = np.abs(self.values) ** 2
        return float(integrate.trapezoid(density * self.grid.energies, dx=self.grid.spacing) /
                     integrate.trapezoid(density, dx=self.grid.spacing))

    def evaluate(self, energies):
        '''
        Evaluate the amplitude at arbitrary energies through the source
        '''
        if self.source is None:
            raise UsageError('the %s amplitude has no source to be evaluated off its grid' % self.tag.value)
        return self.source(np.asarray(energies, dtype=float))

    def resample(self, grid):
        '''
        The same amplitude on another grid
        '''
        return replace(self, grid=grid, values=self.evaluate(grid.energies))


def default_energy_grid(p, c, n=DEFAULT_GRID_N, halfwidth_sigmas=DEFAULT_HALFWIDTH_SIGMAS):
    '''
    Grid centered on the classical energy of the wavepacket, halfwidth_sigmas
    energy spreads on each side, clipped from below at -20 e_gqs.
    '''
    s = gqs_scales(c)
    mean = p.mean_energy(c)
    spread = p.energy_spread(c)
    e_min = max(mean - halfwidth_sigmas * spread, LOWEST_REDUCED_ENERGY * s.e_gqs)
    e_max = mean + halfwidth_sigmas * spread
    grid = EnergyGrid(e_min, e_max, n)
    logger.debug("Energy grid: [%g, %g] e_gqs, %d samples", e_min / s.e_gqs, e_max / s.e_gqs, n)
    return grid


def _initial_values(p, c, energies):
    s = gqs_scales(c)
    zeta0, eps, nu0 = reduce(p.z0, energies, p.v0, s)
    sigma = p.sigma_z(c) / s.l_gqs
    s2 = sigma ** 2
    w = zeta0 - eps + s2 * (1j * nu0 + s2)
    # Ai(w) = airye(w) exp(-2/3 w^(3/2)), the exponents are combined before exponentiation
    exponent = -2.0 / 3.0 * w * np.sqrt(w) + s2 * (zeta0 - eps - nu0 ** 2 / 4.0 + s2 * (1j * nu0 + 2.0 * s2 / 3.0))
    prefactor = (8.0 * np.pi) ** 0.25 * math.sqrt(sigma / s.e_gqs)
    scaled = ai_complex(w, scaled=True)
    return prefactor * scaled * np.exp(exponent)


def initial_amplitude(p, c, grid, tolerance=NORM_TOLERANCE):
    '''
    Closed-form coefficients c0(E) of the initial Gaussian wavepacket
    on the Airy basis, checked to be normalized on the grid.
    '''
    p.validate(c)
    source = partial(_initial_values, p, c)
    c0 = EnergyAmplitude(grid, source(grid.energies), AmplitudeTag.initial, source=source, momentum_hint=c.m * p.v0)
    if tolerance is not None:
        c0.check_norm(tolerance)
    return c0


def reflection_amplitude(E, c):
    '''
    Reflection factor of the mirror rho(E), |rho| = 1
    '''
    s = gqs_scales(c)
    return reflection_factor(np.divide(E, s.e_gqs))


def _reflected_values(source, c, energies):
    return reflection_amplitude(energies, c) * source(energies)


def bounce(c0, c):
    '''
    Scatter the initial amplitude on the mirror: c1(E) = rho(E) c0(E)
    '''
    if c0.tag is not AmplitudeTag.initial:
        raise UsageError('bounce expects an initial amplitude, got a %s one' % c0.tag.value)
    source = partial(_reflected_values, c0.source, c) if c0.source is not None else None
    # the reflected packet leaves the mirror with 2 v_b + v0, v_b the speed at the mirror
    v_bounce = math.sqrt(max(2.0 * c0.mean_energy() / c.m, 0.0))
    hint = c0.momentum_hint + 2.0 * c.m * v_bounce
    return EnergyAmplitude(
        c0.grid, reflection_amplitude(c0.grid.energies, c) * c0.values, AmplitudeTag.reflected,
        source=source, momentum_hint=hint,
    )


def gaussian_state(z, p, c):
    '''
    The initial wavepacket Psi0(z) in position representation,
    with the phase convention matching the closed-form c0(E).
    '''
    z = np.asarray(z, dtype=float)
    sigma_z = p.sigma_z(c)
    return (2.0 * np.pi * sigma_z ** 2) ** -0.25 * np.exp(
        -(z - p.z0) ** 2 / (4.0 * sigma_z ** 2) + 1j * c.m * p.v0 * (z - p.z0) / c.hbar
    )
