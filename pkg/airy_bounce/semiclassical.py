'''
Classical paths of the bounce and the uniform Airy models of the fringes.

A classical path starting at z0 at t=0, bouncing at t_b and reaching the
detector position Z at T satisfies

    -z0 (T - t_b) + Z t_b + g t_b (T - t_b) (T/2 - t_b) = 0

which reduces, with s = t_b - T/2, to the depressed cubic

    s^3 - (3 lambda / 2g) s - T mu / 2g = 0,
    L = g T^2 / 2, lambda = (L - 2 (Z + z0)) / 3, mu = z0 - Z

The two physical paths merge at the branchpoint where D = lambda^3 - L mu^2
vanishes; no classical path reaches the detector below it.
'''
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from airy_bounce.airy import ai_real
from airy_bounce.exceptions import ModelDomainError, ModelValidityError
from airy_bounce.scales import check_positive

import logging
logger = logging.getLogger(__name__)

GAMMA_MIN = 10.0
GAMMA_WARNING = 30.0
DOUBLE_ROOT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CubicCoeffs:
    '''
    Coefficients of the reduced bounce-time cubic (m)
    '''
    L: float
    lam: float
    mu: float

    @classmethod
    def from_geometry(cls, z0, Z, T, g):
        L = 0.5 * g * T ** 2
        return cls(L=L, lam=(L - 2.0 * (Z + z0)) / 3.0, mu=z0 - Z)


def discriminant(coeffs):
    '''
    D = lambda^3 - L mu^2 (m^3): positive with two physical paths,
    zero at the branchpoint, negative where no classical path arrives
    '''
    return coeffs.lam ** 3 - coeffs.L * coeffs.mu ** 2


def bounce_residual(t_b, z0, Z, T, g):
    t_b = np.asarray(t_b, dtype=float)
    return -z0 * (T - t_b) + Z * t_b + g * t_b * (T - t_b) * (0.5 * T - t_b)


def _residual_slope(t_b, z0, Z, T, g):
    return z0 + Z + g * ((T - t_b) * (0.5 * T - t_b) - t_b * (0.5 * T - t_b) - t_b * (T - t_b))


def bounce_times(z0, Z, T, g):
    '''
    Bounce times 0 < t_b < T of the classical paths from z0 to Z, sorted.

    Returns two roots when D > 0, the double root once at the branchpoint
    and an empty list in the classically forbidden region.
    '''
    check_positive('z0', z0)
    check_positive('T', T)
    coeffs = CubicCoeffs.from_geometry(z0, Z, T, g)
    D = discriminant(coeffs)
    p = -1.5 * coeffs.lam / g
    q = -0.5 * T * coeffs.mu / g
    double = abs(D) <= DOUBLE_ROOT_TOLERANCE * coeffs.L ** 3
    if double:
        if p == 0:
            roots = [0.0]
        else:
            roots = [3.0 * q / p, -1.5 * q / p]
    elif D > 0:
        r = 2.0 * math.sqrt(-p / 3.0)
        argument = max(-1.0, min(1.0, coeffs.mu * math.sqrt(coeffs.L) / coeffs.lam ** 1.5))
        theta = math.acos(argument) / 3.0
        roots = [r * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    else:
        root = math.sqrt((0.5 * q) ** 2 + (p / 3.0) ** 3)
        roots = [float(np.cbrt(-0.5 * q + root) + np.cbrt(-0.5 * q - root))]
    times = []
    for s in roots:
        t_b = s + 0.5 * T
        if not double:
            slope = _residual_slope(t_b, z0, Z, T, g)
            if slope != 0:
                t_b -= float(bounce_residual(t_b, z0, Z, T, g)) / slope
        if 0 < t_b < T:
            times.append(t_b)
    if double:
        times = sorted(set(times))
    return sorted(times)


@dataclass(frozen=True)
class ClassicalPath:
    '''
    Free fall from z0 at t=0 onto the mirror at t_b, then from the mirror
    with the reflected velocity v1
    '''
    z0: float
    t_b: float
    g: float

    @property
    def v0(self):
        return 0.5 * self.g * self.t_b - self.z0 / self.t_b

    @property
    def v1(self):
        return 0.5 * self.g * self.t_b + self.z0 / self.t_b

    def altitude(self, t):
        t = np.asarray(t, dtype=float)
        tau = t - self.t_b
        before = self.z0 + self.v0 * t - 0.5 * self.g * t ** 2
        after = self.v1 * tau - 0.5 * self.g * tau ** 2
        return np.where(tau < 0, before, after)


def classical_paths(z0, Z, T, g):
    '''
    The classical paths reaching Z at T, in the order of their bounce times
    '''
    return [ClassicalPath(z0=z0, t_b=t_b, g=g) for t_b in bounce_times(z0, Z, T, g)]


@dataclass(frozen=True)
class BranchpointData:
    '''
    The branchpoint of the detector positions: the estimate Z_c = -L + v_c T + z_c
    with v_c = sqrt(6 g z0) and z_c = -5 z0 / 3, and the exact root Z_c_exact of D
    '''
    Z_c: float
    v_c: float
    z_c: float
    Z_c_exact: float = None


def branchpoint_estimate(z0, T, g):
    v_c = math.sqrt(6.0 * g * z0)
    z_c = -5.0 * z0 / 3.0
    return -0.5 * g * T ** 2 + v_c * T + z_c, v_c, z_c


def discriminant_polynomial(z0, T, g):
    '''
    D as a polynomial of the detector position Z
    '''
    L = 0.5 * g * T ** 2
    lam = Polynomial([(L - 2.0 * z0) / 3.0, -2.0 / 3.0])
    mu = Polynomial([z0, -1.0])
    return lam ** 3 - L * mu ** 2


def branchpoint(z0, T, g):
    check_positive('z0', z0)
    check_positive('T', T)
    check_positive('g', g)
    Z_c, v_c, z_c = branchpoint_estimate(z0, T, g)
    D = discriminant_polynomial(z0, T, g)
    roots = D.roots()
    real = roots[np.abs(roots.imag) <= 1e-9 * max(1.0, np.abs(roots).max())].real
    exact = float(real[np.argmin(np.abs(real - Z_c))])
    slope = D.deriv()
    for _ in range(3):
        if slope(exact) != 0:
            exact -= D(exact) / slope(exact)
    logger.debug("Branchpoint for z0=%g m, T=%g s: estimate %.9g m, exact %.9g m", z0, T, Z_c, exact)
    return BranchpointData(Z_c=Z_c, v_c=v_c, z_c=z_c, Z_c_exact=exact)


def check_gamma(gamma):
    if gamma < GAMMA_MIN:
        raise ModelValidityError('gamma=%.4g is below %s, the pattern has too few fringes for the model' % (gamma, GAMMA_MIN))
    if gamma < GAMMA_WARNING:
        logger.warning("gamma=%.4g is below %s, the uniform Airy model is approximate", gamma, GAMMA_WARNING)
    return gamma


def gamma(sigma_v, consts):
    '''
    Number of fringes of the pattern: (3 m / (hbar g))^(2/3) sigma_v^2
    '''
    check_positive('sigma_v', sigma_v)
    return check_gamma((3.0 * consts.m / (consts.hbar * consts.g)) ** (2.0 / 3.0) * sigma_v ** 2)


def optimal_v0(z0, g):
    '''
    Initial velocity giving the best fringe contrast in the far-field limit;
    the mean kinetic energy is then a third of the mean potential energy
    '''
    check_positive('z0', z0)
    check_positive('g', g)
    return -math.sqrt(6.0 * g * z0) / 3.0


class UniformAiryModel(object):
    '''
    The UniformAiryModel is a base class for the uniform Airy approximation
    of the fringes across the branchpoint

        |Psi(x)| = (8 pi / gamma)^(1/4) sqrt(dDelta/dx) |Ai(-Delta(x))| exp(-Delta(x) / gamma)

    Subclasses define the delta(x) method returning the pair (Delta, dDelta/dx)
    for an array of coordinates x.
    '''
    def __init__(self, gamma):
        self.gamma = check_gamma(gamma)

    def delta(self, x):
        raise NotImplementedError()

    def amplitude(self, x):
        delta, slope = self.delta(np.asarray(x, dtype=float))
        if np.any(slope <= 0):
            raise ModelDomainError('%s: dDelta/dx is not positive over the grid' % type(self).__name__)
        return (8.0 * np.pi / self.gamma) ** 0.25 * np.sqrt(slope) * np.abs(ai_real(-delta)) * np.exp(-delta / self.gamma)

    def density(self, x):
        return self.amplitude(x) ** 2


class PatternModel(UniformAiryModel):
    '''
    Model of the detector pattern |Psi1(Z, T)| with

        Delta(Z) = m^(2/3) D / (2 hbar T sqrt(3 L) lambda mu)^(2/3)
    '''
    def __init__(self, z0, T, consts, gamma):
        super(PatternModel, self).__init__(gamma)
        self.z0 = check_positive('z0', z0)
        self.T = check_positive('T', T)
        self.consts = consts
        L = 0.5 * consts.g * T ** 2
        self.factor = consts.m ** (2.0 / 3.0) / (2.0 * consts.hbar * T * math.sqrt(3.0 * L)) ** (2.0 / 3.0)

    def delta(self, Z):
        coeffs = CubicCoeffs.from_geometry(self.z0, Z, self.T, self.consts.g)
        lam, mu, L = coeffs.lam, coeffs.mu, coeffs.L
        if np.any(lam <= 0) or np.any(mu <= 0):
            raise ModelDomainError('lambda and mu should be positive over the detector grid')
        D = discriminant(coeffs)
        product = lam * mu
        d_D = -2.0 * lam ** 2 + 2.0 * L * mu
        d_product = -2.0 / 3.0 * mu - lam
        delta = self.factor * D * product ** (-2.0 / 3.0)
        slope = self.factor * (d_D * product ** (-2.0 / 3.0) - 2.0 / 3.0 * D * product ** (-5.0 / 3.0) * d_product)
        return delta, slope


class FarFieldModel(UniformAiryModel):
    '''
    Model of the velocity distribution of the image wave |Psi1(v1, 0)| with

        Delta(v1) = m^(2/3) (v1^2 - v_c^2) / (9 hbar g)^(2/3)

    normalized over the velocity v1 (m/s).
    '''
    def __init__(self, z0, consts, gamma):
        super(FarFieldModel, self).__init__(gamma)
        self.z0 = check_positive('z0', z0)
        self.consts = consts
        self.v_c = math.sqrt(6.0 * consts.g * z0)
        self.factor = consts.m ** (2.0 / 3.0) / (9.0 * consts.hbar * consts.g) ** (2.0 / 3.0)

    def delta(self, v1):
        if np.any(v1 <= 0):
            raise ModelDomainError('the far-field model is defined for positive velocities only')
        return self.factor * (v1 ** 2 - self.v_c ** 2), 2.0 * self.factor * v1


@dataclass(frozen=True)
class ModelParams:
    '''
    Parameters of the uniform Airy models: the fringe count gamma, the
    initial altitude z0 and, for the detector pattern, the time of flight T
    '''
    gamma: float
    z0: float
    T: float = None

    @classmethod
    def from_wavepacket(cls, p, consts):
        return cls(gamma=gamma(p.sigma_v, consts), z0=p.z0, T=p.T)

    def pattern_model(self, consts):
        return PatternModel(self.z0, self.T, consts, self.gamma)

    def farfield_model(self, consts):
        return FarFieldModel(self.z0, consts, self.gamma)


def model_pattern(Z_grid, params, consts):
    '''
    Uniform Airy model of |Psi1(Z, T)| on the detector positions Z_grid
    '''
    return params.pattern_model(consts).amplitude(Z_grid)


def model_farfield(v1_grid, params, consts):
    '''
    Uniform Airy model of |Psi1(v1, 0)| in velocity normalization
    '''
    return params.farfield_model(consts).amplitude(v1_grid)
