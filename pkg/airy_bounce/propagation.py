'''
Position and momentum representations of the bouncing wave.

The production path turns the energy amplitude into the momentum wave at t=0
with one FFT over the energy grid, then propagates it to the detector with
a second FFT. The reference path computes the same quantities by direct
quadrature over a refined energy grid and is used to validate the phase
conventions of the production path.

Two propagation methods are available, both exact for the free fall:

- transfer: momentum-space free-fall evolution followed by the Fourier
  transform to positions, suited for short times;
- fresnel: the image wave at t=0 in positions, multiplied by the chirp
  exp(i m y^2 / (2 hbar T)), transformed to momenta which map onto the
  detector positions, suited for long times of flight.

The method and the window offsets are chosen from the local positions of the
wave (phase increments between neighbour samples) and recorded in a
PropagationPlan, so that the same grids may be reproduced for another g.
'''
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft, integrate, interpolate, ndimage, signal

from airy_bounce.airy import ai_real
from airy_bounce.energy import AmplitudeTag, is_power_of_two
from airy_bounce.exceptions import GridError, ResolutionError, UsageError, WindowError
from airy_bounce.scales import gqs_scales, check_positive
from airy_bounce.semiclassical import branchpoint_estimate

import logging
logger = logging.getLogger(__name__)

DEFAULT_PAD = 8
NORM_TOLERANCE = 1e-5
SUPPORT_FRACTION = 1e-8
WINDOW_LEAK = 1e-6
DIRECT_REFINE = 4
DIRECT_CHUNK = 2 ** 22


class Axis(enum.Enum):
    position = 'position'
    momentum = 'momentum'


class Method(enum.Enum):
    transfer = 'transfer'
    fresnel = 'fresnel'


@dataclass(frozen=True)
class PropagationPlan:
    '''
    How a detector wave has been computed: the method, the first detector
    position of the output grid and, for the fresnel method, the first
    position of the intermediate image grid.
    '''
    method: Method
    start: float
    image_start: float = None


@dataclass(frozen=True)
class GriddedWavefunction:
    '''
    A wave sampled on a uniform grid of n points from x_min to x_max,
    in position (m) or momentum (kg m/s) representation, at a given time.
    '''
    axis: Axis
    x_min: float
    x_max: float
    n: int
    time: float
    values: np.ndarray
    plan: PropagationPlan = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if self.n < 2 or values.shape != (self.n,):
            raise UsageError('a gridded wave needs n >= 2 values, got %s for n=%r' % (values.shape, self.n))
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def coordinates(self):
        return self.x_min + self.spacing * np.arange(self.n)

    def density(self):
        return np.abs(self.values) ** 2

    def norm(self):
        return float(integrate.trapezoid(self.density(), dx=self.spacing))

    def check_norm(self, tolerance=NORM_TOLERANCE):
        norm = self.norm()
        logger.debug("Norm of the %s wave at t=%g s: %.12g", self.axis.value, self.time, norm)
        if abs(norm - 1.0) > tolerance:
            raise GridError('norm of the %s wave at t=%g s is %.9g' % (self.axis.value, self.time, norm))
        return norm

    def _interpolate(self, x, values, fill):
        x = np.asarray(x, dtype=float)
        dx = self.spacing
        slack = 1e-9 * abs(dx)
        inside = (x >= self.x_min - slack) & (x <= self.x_max + slack)
        if fill is None and not np.all(inside):
            raise WindowError(
                'coordinates [%g, %g] are outside of the %s grid [%g, %g]'
                % (x.min(), x.max(), self.axis.value, self.x_min, self.x_max)
            )
        out = np.full(x.shape, 0 if fill is None else fill, dtype=values.dtype)
        if np.any(inside):
            xs = np.clip(x[inside], self.x_min, self.x_max)
            lo = max(int(np.floor((xs.min() - self.x_min) / dx)) - 4, 0)
            hi = min(int(np.ceil((xs.max() - self.x_min) / dx)) + 5, self.n)
            lo = max(min(lo, self.n - 4), 0)
            coords = self.x_min + dx * np.arange(lo, hi)
            out[inside] = interpolate.CubicSpline(coords, values[lo:hi])(xs)
        return out

    def sample_density(self, x, fill=None):
        '''
        Interpolate |psi|^2 at the coordinates x with cubic splines. Only the
        envelope and the fringes need to be resolved, not the carrier.
        Coordinates outside of the grid raise WindowError unless a fill value is given.
        '''
        return np.maximum(self._interpolate(x, self.density(), fill), 0.0)


def _local_rate(values, spacing):
    # phase slope between neighbours and the weights |psi_k psi_k+1|
    product = values[1:] * np.conj(values[:-1])
    return np.angle(product) / spacing, np.abs(product)


def _weighted_span(x, weight, fraction):
    order = np.argsort(x)
    cumulative = np.cumsum(weight[order])
    total = cumulative[-1]
    if total <= 0:
        raise ResolutionError('the wave vanishes on its grid')
    xs = x[order]
    lo = xs[min(np.searchsorted(cumulative, fraction * total), xs.size - 1)]
    hi = xs[min(np.searchsorted(cumulative, (1.0 - fraction) * total), xs.size - 1)]
    return lo, hi


def _place_window(x, weight, period, start, fraction, what):
    '''
    Return the start of a window of the given period holding the local
    positions x of the wave. A prescribed start is kept unless more than
    WINDOW_LEAK of the weight falls outside of its window.
    '''
    if start is None:
        lo, hi = _weighted_span(x, weight, fraction)
        if hi - lo > period:
            raise ResolutionError('%s spans %g while the grid period is %g' % (what, hi - lo, period))
        return 0.5 * (lo + hi) - 0.5 * period
    total = weight.sum()
    if total <= 0:
        raise ResolutionError('the wave vanishes on its grid')
    # the tails carry phase noise, only the weight outside of the window counts
    outside = weight[(x < start) | (x > start + period)].sum() / total
    if outside > WINDOW_LEAK:
        raise ResolutionError(
            '%s leaks %.3g of its weight out of the prescribed window [%g, %g]' % (what, outside, start, start + period)
        )
    return start


def _band_start(power, hint_index):
    # the quietest stretch of the periodic spectrum separates two copies of the band
    n = power.size
    smoothed = ndimage.uniform_filter1d(power, size=max(n // 256, 1), mode='wrap')
    gap = int(np.argmin(smoothed))
    centre = gap + 0.5 * n
    return gap + n * int(np.round((hint_index - centre) / n))


def _momentum_transform(c, consts, pad, p_start, energy_weighted):
    grid = c.grid
    if not is_power_of_two(grid.n) or not is_power_of_two(pad):
        raise UsageError('the energy grid size %r and the padding %r should be powers of two' % (grid.n, pad))
    n = grid.n * pad
    scale = consts.hbar * consts.m * consts.g
    dk = 2.0 * np.pi / (n * grid.spacing)
    weighted = c.values * grid.weights()
    if p_start is None:
        power = np.abs(fft.fft(weighted, n)) ** 2
        kappa0 = _band_start(power, c.momentum_hint / scale / dk) * dk
    else:
        kappa0 = p_start / scale
    modulated = weighted * np.exp(-1j * kappa0 * grid.spacing * np.arange(grid.n))
    if energy_weighted:
        modulated = modulated * (-1j * grid.energies)
    kappa = kappa0 + dk * np.arange(n)
    transformed = np.exp(-1j * kappa * grid.e_min) * fft.fft(modulated, n)
    p = scale * kappa
    cubic = np.exp(1j * p ** 3 / (6.0 * consts.hbar * consts.m ** 2 * consts.g))
    return p, cubic, transformed / math.sqrt(2.0 * np.pi * scale)


def momentum_wave(c, consts, pad=DEFAULT_PAD, p_start=None, norm_tolerance=NORM_TOLERANCE):
    '''
    Momentum wave at t=0 from the energy amplitude:

        Psi(p) = exp(i p^3 / (6 hbar m^2 g)) / sqrt(2 pi hbar m g) * C(p / (hbar m g))

    where C(k) is the Fourier transform of c(E) with exp(-i k E), computed by FFT
    on the energy grid zero-padded pad times. The momentum grid spacing is
    2 pi hbar m g / (pad n dE). The window of the periodic FFT result is placed
    on the band nearest to the momentum hint of the amplitude, or at p_start.
    '''
    p, cubic, transformed = _momentum_transform(c, consts, pad, p_start, energy_weighted=False)
    psi = GriddedWavefunction(Axis.momentum, p[0], p[-1], p.size, 0.0, cubic * transformed)
    logger.info(
        "Momentum wave of the %s amplitude: %d samples, velocities [%.6g, %.6g] m/s",
        c.tag.value, p.size, p[0] / consts.m, p[-1] / consts.m,
    )
    if norm_tolerance is not None:
        psi.check_norm(norm_tolerance)
    return psi


def image_momentum(c1, consts, pad=DEFAULT_PAD, p_start=None, norm_tolerance=NORM_TOLERANCE):
    '''
    Momentum wave of the reflected amplitude, the image wave at t=0
    '''
    if c1.tag is not AmplitudeTag.reflected:
        raise UsageError('image_momentum expects a reflected amplitude, got a %s one' % c1.tag.value)
    return momentum_wave(c1, consts, pad=pad, p_start=p_start, norm_tolerance=norm_tolerance)


def momentum_gradient(c, consts, pad=DEFAULT_PAD, p_start=None):
    '''
    Derivative of the momentum wave over p on the same grid as momentum_wave,
    from the transform of -i E c(E) and the derivative of the cubic phase.
    '''
    p, cubic, transformed = _momentum_transform(c, consts, pad, p_start, energy_weighted=False)
    _, _, derived = _momentum_transform(c, consts, pad, p[0], energy_weighted=True)
    scale = consts.hbar * consts.m * consts.g
    values = cubic * (1j * p ** 2 / (2.0 * consts.hbar * consts.m ** 2 * consts.g) * transformed + derived / scale)
    return GriddedWavefunction(Axis.momentum, p[0], p[-1], p.size, 0.0, values)


def momentum_wave_direct(c, p_values, consts, refine=DIRECT_REFINE):
    '''
    Reference momentum wave at the momenta p_values by direct quadrature
    of the energy integral on a grid refined refine times.
    '''
    fine = c.resample(c.grid.resized(c.grid.n * refine)) if refine > 1 else c
    energies = fine.grid.energies
    weighted = fine.values * fine.grid.weights()
    scale = consts.hbar * consts.m * consts.g
    p_values = np.atleast_1d(np.asarray(p_values, dtype=float))
    out = np.empty(p_values.shape, dtype=complex)
    for i, p in enumerate(p_values):
        transformed = np.sum(weighted * np.exp(-1j * (p / scale) * energies))
        out[i] = np.exp(1j * p ** 3 / (6.0 * consts.hbar * consts.m ** 2 * consts.g)) * transformed / math.sqrt(2.0 * np.pi * scale)
    return out


def position_wave_direct(c, t, z_grid, consts, check_resolution=True, norm_tolerance=None):
    '''
    Reference position wave at time t:

        Psi(z, t) = integral c(E) psi_E(z) exp(-i E t / hbar) dE

    by trapezoid quadrature. The integrand oscillates faster with t and with
    the distance below the turning point; when the grid does not resolve it
    the amplitude is resampled on a finer grid, which needs its source.
    '''
    z = np.asarray(z_grid, dtype=float)
    if z.ndim != 1 or z.size < 2:
        raise UsageError('z_grid should be a 1-d array of at least 2 points')
    steps = np.diff(z)
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
        raise UsageError('z_grid should be uniform')
    s = gqs_scales(consts)
    grid = c.grid
    zeta = z / s.l_gqs
    eps_max = grid.e_max / s.e_gqs
    d_eps = grid.spacing / s.e_gqs
    hint = abs(c.momentum_hint) / (consts.hbar * consts.m * consts.g) * s.e_gqs
    omega = abs(t) / s.t_gqs + math.sqrt(max(eps_max - zeta.min(), 0.0)) + hint
    # two samples per half period of the fastest phase of the integrand
    required = np.pi / (2.0 * omega)
    if d_eps > required and check_resolution:
        if c.source is None:
            raise ResolutionError('energy step %.4g e_gqs is above %.4g e_gqs needed at t=%g s' % (d_eps, required, t))
        n = 1 << int(math.ceil(math.log2((eps_max - grid.e_min / s.e_gqs) / required + 1)))
        logger.debug("Direct quadrature at t=%g s resamples the amplitude on %d energies", t, n)
        c = c.resample(grid.resized(n))
        grid = c.grid
    eps = grid.energies / s.e_gqs
    weighted = c.values * grid.weights() * np.exp(-1j * grid.energies * t / consts.hbar)
    values = np.empty(z.size, dtype=complex)
    rows = max(1, DIRECT_CHUNK // grid.n)
    for i in range(0, z.size, rows):
        block = zeta[i:i + rows]
        values[i:i + rows] = ai_real(block[:, None] - eps[None, :]) @ weighted
    values /= math.sqrt(s.l_gqs * s.e_gqs)
    psi = GriddedWavefunction(Axis.position, z[0], z[-1], z.size, t, values)
    if norm_tolerance is not None:
        psi.check_norm(norm_tolerance)
    return psi


def _fourier_to_positions(psi_p, hbar, x_start):
    # (2 pi hbar)^-1/2 sum_k psi_k exp(i q_k x_l / hbar) dq on the conjugate grid from x_start
    n, dq, q0 = psi_p.n, psi_p.spacing, psi_p.x_min
    k = np.arange(n)
    summed = n * fft.ifft(psi_p.values * np.exp(1j * k * dq * x_start / hbar))
    x = x_start + 2.0 * np.pi * hbar / (n * dq) * k
    return x, dq / math.sqrt(2.0 * np.pi * hbar) * np.exp(1j * q0 * x / hbar) * summed


def image_position(psi_p, consts, start=None, support_fraction=SUPPORT_FRACTION):
    '''
    Position wave at t=0 from a momentum wave at t=0. For the image wave this
    is the packet below the mirror which the reflected wave seems to come from.
    '''
    if psi_p.axis is not Axis.momentum:
        raise UsageError('image_position expects a momentum wave')
    hbar = consts.hbar
    period = 2.0 * np.pi * hbar / psi_p.spacing
    rate, weight = _local_rate(psi_p.values, psi_p.spacing)
    x_start = _place_window(-hbar * rate, weight, period, start, support_fraction, 'the position support')
    x, values = _fourier_to_positions(psi_p, hbar, x_start)
    return GriddedWavefunction(Axis.position, x[0], x[-1], x.size, psi_p.time, values)


def _transfer(psi_p, T, consts, start, support_fraction):
    hbar, m, g = consts.hbar, consts.m, consts.g
    q = psi_p.coordinates
    dq = psi_p.spacing
    period = 2.0 * np.pi * hbar / dq
    rate, weight = _local_rate(psi_p.values, dq)
    # free flight moves a packet of local momentum q by T q / m
    local = T * 0.5 * (q[1:] + q[:-1]) / m - hbar * rate
    fall = 0.5 * g * T ** 2
    x_start = _place_window(local, weight, period, None if start is None else start + fall, support_fraction, 'the free-flight support')
    evolved = GriddedWavefunction(
        Axis.momentum, psi_p.x_min, psi_p.x_max, psi_p.n, 0.0,
        psi_p.values * np.exp(-1j * T * q ** 2 / (2.0 * m * hbar)),
    )
    x, values = _fourier_to_positions(evolved, hbar, x_start)
    z = x - fall
    values = values * np.exp(-1j * (m * g * T * z + m * g ** 2 * T ** 3 / 6.0) / hbar)
    return z, values, PropagationPlan(Method.transfer, float(z[0]))


def _fresnel(psi_p, T, consts, start, image_start, support_fraction):
    hbar, m, g = consts.hbar, consts.m, consts.g
    image = image_position(psi_p, consts, start=image_start, support_fraction=support_fraction)
    y = image.coordinates
    dy = image.spacing
    chirp = m * y ** 2 / (2.0 * hbar * T)
    step = np.diff(chirp)
    rate, weight = _local_rate(image.values, dy)
    undersampled = weight[np.abs(step) > np.pi].sum() / weight.sum()
    if undersampled > support_fraction:
        raise ResolutionError('the chirp of the fresnel propagator is undersampled at T=%g s' % T)
    local = hbar * (rate + step / dy)
    period = psi_p.n * psi_p.spacing
    fall = 0.5 * g * T ** 2
    q_start = _place_window(
        local, weight, period, None if start is None else m * (start + fall) / T, support_fraction, 'the fresnel momentum support',
    )
    n = image.n
    dq = psi_p.spacing
    k = np.arange(n)
    chirped = image.values * np.exp(1j * chirp) * np.exp(-1j * q_start * y / hbar)
    transformed = dy / math.sqrt(2.0 * np.pi * hbar) * np.exp(-1j * k * dq * y[0] / hbar) * fft.fft(chirped)
    x = T * (q_start + dq * k) / m
    z = x - fall
    phase = (m * x ** 2 / (2.0 * T) - m * g * T * z - m * g ** 2 * T ** 3 / 6.0) / hbar
    values = math.sqrt(m / T) * np.exp(-0.25j * np.pi) * np.exp(1j * phase) * transformed
    return z, values, PropagationPlan(Method.fresnel, float(z[0]), image.x_min)


def propagate_to_detector(psi_p, T, consts, plan=None, support_fraction=SUPPORT_FRACTION, norm_tolerance=NORM_TOLERANCE):
    '''
    Free-fall evolution of a momentum wave at t=0 up to the detector at time T.

    Without a plan the transfer method is tried first, then the fresnel one;
    ResolutionError is raised when none of them resolves the phase. A plan
    returned with a previous result reproduces the same output grid.
    '''
    if psi_p.axis is not Axis.momentum or psi_p.time != 0:
        raise UsageError('propagate_to_detector expects a momentum wave at t=0')
    T = check_positive('T', T)
    if plan is None:
        try:
            z, values, plan = _transfer(psi_p, T, consts, None, support_fraction)
        except ResolutionError as e:
            logger.debug("Transfer propagation rejected at T=%g s: %s", T, e)
            try:
                z, values, plan = _fresnel(psi_p, T, consts, None, None, support_fraction)
            except ResolutionError as ee:
                raise ResolutionError('the momentum grid does not resolve the propagation to T=%g s: %s; %s' % (T, e, ee))
    elif plan.method is Method.transfer:
        z, values, plan = _transfer(psi_p, T, consts, plan.start, support_fraction)
    else:
        z, values, plan = _fresnel(psi_p, T, consts, plan.start, plan.image_start, support_fraction)
    psi = GriddedWavefunction(Axis.position, z[0], z[-1], z.size, T, values, plan=plan)
    logger.info(
        "Propagated to T=%g s by the %s method: %d positions from %.6g m, step %.4g m",
        T, plan.method.value, z.size, z[0], psi.spacing,
    )
    if norm_tolerance is not None:
        psi.check_norm(norm_tolerance)
    return psi


def farfield_map(Z, T, z0, consts):
    '''
    Momentum mapped onto the detector position Z in the far-field limit:
    p = (m / T) (Z + g T^2 / 2 - z_c), z_c = -5 z0 / 3
    '''
    T = check_positive('T', T)
    z_c = -5.0 * z0 / 3.0
    return consts.m / T * (np.asarray(Z, dtype=float) + 0.5 * consts.g * T ** 2 - z_c)


def farfield_pattern(psi_p, T, z0, Z_grid, consts):
    '''
    Far-field detector density (m / T) |Psi(p_Z, 0)|^2 on Z_grid
    '''
    p = farfield_map(Z_grid, T, z0, consts)
    return consts.m / T * psi_p.sample_density(p)


def detector_window(z0, T, g, below=0.02, above=0.06, n=2 ** 13):
    '''
    Default detector positions around the branchpoint
    '''
    Z_c = branchpoint_estimate(z0, T, g)[0]
    return np.linspace(Z_c - below, Z_c + above, n)


def fringe_maxima(x, density, start, count):
    '''
    Positions of the first count maxima of the density above start,
    refined by a parabola through the three highest samples.
    '''
    x = np.asarray(x, dtype=float)
    density = np.asarray(density, dtype=float)
    peaks, _ = signal.find_peaks(density, prominence=1e-3 * density.max())
    peaks = peaks[(x[peaks] >= start) & (peaks > 0) & (peaks < x.size - 1)][:count]
    left, mid, right = density[peaks - 1], density[peaks], density[peaks + 1]
    curvature = left - 2 * mid + right
    offset = np.where(curvature < 0, 0.5 * (left - right) / np.where(curvature < 0, curvature, -1.0), 0.0)
    return x[peaks] + offset * (x[1] - x[0])
