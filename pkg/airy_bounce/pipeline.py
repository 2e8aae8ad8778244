'''
The simulation pipeline of one experiment: the grid and numerics settings
and the Gravimeter chaining the energy, momentum and detector representations
of the wave reflected by the mirror.
'''
import threading
from dataclasses import dataclass
from functools import cached_property

from airy_bounce.energy import (
    DEFAULT_GRID_N, DEFAULT_HALFWIDTH_SIGMAS,
    bounce, default_energy_grid, initial_amplitude,
)
from airy_bounce.propagation import (
    DEFAULT_PAD, NORM_TOLERANCE, SUPPORT_FRACTION,
    detector_window, farfield_pattern, image_momentum, image_position, momentum_wave, propagate_to_detector,
)
from airy_bounce.scales import gqs_scales
from airy_bounce.semiclassical import ModelParams, branchpoint

import logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSettings:
    '''
    Sizes and windows of the grids: the energy grid size n and its half-width
    in energy spreads, the zero-padding of the momentum FFT and the detector
    window around the branchpoint.
    '''
    n: int = DEFAULT_GRID_N
    halfwidth_sigmas: float = DEFAULT_HALFWIDTH_SIGMAS
    momentum_pad: int = DEFAULT_PAD
    detector_below: float = 0.02
    detector_above: float = 0.06
    detector_n: int = 2 ** 13


@dataclass(frozen=True)
class Numerics:
    '''
    Steps and tolerances of the numerical guards
    '''
    delta_g_rel: float = 1e-6
    check_step: bool = True
    step_tolerance: float = 0.01
    norm_tolerance: float = 1e-6
    support_fraction: float = SUPPORT_FRACTION


class Gravimeter(object):
    '''
    The Gravimeter class chains the representations of one experiment:
    the energy amplitudes of the initial and reflected wavepackets, the image
    wave in momentum representation at t=0 and the wave at the detector.

    Every stage is computed once, on first access, and kept for the lifetime
    of the object. The detector waves are cached under a lock; the other
    stages may be computed twice when two threads first ask for them at the
    same time, with identical results.

    The perturbed(delta) method returns the Gravimeter of the same initial
    wavepacket falling in g (1 + delta), with the energy grid scaled so that
    the momentum and detector grids are the same as the grids of this one.
    '''
    def __init__(self, constants, wavepacket, numerics=None, grid=None, energy_grid=None, momentum_start=None):
        self.constants = constants
        self.wavepacket = wavepacket.validate(constants)
        self.numerics = numerics or Numerics()
        self.grid = grid or GridSettings()
        self._energy_grid = energy_grid
        self.momentum_start = momentum_start
        self._detector_waves = {}
        self._detector_lock = threading.Lock()

    @classmethod
    def from_config(cls, cfg, wavepacket=None):
        '''
        Create a Gravimeter from the loaded RunConfig, optionally replacing its wavepacket
        '''
        return cls(cfg.constants, wavepacket or cfg.wavepacket, numerics=cfg.numerics, grid=cfg.grid)

    @cached_property
    def scales(self):
        return gqs_scales(self.constants)

    @cached_property
    def energy_grid(self):
        if self._energy_grid is not None:
            return self._energy_grid
        return default_energy_grid(self.wavepacket, self.constants, n=self.grid.n, halfwidth_sigmas=self.grid.halfwidth_sigmas)

    @cached_property
    def initial(self):
        return initial_amplitude(self.wavepacket, self.constants, self.energy_grid, tolerance=self.numerics.norm_tolerance)

    @cached_property
    def reflected(self):
        return bounce(self.initial, self.constants)

    @cached_property
    def momentum(self):
        '''
        The image wave in momentum representation at t=0
        '''
        return image_momentum(self.reflected, self.constants, pad=self.grid.momentum_pad, p_start=self.momentum_start)

    @cached_property
    def source_momentum(self):
        '''
        The initial wavepacket in momentum representation at t=0
        '''
        return momentum_wave(self.initial, self.constants, pad=self.grid.momentum_pad)

    @cached_property
    def branchpoint(self):
        return branchpoint(self.wavepacket.z0, self.wavepacket.T, self.constants.g)

    @cached_property
    def model_params(self):
        return ModelParams.from_wavepacket(self.wavepacket, self.constants)

    def detector_wave(self, T=None, plan=None):
        '''
        The image wave at the detector at time T (the time of flight by default)
        '''
        T = self.wavepacket.T if T is None else T
        key = (T, plan)
        psi_p = self.momentum
        with self._detector_lock:
            if key not in self._detector_waves:
                self._detector_waves[key] = propagate_to_detector(
                    psi_p, T, self.constants, plan=plan,
                    support_fraction=self.numerics.support_fraction, norm_tolerance=NORM_TOLERANCE,
                )
            return self._detector_waves[key]

    def position_wave(self, t, source=False):
        '''
        The image wave (or the source wave when source is true) in position
        representation at time t, not cached
        '''
        psi_p = self.source_momentum if source else self.momentum
        if t == 0:
            return image_position(psi_p, self.constants, support_fraction=self.numerics.support_fraction)
        return propagate_to_detector(
            psi_p, t, self.constants,
            support_fraction=self.numerics.support_fraction, norm_tolerance=NORM_TOLERANCE,
        )

    def detector_grid(self, T=None):
        T = self.wavepacket.T if T is None else T
        return detector_window(
            self.wavepacket.z0, T, self.constants.g,
            below=self.grid.detector_below, above=self.grid.detector_above, n=self.grid.detector_n,
        )

    def exact_pattern(self, Z, T=None):
        return self.detector_wave(T).sample_density(Z)

    def farfield_pattern(self, Z, T=None):
        T = self.wavepacket.T if T is None else T
        return farfield_pattern(self.momentum, T, self.wavepacket.z0, Z, self.constants)

    def model_pattern(self, Z):
        return self.model_params.pattern_model(self.constants).amplitude(Z)

    def farfield_model(self, v1):
        return self.model_params.farfield_model(self.constants).amplitude(v1)

    def perturbed(self, delta_rel):
        factor = 1.0 + delta_rel
        logger.debug("Perturbing g=%.12g by %g", self.constants.g, delta_rel)
        return Gravimeter(
            self.constants.with_g(self.constants.g * factor), self.wavepacket,
            numerics=self.numerics, grid=self.grid,
            energy_grid=self.energy_grid.scaled(factor), momentum_start=self.momentum.x_min,
        )
