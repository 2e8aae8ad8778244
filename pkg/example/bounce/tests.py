import threading
import time
import unittest
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import mock
import numpy as np
from scipy import integrate

from airy_bounce.airy import ai_real
from airy_bounce.energy import (
    WavepacketParams, EnergyGrid, EnergyAmplitude, AmplitudeTag,
    default_energy_grid, initial_amplitude, reflection_amplitude, bounce, gaussian_state,
)
from airy_bounce.exceptions import DomainError, GridError, ResolutionError, UsageError, WindowError
from airy_bounce.pipeline import Gravimeter
from airy_bounce.propagation import (
    Axis, Method, PropagationPlan,
    momentum_wave_direct, momentum_gradient, position_wave_direct, image_momentum, image_position,
    propagate_to_detector, farfield_map, fringe_maxima,
)
from airy_bounce.scales import PhysicalConstants, gqs_scales
from airy_bounce.semiclassical import branchpoint_estimate


def bulk_indices(psi, count, level=1e-2):
    density = psi.density()
    inside = np.flatnonzero(density > level * density.max())
    return inside[np.linspace(0, inside.size - 1, count).astype(int)]


class TestBase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.constants = PhysicalConstants()
        cls.wavepacket = WavepacketParams(z0=1e-3, v0=-0.0915, sigma_v=0.079, T=0.3)
        cls.gravimeter = Gravimeter(cls.constants, cls.wavepacket)

    def setUp(self):
        self.c = self.constants
        self.p = self.wavepacket
        self.gm = self.gravimeter


class WavepacketTest(TestBase):
    def test_1_derived_sigma_z(self):
        self.assertAlmostEqual(self.p.sigma_z(self.c) / 3.988e-7, 1.0, delta=1e-3)

    def test_2_invalid_wavepackets(self):
        with self.assertRaises(DomainError):
            WavepacketParams(z0=-1e-3, v0=0.0, sigma_v=0.079, T=0.3)
        with self.assertRaises(DomainError):
            WavepacketParams(z0=1e-3, v0=0.0, sigma_v=0.079, T=0.3, n_events=0)
        for n_events in (float('nan'), float('inf')):
            with self.assertRaises(DomainError):
                WavepacketParams(z0=1e-3, v0=0.0, sigma_v=0.079, T=0.3, n_events=n_events)
        # sigma_z = 4 um for sigma_v = 7.9 mm/s, the packet touches the mirror
        with self.assertRaises(DomainError):
            WavepacketParams(z0=1e-5, v0=0.0, sigma_v=0.0079, T=0.3).validate(self.c)

    def test_3_grid_invariants(self):
        with self.assertRaises(UsageError):
            EnergyGrid(0.0, 1e-30, 1000)
        with self.assertRaises(UsageError):
            EnergyGrid(0.0, 1e-30, 2 ** 8)
        with self.assertRaises(DomainError):
            EnergyGrid(1e-30, 0.0, 2 ** 12)


class EnergyAmplitudeTest(TestBase):
    def test_1_default_grid(self):
        grid = self.gm.energy_grid
        mean = self.c.m * (self.c.g * 1e-3 + 0.5 * 0.0915 ** 2)
        self.assertLess(grid.e_min, mean)
        self.assertGreater(grid.e_max, mean)
        self.assertEqual(grid.n, 2 ** 16)
        self.assertAlmostEqual(grid.e_min / gqs_scales(self.c).e_gqs, -20.0, delta=1e-9)

    def test_2_initial_norm(self):
        self.assertAlmostEqual(self.gm.initial.norm(), 1.0, delta=1e-6)
        self.assertIs(self.gm.initial.tag, AmplitudeTag.initial)

    def test_3_norm_converges_with_the_grid(self):
        grid = self.gm.energy_grid
        finer = initial_amplitude(self.p, self.c, grid.resized(2 * grid.n))
        self.assertLess(abs(finer.norm() - self.gm.initial.norm()), 1e-9)

    def test_4_narrow_grid_canary(self):
        grid = default_energy_grid(self.p, self.c, halfwidth_sigmas=2.0)
        with self.assertRaises(GridError):
            initial_amplitude(self.p, self.c, grid)

    def test_5_peak_near_classical_energy(self):
        c0 = self.gm.initial
        peak = c0.grid.energies[np.argmax(np.abs(c0.values))]
        self.assertLess(abs(peak - self.p.mean_energy(self.c)), 2 * self.p.energy_spread(self.c))

    def test_6_closed_form_against_quadrature(self):
        c, p = self.c, self.p
        s = gqs_scales(c)
        sigma_z = p.sigma_z(c)
        z = np.linspace(p.z0 - 12 * sigma_z, p.z0 + 12 * sigma_z, 4001)
        psi0 = gaussian_state(z, p, c)
        mean, spread = p.mean_energy(c), p.energy_spread(c)
        energies = np.linspace(max(mean - 2 * spread, self.gm.energy_grid.e_min), mean + 2 * spread, 32)
        expected = np.array([
            integrate.trapezoid(psi0 * ai_real((z - E / (c.m * c.g)) / s.l_gqs), z) for E in energies
        ]) / np.sqrt(s.l_gqs * s.e_gqs)
        actual = self.gm.initial.evaluate(energies)
        self.assertLessEqual(np.abs(actual - expected).max(), 1e-6 * np.abs(expected).max())

    def test_7_gaussian_state_is_normalized(self):
        sigma_z = self.p.sigma_z(self.c)
        z = np.linspace(self.p.z0 - 12 * sigma_z, self.p.z0 + 12 * sigma_z, 2001)
        self.assertAlmostEqual(integrate.trapezoid(np.abs(gaussian_state(z, self.p, self.c)) ** 2, z), 1.0, delta=1e-9)


class BounceTest(TestBase):
    def test_1_reflection_is_a_phase(self):
        rho = reflection_amplitude(self.gm.energy_grid.energies, self.c)
        np.testing.assert_allclose(np.abs(rho), 1.0, rtol=0, atol=1e-12)
        self.assertAlmostEqual(abs(reflection_amplitude(0.0, self.c) - np.exp(1j * np.pi / 3)), 0.0, delta=1e-12)

    def test_2_bounce_preserves_the_norm(self):
        c0, c1 = self.gm.initial, self.gm.reflected
        self.assertAlmostEqual(c1.norm() / c0.norm(), 1.0, delta=1e-12)
        np.testing.assert_allclose(np.abs(c1.values), np.abs(c0.values), rtol=1e-12, atol=1e-300)
        self.assertIs(c1.tag, AmplitudeTag.reflected)

    def test_3_bounce_multiplies_by_the_reflection(self):
        c0, c1 = self.gm.initial, self.gm.reflected
        rho = reflection_amplitude(c0.grid.energies, self.c)
        np.testing.assert_allclose(c1.values, rho * c0.values, rtol=1e-14, atol=0)
        np.testing.assert_allclose(c1.evaluate(c0.grid.energies[:64]), c1.values[:64], rtol=1e-12, atol=1e-300)

    def test_4_bounce_twice(self):
        with self.assertRaises(UsageError):
            bounce(self.gm.reflected, self.c)

    def test_5_amplitudes_are_read_only(self):
        with self.assertRaises(ValueError):
            self.gm.reflected.values[0] = 0


class MomentumTest(TestBase):
    def test_1_normalization(self):
        psi = self.gm.momentum
        self.assertIs(psi.axis, Axis.momentum)
        self.assertAlmostEqual(psi.norm(), 1.0, delta=1e-5)
        self.assertAlmostEqual(self.gm.source_momentum.norm(), 1.0, delta=1e-5)

    def test_2_against_direct_quadrature(self):
        psi = self.gm.momentum
        index = bulk_indices(psi, 16)
        direct = momentum_wave_direct(self.gm.reflected, psi.coordinates[index], self.c)
        self.assertLessEqual(np.abs(psi.values[index] - direct).max(), 1e-5 * np.abs(psi.values).max())

    def test_3_fringes_above_the_branchpoint_velocity(self):
        psi = self.gm.momentum
        v = psi.coordinates / self.c.m
        density = psi.density()
        v_c = np.sqrt(6 * self.c.g * self.p.z0)
        self.assertGreater(v[np.argmax(density)], v_c)
        self.assertLess(density[v < v_c - 0.02].max(), 1e-3 * density.max())

    def test_4_gradient_against_direct_quadrature(self):
        psi = self.gm.momentum
        gradient = momentum_gradient(self.gm.reflected, self.c, p_start=psi.x_min)
        self.assertEqual(gradient.n, psi.n)
        self.assertAlmostEqual(gradient.x_min / psi.x_min, 1.0, delta=1e-12)
        index = bulk_indices(psi, 8)
        p = psi.coordinates[index]
        h = 1e-3 * psi.spacing
        expected = (momentum_wave_direct(self.gm.reflected, p + h, self.c) - momentum_wave_direct(self.gm.reflected, p - h, self.c)) / (2 * h)
        self.assertLessEqual(np.abs(gradient.values[index] - expected).max(), 1e-4 * np.abs(expected).max())

    def test_5_only_reflected_amplitudes_have_an_image(self):
        with self.assertRaises(UsageError):
            image_momentum(self.gm.initial, self.c)

    def test_6_image_wave_lies_below_the_mirror(self):
        image = image_position(self.gm.momentum, self.c)
        self.assertAlmostEqual(image.norm(), 1.0, delta=1e-5)
        mean = integrate.trapezoid(image.coordinates * image.density(), dx=image.spacing)
        self.assertLess(mean, 0.0)


class PropagationTest(TestBase):
    def test_1_norm_through_the_chain(self):
        wave = self.gm.detector_wave()
        self.assertIs(wave.axis, Axis.position)
        self.assertEqual(wave.time, self.p.T)
        self.assertAlmostEqual(wave.norm(), self.gm.momentum.norm(), delta=1e-6)

    def test_2_against_direct_quadrature(self):
        wave = self.gm.detector_wave()
        Z_c = branchpoint_estimate(self.p.z0, self.p.T, self.c.g)[0]
        nodes = np.flatnonzero((wave.coordinates >= Z_c - 2e-3) & (wave.coordinates <= Z_c + 30e-3))
        index = nodes[::max(nodes.size // 24, 1)][:24]
        direct = position_wave_direct(self.gm.reflected, self.p.T, wave.coordinates[index], self.c)
        fast = np.abs(wave.values[index])
        exact = np.abs(direct.values)
        self.assertLessEqual(np.linalg.norm(fast - exact) / np.linalg.norm(exact), 1e-5)

    def test_3_initial_packet_from_direct_quadrature(self):
        sigma_z = self.p.sigma_z(self.c)
        z = np.linspace(self.p.z0 - 8 * sigma_z, self.p.z0 + 8 * sigma_z, 201)
        psi = position_wave_direct(self.gm.initial, 0.0, z, self.c)
        density = psi.density()
        norm = integrate.trapezoid(density, z)
        mean = integrate.trapezoid(z * density, z) / norm
        std = np.sqrt(integrate.trapezoid((z - mean) ** 2 * density, z) / norm)
        self.assertLess(abs(mean - self.p.z0), 0.01 * sigma_z)
        self.assertAlmostEqual(std / sigma_z, 1.0, delta=0.01)

    def test_4_free_fall_spreading(self):
        t = 0.01
        wave = self.gm.position_wave(t, source=True)
        density = wave.density()
        z = wave.coordinates
        norm = integrate.trapezoid(density, dx=wave.spacing)
        mean = integrate.trapezoid(z * density, dx=wave.spacing) / norm
        std = np.sqrt(integrate.trapezoid((z - mean) ** 2 * density, dx=wave.spacing) / norm)
        expected = np.sqrt(self.p.sigma_z(self.c) ** 2 + (self.p.sigma_v * t) ** 2)
        self.assertAlmostEqual(std / expected, 1.0, delta=0.01)
        self.assertLess(abs(mean - (self.p.z0 + self.p.v0 * t - 0.5 * self.c.g * t ** 2)), 0.01 * expected)

    def test_5_nothing_below_the_branchpoint(self):
        wave = self.gm.detector_wave()
        Z_c = branchpoint_estimate(self.p.z0, self.p.T, self.c.g)[0]
        z = wave.coordinates
        density = wave.density()
        below = (z >= Z_c - 20e-3) & (z <= Z_c - 2e-3)
        self.assertLess(density[below].max(), 1e-3 * density.max())

    def test_6_plan_reproduces_the_grid(self):
        wave = self.gm.detector_wave()
        again = propagate_to_detector(self.gm.momentum, self.p.T, self.c, plan=wave.plan)
        self.assertEqual(again.n, wave.n)
        self.assertLess(abs(again.x_min - wave.x_min), 1e-3 * wave.spacing)
        np.testing.assert_allclose(again.values, wave.values, rtol=0, atol=1e-8 * np.abs(wave.values).max())

    def test_7_prescribed_window_outside_of_the_support(self):
        plan = PropagationPlan(Method.transfer, start=10.0)
        with self.assertRaises(ResolutionError):
            propagate_to_detector(self.gm.momentum, 0.01, self.c, plan=plan)

    def test_8_grid_refinement(self):
        finer = Gravimeter(self.c, self.p, energy_grid=self.gm.energy_grid.resized(2 * self.gm.energy_grid.n))
        Z_c = branchpoint_estimate(self.p.z0, self.p.T, self.c.g)[0]
        # wide fringes, the two detector grids differ
        Z = np.linspace(Z_c - 2e-3, Z_c + 10e-3, 4001)
        coarse = self.gm.exact_pattern(Z)
        self.assertLess(np.abs(finer.exact_pattern(Z) - coarse).max(), 1e-6 * coarse.max())

    def test_9_usage_errors(self):
        with self.assertRaises(UsageError):
            propagate_to_detector(self.gm.detector_wave(), 1.0, self.c)
        with self.assertRaises(DomainError):
            propagate_to_detector(self.gm.momentum, 0.0, self.c)

    def single_energy(self, n):
        s = gqs_scales(self.c)
        grid = EnergyGrid(-20 * s.e_gqs, 200 * s.e_gqs, n)
        index = np.argmin(np.abs(grid.energies - 10 * s.e_gqs))
        values = np.zeros(n)
        values[index] = 1.0 / grid.spacing
        return s, grid.energies[index], EnergyAmplitude(grid, values, AmplitudeTag.initial)

    def test_10_single_energy_is_an_airy_function(self):
        for n in (2 ** 12, 2 ** 18):
            s, energy, c = self.single_energy(n)
            z = np.linspace(0.0, 1e-4, 101)
            psi = position_wave_direct(c, 0.0, z, self.c)
            shape = ai_real((z - energy / (self.c.m * self.c.g)) / s.l_gqs)
            scale = np.vdot(shape, psi.values) / np.vdot(shape, shape)
            self.assertGreater(abs(scale), 0.0)
            np.testing.assert_allclose(psi.values, scale * shape, rtol=0, atol=1e-9 * np.abs(psi.values).max())

    def test_11_unresolved_amplitude_without_source(self):
        s, energy, c = self.single_energy(2 ** 10)
        with self.assertRaises(ResolutionError):
            position_wave_direct(c, self.p.T, np.linspace(0.0, 1e-4, 11), self.c)
        position_wave_direct(c, self.p.T, np.linspace(0.0, 1e-4, 11), self.c, check_resolution=False)

    def test_12_prescribed_window_must_hold_the_wave(self):
        wave = self.gm.detector_wave()
        period = 2 * np.pi * self.c.hbar / self.gm.momentum.spacing
        if wave.plan.method is Method.fresnel:
            shifted = replace(wave.plan, image_start=wave.plan.image_start + 0.25 * period)
        else:
            shifted = replace(wave.plan, start=wave.plan.start + 0.25 * period)
        with self.assertRaises(ResolutionError):
            propagate_to_detector(self.gm.momentum, self.p.T, self.c, plan=shifted)

    def test_13_detector_wave_computed_once_between_threads(self):
        gm = Gravimeter(self.c, self.p)
        gm.momentum = self.gm.momentum
        calls = []

        def propagate(*args, **kwargs):
            calls.append(threading.current_thread().name)
            time.sleep(0.05)
            return object()

        with mock.patch('airy_bounce.pipeline.propagate_to_detector', side_effect=propagate):
            with ThreadPoolExecutor(max_workers=4) as executor:
                waves = list(executor.map(lambda _: gm.detector_wave(), range(8)))
        self.assertEqual(len(calls), 1)
        self.assertTrue(all(wave is waves[0] for wave in waves))


class FarFieldMapTest(TestBase):
    def test_1_branchpoint_maps_on_v_c(self):
        Z_c, v_c, _ = branchpoint_estimate(self.p.z0, self.p.T, self.c.g)
        self.assertAlmostEqual(farfield_map(Z_c, self.p.T, self.p.z0, self.c) / (self.c.m * v_c), 1.0, delta=1e-12)

    def test_2_affine(self):
        p1, p2 = farfield_map([-0.37, -0.36], self.p.T, self.p.z0, self.c)
        self.assertAlmostEqual((p2 - p1) / (self.c.m * 0.01 / self.p.T), 1.0, delta=1e-9)
        self.assertAlmostEqual(p1 / self.c.m, 0.244, delta=1e-3)

    def test_3_farfield_is_normalized(self):
        psi = self.gm.momentum
        T = self.p.T
        z_c = -5.0 * self.p.z0 / 3.0
        Z = T * psi.coordinates[1:-1] / self.c.m - 0.5 * self.c.g * T ** 2 + z_c
        density = self.gm.farfield_pattern(Z)
        self.assertAlmostEqual(integrate.trapezoid(density, Z), 1.0, delta=1e-5)

    def test_4_outside_of_the_momentum_grid(self):
        with self.assertRaises(WindowError):
            self.gm.farfield_pattern(np.array([-0.37, 5.0]))


class FringeMaximaTest(unittest.TestCase):
    def test_1_cosine_fringes(self):
        x = np.linspace(0.0, 10.0, 10001)
        density = np.cos(np.pi * x) ** 2
        maxima = fringe_maxima(x, density, start=0.5, count=5)
        np.testing.assert_allclose(maxima, [1.0, 2.0, 3.0, 4.0, 5.0], atol=1e-6)

    def test_2_refines_between_samples(self):
        x = np.linspace(0.0, 10.0, 1001)
        density = np.cos(np.pi * (x - 0.0037)) ** 2
        maxima = fringe_maxima(x, density, start=0.5, count=3)
        np.testing.assert_allclose(maxima, [1.0037, 2.0037, 3.0037], atol=1e-4)
