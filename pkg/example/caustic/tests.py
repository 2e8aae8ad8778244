import unittest

import numpy as np
from scipy import integrate

from airy_bounce.energy import WavepacketParams
from airy_bounce.exceptions import DomainError, ModelDomainError, ModelValidityError
from airy_bounce.pipeline import Gravimeter
from airy_bounce.propagation import fringe_maxima
from airy_bounce.scales import PhysicalConstants
from airy_bounce.semiclassical import (
    CubicCoeffs, FarFieldModel, ModelParams, PatternModel,
    bounce_residual, bounce_times, branchpoint, branchpoint_estimate, classical_paths, discriminant,
    gamma, model_farfield, model_pattern, optimal_v0,
)

Z0 = 1e-3
T = 0.3
G = 9.81


def D_at(Z, z0=Z0, T=T, g=G):
    return discriminant(CubicCoeffs.from_geometry(z0, Z, T, g))


class TestBase(unittest.TestCase):
    def setUp(self):
        self.c = PhysicalConstants()
        self.bp = branchpoint(Z0, T, G)


class BounceTimesTest(TestBase):
    def test_1_symmetric_detector(self):
        # mu = 0, the roots of the reduced cubic are 0 and +-sqrt(3 lambda / 2 g)
        coeffs = CubicCoeffs.from_geometry(Z0, Z0, T, G)
        self.assertEqual(coeffs.mu, 0.0)
        half = np.sqrt(1.5 * coeffs.lam / G)
        times = bounce_times(Z0, Z0, T, G)
        np.testing.assert_allclose(times, [0.5 * T - half, 0.5 * T, 0.5 * T + half], rtol=0, atol=1e-12)

    def test_2_two_paths_above_the_branchpoint(self):
        for offset in (1e-4, 1e-3, 1e-2, 5e-2):
            Z = self.bp.Z_c_exact + offset
            times = bounce_times(Z0, Z, T, G)
            self.assertEqual(len(times), 2, msg='Z=%s' % Z)
            self.assertTrue(all(0 < t < T for t in times))
            residuals = bounce_residual(np.array(times), Z0, Z, T, G)
            self.assertLessEqual(np.abs(residuals).max(), 1e-10 * Z0 * T)

    def test_3_double_root_at_the_branchpoint(self):
        times = bounce_times(Z0, self.bp.Z_c_exact, T, G)
        self.assertEqual(len(times), 1)
        self.assertLessEqual(abs(float(bounce_residual(times[0], Z0, self.bp.Z_c_exact, T, G))), 1e-10 * Z0 * T)

    def test_4_no_path_below_the_branchpoint(self):
        for offset in (1e-3, 1e-2, 5e-2):
            self.assertEqual(bounce_times(Z0, self.bp.Z_c_exact - offset, T, G), [])

    def test_5_root_gap_law(self):
        offsets = np.logspace(-6, -4, 9)
        gaps = []
        for offset in offsets:
            early, late = bounce_times(Z0, self.bp.Z_c_exact + offset, T, G)
            gaps.append(late - early)
        slope = np.polyfit(np.log(offsets), np.log(gaps), 1)[0]
        self.assertAlmostEqual(slope, 0.5, delta=0.02)

    def test_6_invalid_geometry(self):
        with self.assertRaises(DomainError):
            bounce_times(0.0, -0.37, T, G)
        with self.assertRaises(DomainError):
            bounce_times(Z0, -0.37, -1.0, G)


class ClassicalPathTest(TestBase):
    def test_1_reaches_the_detector(self):
        for offset in (1e-3, 1e-2):
            Z = self.bp.Z_c_exact + offset
            paths = classical_paths(Z0, Z, T, G)
            self.assertEqual([path.t_b for path in paths], bounce_times(Z0, Z, T, G))
            for path in paths:
                z = path.altitude([0.0, path.t_b, T])
                np.testing.assert_allclose(z, [Z0, 0.0, Z], rtol=0, atol=1e-9)

    def test_2_elastic_bounce(self):
        path = classical_paths(Z0, self.bp.Z_c_exact + 1e-2, T, G)[0]
        self.assertAlmostEqual(path.v0 - G * path.t_b, -path.v1, delta=1e-12)
        h = 1e-7
        before = (path.altitude(path.t_b) - path.altitude(path.t_b - h)) / h
        after = (path.altitude(path.t_b + h) - path.altitude(path.t_b)) / h
        self.assertAlmostEqual(float(before), -path.v1, delta=1e-5)
        self.assertAlmostEqual(float(after), path.v1, delta=1e-5)

    def test_3_paths_merge_at_the_branchpoint(self):
        self.assertEqual(len(classical_paths(Z0, self.bp.Z_c_exact, T, G)), 1)
        self.assertEqual(classical_paths(Z0, self.bp.Z_c_exact - 1e-2, T, G), [])


class DiscriminantTest(TestBase):
    def test_1_plug_in(self):
        self.assertEqual(discriminant(CubicCoeffs(L=1.0, lam=1.0, mu=1.0)), 0.0)

    def test_2_coefficients(self):
        coeffs = CubicCoeffs.from_geometry(Z0, -0.37, T, G)
        self.assertAlmostEqual(coeffs.L, 0.5 * G * T ** 2, delta=1e-15)
        self.assertAlmostEqual(coeffs.lam, (coeffs.L - 2 * (-0.37 + Z0)) / 3, delta=1e-15)
        self.assertAlmostEqual(coeffs.mu, Z0 + 0.37, delta=1e-15)

    def test_3_vanishes_at_the_exact_branchpoint(self):
        L = 0.5 * G * T ** 2
        self.assertLessEqual(abs(D_at(self.bp.Z_c_exact)), 1e-12 * L ** 3)

    def test_4_sign_flip(self):
        for delta in (1e-6, 1e-4, 1e-2):
            self.assertLess(D_at(self.bp.Z_c_exact + delta) * D_at(self.bp.Z_c_exact - delta), 0.0)
        self.assertGreater(D_at(self.bp.Z_c_exact + 1e-3), 0.0)

    def test_5_vectorized(self):
        Z = np.linspace(-0.4, -0.3, 11)
        np.testing.assert_allclose(D_at(Z), [D_at(z) for z in Z], rtol=1e-14, atol=0)


class BranchpointTest(TestBase):
    def test_1_reference_values(self):
        self.assertAlmostEqual(self.bp.Z_c, -0.37033, delta=1e-5)
        self.assertAlmostEqual(self.bp.v_c, 0.24261, delta=1e-5)
        self.assertAlmostEqual(self.bp.z_c, -5e-3 / 3, delta=1e-15)
        self.assertEqual(branchpoint_estimate(Z0, T, G), (self.bp.Z_c, self.bp.v_c, self.bp.z_c))

    def test_2_square_root_law(self):
        self.assertAlmostEqual(branchpoint(4 * Z0, T, G).v_c / self.bp.v_c, 2.0, delta=1e-14)

    def test_3_exact_root_near_the_estimate(self):
        self.assertLessEqual(abs(self.bp.Z_c_exact - self.bp.Z_c), 1e-3 * G * T ** 2)
        self.assertNotEqual(self.bp.Z_c_exact, self.bp.Z_c)

    def test_4_invalid(self):
        with self.assertRaises(DomainError):
            branchpoint(Z0, 0.0, G)


class GammaTest(TestBase):
    def test_1_reference_value(self):
        self.assertAlmostEqual(gamma(0.079, self.c), 178.7, delta=0.5)

    def test_2_square_law(self):
        self.assertAlmostEqual(gamma(0.158, self.c) / gamma(0.079, self.c), 4.0, delta=1e-12)

    def test_3_too_few_fringes(self):
        with self.assertRaises(ModelValidityError):
            gamma(0.015, self.c)
        with self.assertRaises(ModelValidityError):
            gamma(1e-3, self.c)

    def test_4_approximate_range_warns(self):
        with self.assertLogs('airy_bounce.semiclassical', level='WARNING') as logs:
            value = gamma(0.0264, self.c)
        self.assertTrue(10 < value < 30)
        self.assertIn('approximate', logs.output[0])


class OptimalVelocityTest(TestBase):
    def test_1_reference_value(self):
        self.assertAlmostEqual(optimal_v0(Z0, G), -0.0809, delta=1e-4)

    def test_2_square_root_law(self):
        self.assertAlmostEqual(optimal_v0(4 * Z0, G) / optimal_v0(Z0, G), 2.0, delta=1e-14)

    def test_3_energy_ratio(self):
        for z0 in (5e-4, 1e-3, 2e-3):
            v0 = optimal_v0(z0, G)
            self.assertAlmostEqual(0.5 * v0 ** 2 / (G * z0), 1.0 / 3.0, delta=1e-14)


class PatternModelTest(TestBase):
    def setUp(self):
        super(PatternModelTest, self).setUp()
        self.model = PatternModel(Z0, T, self.c, gamma(0.079, self.c))

    def test_1_zero_at_the_branchpoint(self):
        delta, slope = self.model.delta(np.array([self.bp.Z_c_exact]))
        self.assertLess(abs(delta[0]), 1e-6)
        self.assertAlmostEqual(slope[0], 5350.0, delta=50.0)

    def test_2_analytic_slope(self):
        Z = self.bp.Z_c + np.array([1e-3, 1e-2, 5e-2])
        h = 1e-6
        _, slope = self.model.delta(Z)
        forward, _ = self.model.delta(Z + h)
        backward, _ = self.model.delta(Z - h)
        np.testing.assert_allclose(slope, (forward - backward) / (2 * h), rtol=1e-6)

    def test_3_amplitude_at_the_branchpoint(self):
        amplitude = self.model.amplitude(np.array([self.bp.Z_c_exact]))[0]
        _, slope = self.model.delta(np.array([self.bp.Z_c_exact]))
        expected = (8 * np.pi / self.model.gamma) ** 0.25 * np.sqrt(slope[0]) * 0.355028053887817
        self.assertAlmostEqual(amplitude / expected, 1.0, delta=1e-9)

    def test_4_outside_of_the_model_domain(self):
        with self.assertRaises(ModelDomainError):
            self.model.amplitude(np.array([-0.37, 0.01]))

    def test_5_helpers(self):
        params = ModelParams(gamma=self.model.gamma, z0=Z0, T=T)
        Z = np.linspace(self.bp.Z_c - 1e-3, self.bp.Z_c + 1e-2, 101)
        np.testing.assert_array_equal(model_pattern(Z, params, self.c), self.model.amplitude(Z))
        p = WavepacketParams(z0=Z0, v0=-0.0915, sigma_v=0.079, T=T)
        self.assertEqual(ModelParams.from_wavepacket(p, self.c), params)


class FarFieldModelTest(TestBase):
    def setUp(self):
        super(FarFieldModelTest, self).setUp()
        self.model = FarFieldModel(Z0, self.c, gamma(0.079, self.c))

    def test_1_identities(self):
        self.assertAlmostEqual(self.model.factor, 3180.0, delta=10.0)
        delta, _ = self.model.delta(np.array([self.model.v_c]))
        self.assertEqual(delta[0], 0.0)
        unit = np.sqrt(self.model.v_c ** 2 + (9 * self.c.hbar * self.c.g / self.c.m) ** (2.0 / 3.0))
        delta, _ = self.model.delta(np.array([unit]))
        self.assertAlmostEqual(delta[0], 1.0, delta=1e-9)

    def test_2_normalization(self):
        v = np.linspace(0.05, 1.5, 2 ** 21)
        density = self.model.density(v)
        self.assertAlmostEqual(integrate.trapezoid(density, v), 1.0, delta=0.02)

    def test_3_negative_velocities(self):
        with self.assertRaises(ModelDomainError):
            self.model.amplitude(np.array([-0.1, 0.3]))
        with self.assertRaises(ModelDomainError):
            self.model.delta(np.array([0.0]))

    def test_4_helper(self):
        params = ModelParams(gamma=self.model.gamma, z0=Z0)
        v = np.linspace(0.2, 0.4, 101)
        np.testing.assert_array_equal(model_farfield(v, params, self.c), self.model.amplitude(v))

    def test_5_large_T_limit_of_the_pattern(self):
        T_long = 10.0
        pattern = PatternModel(Z0, T_long, self.c, self.model.gamma)
        k = self.model.factor
        v = np.sqrt(self.model.v_c ** 2 + np.linspace(-3.0, 2.0, 501) / k)
        Z = T_long * v - 0.5 * G * T_long ** 2 - 5 * Z0 / 3
        farfield = self.model.density(v) / T_long
        model = pattern.density(Z)
        self.assertLessEqual(np.abs(model - farfield).max(), 0.01 * farfield.max())


class ExactAgreementTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.c = PhysicalConstants()
        cls.p = WavepacketParams(z0=Z0, v0=-0.0915, sigma_v=0.079, T=T)
        cls.gm = Gravimeter(cls.c, cls.p)

    def fringe_shifts(self, T, below, above, count):
        Z_c = branchpoint_estimate(Z0, T, G)[0]
        Z = np.linspace(Z_c - below, Z_c + above, 20001)
        exact = fringe_maxima(Z, self.gm.exact_pattern(Z, T), Z_c - below, count)
        farfield = fringe_maxima(Z, self.gm.farfield_pattern(Z, T), Z_c - below, count)
        self.assertEqual((exact.size, farfield.size), (count, count))
        spacing = np.diff(farfield).mean()
        return np.abs(exact - farfield) / spacing

    def test_1_pattern_model(self):
        Z_c = self.gm.branchpoint.Z_c
        Z = np.linspace(Z_c - 2e-3, Z_c + 6e-3, 8001)
        exact = self.gm.exact_pattern(Z)
        maxima = fringe_maxima(Z, exact, Z_c - 1e-3, 20)
        self.assertEqual(maxima.size, 20)
        inside = Z <= maxima[-1] + 0.5 * (maxima[-1] - maxima[-2])
        model = self.gm.model_pattern(Z[inside]) ** 2
        self.assertLessEqual(np.abs(model - exact[inside]).max(), 0.05 * exact.max())

    def test_2_farfield_model(self):
        psi = self.gm.momentum
        v = psi.coordinates / self.c.m
        v_c = self.gm.branchpoint.v_c
        window = (v >= v_c - 3e-3) & (v <= v_c + 0.02)
        v = v[window]
        density = self.c.m * psi.density()[window]
        maxima = fringe_maxima(v, density, v_c - 3e-3, 20)
        self.assertEqual(maxima.size, 20)
        inside = v <= maxima[-1] + 0.5 * (maxima[-1] - maxima[-2])
        model = self.gm.farfield_model(v[inside]) ** 2
        self.assertLessEqual(np.abs(model - density[inside]).max(), 0.05 * density.max())

    def test_3_farfield_shift_at_short_times(self):
        shifts = self.fringe_shifts(0.3, 1e-3, 5e-3, 10)
        self.assertGreaterEqual(shifts.max(), 0.01)

    def test_4_farfield_shift_at_long_times(self):
        shifts = self.fringe_shifts(3.0, 5e-3, 40e-3, 10)
        self.assertLessEqual(shifts.max(), 0.1)

    def test_5_farfield_converges_with_time(self):
        model = FarFieldModel(Z0, self.c, gamma(0.079, self.c))
        distances = []
        for T_flight in (0.3, 1.0, 3.0, 10.0):
            v = np.sqrt(model.v_c ** 2 + np.linspace(-5.0, 20.0, 8001) / model.factor)
            Z = T_flight * v - 0.5 * G * T_flight ** 2 - 5 * Z0 / 3
            difference = np.abs(self.gm.exact_pattern(Z, T_flight) - self.gm.farfield_pattern(Z, T_flight))
            distances.append(integrate.trapezoid(difference, Z))
        self.assertTrue(all(a > b for a, b in zip(distances, distances[1:])), msg=str(distances))

    def test_6_pattern_model_within_the_envelope(self):
        # up to the half-width of the envelope exp(-Delta / gamma)
        Z_c = self.gm.branchpoint.Z_c
        Z = np.linspace(Z_c - 2e-3, Z_c + 0.05, 50001)
        model = PatternModel(Z0, T, self.c, gamma(0.079, self.c))
        delta, _ = model.delta(Z)
        inside = delta <= model.gamma * np.log(2.0)
        self.assertFalse(inside[-1])
        exact = self.gm.exact_pattern(Z[inside])
        difference = np.abs(model.density(Z[inside]) - exact)
        self.assertLessEqual(difference.max(), 0.1 * exact.max())
