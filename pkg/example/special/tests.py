import unittest

import mpmath
import numpy as np

from airy_bounce.airy import (
    airy_pair, ai_real, ai_prime, bi_real, bi_prime, ai_complex,
    reflection_phase, reflection_factor,
)
from airy_bounce.exceptions import AiryRangeError, DomainError
from airy_bounce.scales import PhysicalConstants, gqs_scales, reduce, HYDROGEN_MASS


def oracle_ai(w):
    with mpmath.workdps(40):
        return complex(mpmath.airyai(mpmath.mpc(w.real, w.imag)))


class TestBase(unittest.TestCase):
    def setUp(self):
        self.constants = PhysicalConstants()
        self.scales = gqs_scales(self.constants)


class ScalesTest(TestBase):
    def test_1_hydrogen_scales(self):
        self.assertAlmostEqual(self.scales.l_gqs / 5.87e-6, 1.0, delta=1e-3)
        self.assertAlmostEqual(self.scales.e_gqs / 9.64e-32, 1.0, delta=1e-3)
        self.assertAlmostEqual(self.scales.t_gqs / 1.094e-3, 1.0, delta=1e-3)

    def test_2_scales_are_consistent(self):
        c, s = self.constants, self.scales
        self.assertAlmostEqual(s.e_gqs / (c.m * c.g * s.l_gqs), 1.0, delta=1e-15)
        self.assertAlmostEqual(s.t_gqs / (c.hbar / s.e_gqs), 1.0, delta=1e-15)

    def test_3_exponent_laws(self):
        heavy_g = gqs_scales(self.constants.with_g(8 * self.constants.g))
        self.assertAlmostEqual(heavy_g.l_gqs / self.scales.l_gqs, 0.5, delta=1e-14)
        heavy_m = gqs_scales(PhysicalConstants(m=2 ** 1.5 * HYDROGEN_MASS))
        self.assertAlmostEqual(heavy_m.l_gqs / self.scales.l_gqs, 0.5, delta=1e-14)

    def test_4_reduce(self):
        s = self.scales
        self.assertEqual(reduce(0.0, 0.0, 0.0, s), (0.0, 0.0, 0.0))
        zeta, eps, nu = reduce(s.l_gqs, s.e_gqs, s.v_gqs, s)
        np.testing.assert_allclose([zeta, eps, nu], [1.0, 1.0, 1.0], rtol=1e-14)
        zeta, _, _ = reduce(1e-3, 0.0, 0.0, s)
        self.assertAlmostEqual(zeta, 170.3, delta=0.1)

    def test_5_reduce_round_trip(self):
        s = self.scales
        z = np.array([1e-3, -0.37, 2.5e-7])
        E = np.array([1e-30, -3e-31, 2.2e-29])
        v = np.array([-0.0915, 0.2426, 1e-4])
        zeta, eps, nu = reduce(z, E, v, s)
        np.testing.assert_allclose(zeta * s.l_gqs, z, rtol=1e-14)
        np.testing.assert_allclose(eps * s.e_gqs, E, rtol=1e-14)
        np.testing.assert_allclose(nu * s.v_gqs, v, rtol=1e-14)

    def test_6_scales_are_deterministic(self):
        self.assertEqual(gqs_scales(PhysicalConstants()), self.scales)

    def test_7_invalid_constants(self):
        with self.assertRaises(DomainError):
            PhysicalConstants(m=-1.0)
        with self.assertRaises(DomainError):
            PhysicalConstants(g=float('nan'))
        # a g given in cm/s^2 is outside of the default band
        with self.assertRaises(DomainError):
            PhysicalConstants(g=981.0)
        with self.assertRaises(DomainError):
            self.constants.with_g(0.0)


class RealAiryTest(TestBase):
    def test_1_values_at_zero(self):
        self.assertAlmostEqual(ai_real(0.0), 0.355028053887817, delta=1e-12)
        self.assertAlmostEqual(bi_real(0.0), 0.614926627446001, delta=1e-12)
        self.assertAlmostEqual(ai_real(0.0), float(mpmath.airyai(0)), delta=1e-12)
        self.assertAlmostEqual(bi_real(0.0), float(mpmath.airybi(0)), delta=1e-12)
        self.assertAlmostEqual(bi_real(0.0) / ai_real(0.0), np.sqrt(3.0), delta=1e-12)

    def test_2_first_zero(self):
        self.assertAlmostEqual(ai_real(-2.338107410459767), 0.0, delta=1e-10)

    def test_3_decay(self):
        self.assertLessEqual(abs(ai_real(200.0)), 1e-300)
        self.assertGreaterEqual(ai_real(50.0), 0.0)
        self.assertLess(ai_real(50.0), 1e-100)

    def test_4_against_oracle(self):
        x = np.linspace(-100.0, 30.0, 53)
        expected = np.array([float(mpmath.airyai(v)) for v in x])
        np.testing.assert_allclose(ai_real(x), expected, rtol=0, atol=1e-12 * max(1.0, np.abs(expected).max()))

    def test_5_wronskian(self):
        self.assertAlmostEqual(airy_pair(-5.0).wronskian(), 1.0 / np.pi, delta=1e-10)
        x = np.random.RandomState(1).uniform(-50.0, 5.0, 1000)
        wronskian = ai_real(x) * bi_prime(x) - ai_prime(x) * bi_real(x)
        np.testing.assert_allclose(wronskian, 1.0 / np.pi, rtol=0, atol=1e-10)

    def test_6_scalar_and_array_shapes(self):
        self.assertIsInstance(ai_real(1.0), float)
        self.assertEqual(ai_real(np.zeros((2, 3))).shape, (2, 3))

    def test_7_domain_and_range(self):
        with self.assertRaises(DomainError):
            ai_real(float('inf'))
        with self.assertRaises(DomainError):
            bi_real(np.array([0.0, float('nan')]))
        with self.assertRaises(AiryRangeError):
            bi_real(150.0)
        with self.assertRaises(AiryRangeError):
            airy_pair(101.0)


class ComplexAiryTest(TestBase):
    def test_1_real_axis(self):
        x = np.linspace(-50.0, 20.0, 701)
        expected = ai_real(x)
        actual = ai_complex(x + 0j)
        np.testing.assert_allclose(actual.real, expected, rtol=0, atol=1e-12)
        np.testing.assert_allclose(actual.imag, 0.0, rtol=0, atol=1e-12)

    def test_2_conjugation(self):
        w = np.array([1 + 1j, -7.5 + 3j, 12 - 40j, -150 + 0.5j])
        np.testing.assert_allclose(ai_complex(np.conj(w)), np.conj(ai_complex(w)), rtol=1e-13)

    def test_3_against_oracle(self):
        for w in [1 + 1j, -5 + 2j, 10 - 3j, -20 + 10j, 30 + 5j, -3 - 0.5j, 0.2 + 45j]:
            expected = oracle_ai(w)
            self.assertLessEqual(abs(ai_complex(w) - expected), 1e-10 * abs(expected), msg='w=%s' % w)

    def test_4_scaled(self):
        w = np.array([170.3 - 240.0 + 0.02j, 5 + 1j, -30 + 2j])
        scaled = ai_complex(w, scaled=True)
        for value, point in zip(scaled, w):
            with mpmath.workdps(40):
                arg = mpmath.mpc(point.real, point.imag)
                expected = complex(mpmath.airyai(arg) * mpmath.exp(mpmath.mpf(2) / 3 * arg ** mpmath.mpf(1.5)))
            self.assertLessEqual(abs(value - expected), 1e-10 * abs(expected))

    def test_5_domain(self):
        with self.assertRaises(DomainError):
            ai_complex(1 + 2e3j)
        with self.assertRaises(DomainError):
            ai_complex(complex('nan+1j'))


class ReflectionPhaseTest(TestBase):
    def test_1_phase_at_zero(self):
        self.assertAlmostEqual(reflection_phase(0.0), np.pi / 3, delta=1e-12)
        rho = reflection_factor(0.0)
        self.assertAlmostEqual(abs(rho - np.exp(1j * np.pi / 3)), 0.0, delta=1e-12)

    def test_2_increasing(self):
        self.assertLess(reflection_phase(5.0), reflection_phase(6.0))
        phase = reflection_phase(np.linspace(-10.0, 100.0, 20001))
        self.assertTrue(np.all(np.diff(phase) > 0))

    def test_3_asymptote(self):
        self.assertAlmostEqual(reflection_phase(25.0) - np.pi / 2, 4.0 / 3.0 * 125.0, delta=0.05)
        deviation = reflection_phase(20.0) - (np.pi / 2 + 4.0 / 3.0 * 20.0 ** 1.5)
        self.assertLessEqual(abs(deviation), 0.05)
        far = reflection_phase(80.0) - (np.pi / 2 + 4.0 / 3.0 * 80.0 ** 1.5)
        self.assertLess(abs(far), abs(deviation))

    def test_4_unit_modulus(self):
        eps = np.linspace(-300.0, 3000.0, 10001)
        np.testing.assert_allclose(np.abs(reflection_factor(eps)), 1.0, rtol=0, atol=1e-12)

    def test_5_factor_matches_phase(self):
        eps = np.linspace(-5.0, 40.0, 301)
        np.testing.assert_allclose(reflection_factor(eps), np.exp(1j * reflection_phase(eps)), rtol=0, atol=1e-9)
