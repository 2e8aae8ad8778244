import unittest
from dataclasses import replace

import mock
import numpy as np

from airy_bounce.energy import WavepacketParams
from airy_bounce.exceptions import DomainError, ModelValidityError, StepError
from airy_bounce.fisher import (
    FisherReport, MomentumTerms,
    cramer_rao, fisher_report, fisher_simple, momentum_terms, position_information,
    fisher_momentum, fisher_momentum_terms, fisher_position,
    _g_derivative, _richardson,
)
from airy_bounce.pipeline import Gravimeter, GridSettings, Numerics
from airy_bounce.propagation import Axis, GriddedWavefunction
from airy_bounce.scales import PhysicalConstants
from airy_bounce.semiclassical import optimal_v0

PAPER = WavepacketParams(z0=1e-3, v0=-0.0915, sigma_v=0.079, T=0.3)


class TestBase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.constants = PhysicalConstants()
        cls.gravimeter = Gravimeter(cls.constants, PAPER)
        cls.i_z = position_information(cls.gravimeter)

    def setUp(self):
        self.c = self.constants
        self.gm = self.gravimeter

    def information(self, p, **numerics):
        return position_information(Gravimeter(self.c, p, numerics=Numerics(**numerics)))


class SimpleInformationTest(unittest.TestCase):
    def setUp(self):
        self.c = PhysicalConstants()

    def test_1_reference_value(self):
        self.assertAlmostEqual(np.sqrt(fisher_simple(PAPER, self.c)), 3.04e4, delta=100)

    def test_2_closed_form(self):
        c, p = self.c, PAPER
        expected = 2 * c.m ** 2 * c.g * p.z0 * p.sigma_v ** 2 * p.T ** 2 / (3 * c.hbar ** 2)
        self.assertAlmostEqual(fisher_simple(p, c) / expected, 1.0, delta=1e-12)

    def test_3_scaling_laws(self):
        base = fisher_simple(PAPER, self.c)
        self.assertAlmostEqual(fisher_simple(replace(PAPER, T=0.6), self.c) / base, 4.0, delta=1e-12)
        self.assertAlmostEqual(fisher_simple(replace(PAPER, sigma_v=0.158), self.c) / base, 4.0, delta=1e-12)
        self.assertAlmostEqual(fisher_simple(replace(PAPER, z0=3e-3), self.c) / base, 3.0, delta=1e-12)

    def test_4_needs_many_fringes(self):
        with self.assertRaises(ModelValidityError):
            fisher_simple(replace(PAPER, sigma_v=0.015), self.c)


class CramerRaoTest(unittest.TestCase):
    def test_1_bound(self):
        self.assertAlmostEqual(cramer_rao(1e8), 1e-4, delta=1e-16)
        self.assertAlmostEqual(cramer_rao(1e8, n_events=100), 1e-5, delta=1e-17)

    def test_2_zero_information(self):
        with self.assertLogs('airy_bounce.fisher', level='WARNING'):
            self.assertEqual(cramer_rao(0.0), float('inf'))

    def test_3_invalid(self):
        with self.assertRaises(DomainError):
            cramer_rao(-1.0)
        with self.assertRaises(DomainError):
            cramer_rao(float('nan'))
        with self.assertRaises(DomainError):
            cramer_rao(1e8, n_events=0)
        with self.assertRaises(DomainError):
            cramer_rao(1e8, n_events=float('inf'))


class PositionInformationTest(TestBase):
    def test_1_close_to_the_simple_estimate(self):
        ratio = np.sqrt(self.i_z / fisher_simple(PAPER, self.c))
        self.assertTrue(0.7 <= ratio <= 1.3, msg='sqrt(I_Z / I_S) = %s' % ratio)

    def test_2_step_robustness(self):
        values = [self.information(PAPER, delta_g_rel=delta, check_step=False) for delta in (1e-5, 1e-6, 1e-7)]
        np.testing.assert_allclose(values, self.i_z, rtol=0.01)

    def test_3_increases_with_the_time_of_flight(self):
        values = [self.information(replace(PAPER, T=T)) for T in (0.1, 0.6, 1.0)]
        values.insert(1, self.i_z)
        self.assertTrue(all(a < b for a, b in zip(values, values[1:])), msg=str(values))

    def test_4_increases_with_the_velocity_dispersion(self):
        grid = GridSettings(n=2 ** 17)
        values = [
            position_information(Gravimeter(self.c, replace(PAPER, sigma_v=sigma_v), grid=grid))
            for sigma_v in (0.04, 0.06, 0.079, 0.1, 0.12)
        ]
        self.assertTrue(all(a < b for a, b in zip(values, values[1:])), msg=str(values))

    def test_5_increases_with_the_altitude(self):
        values = [
            self.information(replace(PAPER, z0=z0, v0=optimal_v0(z0, self.c.g)))
            for z0 in (0.5e-3, 1e-3, 2e-3)
        ]
        self.assertTrue(all(a < b for a, b in zip(values, values[1:])), msg=str(values))

    def test_6_step_check(self):
        gm = mock.Mock()
        gm.detector_wave.return_value = mock.Mock(plan=None, spacing=1e-6)
        gm.constants = self.c
        gm.numerics = Numerics()

        def derivative(gravimeter, delta, wave):
            return np.full(16, 1.0 + 1e5 * delta)

        with mock.patch('airy_bounce.fisher._g_derivative', side_effect=derivative):
            with self.assertRaises(StepError):
                position_information(gm)
            gm.numerics = Numerics(check_step=False)
            self.assertGreater(position_information(gm), 0.0)

    def test_7_perturbed_grids_must_match(self):
        gm = mock.Mock()
        gm.perturbed.side_effect = lambda delta: delta
        gm.constants = self.c

        def wave(delta):
            return GriddedWavefunction(Axis.position, delta, 1.0 + delta, 4, 0.3, np.ones(4))

        with self.assertRaises(StepError):
            _g_derivative(gm, 1e-6, wave)

    def test_8_perturbed_pipelines_share_the_grids(self):
        nominal = self.gm.detector_wave()
        for delta in (1e-5, -1e-5, 1e-7):
            plus = self.gm.perturbed(delta)
            wave = plus.detector_wave(plan=nominal.plan)
            self.assertEqual(wave.n, nominal.n)
            self.assertLess(abs(wave.x_min - nominal.x_min), 1e-6 * nominal.spacing)
        plus = self.gm.perturbed(1e-6)
        self.assertEqual(plus.momentum_start, self.gm.momentum.x_min)
        self.assertEqual(plus.wavepacket, self.gm.wavepacket)

    def test_9_deterministic(self):
        self.assertEqual(position_information(Gravimeter(self.c, PAPER)), self.i_z)

    def test_10_reference_point_with_the_step_check(self):
        self.assertTrue(self.gm.numerics.check_step)
        self.assertTrue(np.isfinite(self.i_z))
        self.assertGreater(self.i_z, 0.0)

    def test_11_fisher_position(self):
        self.assertEqual(fisher_position(PAPER, self.c), self.i_z)

    def test_12_extrapolation_removes_the_second_order(self):
        calls = []

        def central(gravimeter, delta, wave):
            calls.append(delta)
            return np.full(8, 2.0 + 1e10 * delta ** 2)

        with mock.patch('airy_bounce.fisher._g_derivative', side_effect=central):
            derivative = _richardson(mock.Mock(), None)
            np.testing.assert_allclose(derivative(1e-5), 2.0, rtol=1e-12)
            np.testing.assert_allclose(derivative(5e-6), 2.0, rtol=1e-12)
        self.assertEqual(calls, [1e-5, 5e-6, 2.5e-6])


class MomentumInformationTest(TestBase):
    def test_1_same_order_as_the_position_information(self):
        i_p = momentum_terms(self.gm).total
        self.assertTrue(0.1 < i_p / self.i_z < 10.0, msg='I_p / I_Z = %s' % (i_p / self.i_z))

    def test_2_propagation_term_grows_with_time(self):
        short = momentum_terms(self.gm)
        long = momentum_terms(Gravimeter(self.c, replace(PAPER, T=3.0)))
        self.assertEqual(short.gravity, long.gravity)
        ratio = np.sqrt(long.propagation / long.gravity) / np.sqrt(short.propagation / short.gravity)
        self.assertAlmostEqual(ratio, 10.0, delta=1e-8)

    def test_3_farfield_limit(self):
        p = replace(PAPER, T=10.0)
        gm = Gravimeter(self.c, p, numerics=Numerics(delta_g_rel=1e-8))
        i_z = position_information(gm)
        i_p = momentum_terms(gm).total
        self.assertAlmostEqual(i_z / i_p, 1.0, delta=0.05)

    def test_4_wavepacket_wrappers(self):
        terms = MomentumTerms(total=8e8, gravity=1e6, propagation=7e8)
        numerics = Numerics(check_step=False)
        with mock.patch('airy_bounce.fisher.momentum_terms', return_value=terms) as computed:
            self.assertEqual(fisher_momentum(PAPER, self.c, numerics=numerics), 8e8)
            self.assertIs(fisher_momentum_terms(PAPER, self.c), terms)
        self.assertEqual(computed.call_count, 2)
        gravimeter = computed.call_args_list[0][0][0]
        self.assertIsInstance(gravimeter, Gravimeter)
        self.assertEqual(gravimeter.wavepacket, PAPER)
        self.assertIs(gravimeter.numerics, numerics)


class ReportTest(unittest.TestCase):
    def test_1_report(self):
        c = PhysicalConstants()
        terms = MomentumTerms(total=8e8, gravity=1e6, propagation=7e8)
        with mock.patch('airy_bounce.fisher.position_information', return_value=9e8) as position:
            with mock.patch('airy_bounce.fisher.momentum_terms', return_value=terms):
                report = fisher_report(replace(PAPER, n_events=4), c)
        self.assertEqual(position.call_count, 1)
        self.assertIsInstance(report, FisherReport)
        document = report.as_dict()
        self.assertEqual(set(document), {'i_z', 'i_p', 'i_s', 'cr_relative', 'n_events', 'numerics'})
        self.assertEqual(document['i_p'], 8e8)
        self.assertEqual(document['n_events'], 4)
        self.assertAlmostEqual(document['cr_relative'], 1.0 / np.sqrt(4 * 9e8), delta=1e-15)
        self.assertEqual(document['numerics'], {'delta_g_rel': 1e-6, 'grid_n': 2 ** 16})

    def test_2_without_momentum(self):
        c = PhysicalConstants()
        with mock.patch('airy_bounce.fisher.position_information', return_value=9e8):
            with mock.patch('airy_bounce.fisher.momentum_terms') as terms:
                report = fisher_report(PAPER, c, with_momentum=False)
        terms.assert_not_called()
        self.assertIsNone(report.i_p)
