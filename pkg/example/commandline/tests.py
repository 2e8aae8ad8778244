import csv
import io
import json
import os
import shutil
import tempfile
import threading
import time
import unittest

import mock
import numpy as np
from scipy import integrate

from airy_bounce import __version__
from airy_bounce.cli import CommandLine, DENSITY_HEADER, MOMENTUM_HEADER, PATTERN_HEADER, TRAJECTORY_HEADER, main
from airy_bounce.config import DEFAULTS, build_config, dump_config, load_config, parse_config
from airy_bounce.exceptions import ConfigError, ResolutionError
from airy_bounce.output import columns, format_value, write_csv, write_json
from airy_bounce.pipeline import Gravimeter
from airy_bounce.semiclassical import optimal_v0
from airy_bounce.sweeps import (
    THREADS_ENVIRONMENT, SweepRow,
    resolve_threads, run_sweep, sweep_header, sweep_point, sweep_record, sweep_values, sweep_wavepacket,
)

CONFIGS = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'configs')


def config_path(name):
    return os.path.join(CONFIGS, name)


class TestBase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmp)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def write(self, name, text):
        with open(self.path(name), 'w', encoding='utf-8') as f:
            f.write(text)
        return self.path(name)

    def read(self, name):
        with open(self.path(name), 'rb') as f:
            return f.read()

    def table(self, name):
        text = self.read(name).decode('utf-8')
        rows = list(csv.reader(io.StringIO(text)))
        return rows[0], rows[1:]

    def assertConfigError(self, document, key_path):
        with self.assertRaises(ConfigError) as e:
            build_config(document)
        self.assertEqual(e.exception.key_path, key_path)
        self.assertTrue(str(e.exception).startswith(key_path))


class ConfigTest(TestBase):
    def test_1_defaults(self):
        cfg = load_config()
        self.assertEqual(cfg.wavepacket.z0, 1e-3)
        self.assertEqual(cfg.wavepacket.v0, -0.0915)
        self.assertEqual(cfg.wavepacket.sigma_v, 0.079)
        self.assertEqual(cfg.wavepacket.T, 0.3)
        self.assertEqual(cfg.grid.n, 2 ** 16)
        self.assertEqual(cfg.sweep.axis, 'T')
        self.assertEqual(cfg.agreement_band, (0.7, 1.3))
        self.assertEqual(cfg.document, DEFAULTS)

    def test_2_empty_file(self):
        cfg = load_config(self.write('empty.json', '  \n'))
        self.assertEqual(cfg.document, DEFAULTS)

    def test_3_partial_file(self):
        cfg = load_config(config_path('few_fringes.json'))
        self.assertEqual(cfg.wavepacket.sigma_v, 0.015)
        self.assertEqual(cfg.wavepacket.z0, 1e-3)

    def test_4_key_paths(self):
        self.assertConfigError({'wavepacket': {'z0_m': 1e-6}}, 'wavepacket.z0_m')
        self.assertConfigError({'wavepacket': {'T_s': 'long'}}, 'wavepacket.T_s')
        self.assertConfigError({'wavepacket': {'sigma_v_mps': 0.2}}, 'wavepacket.sigma_v_mps')
        self.assertConfigError({'grid': {'size': 3}}, 'grid.size')
        self.assertConfigError({'grid': {'n': 1000}}, 'grid.n')
        self.assertConfigError({'grid': {'n': 512}}, 'grid.n')
        self.assertConfigError({'numerics': {'agreement_band': [0.7]}}, 'numerics.agreement_band')
        self.assertConfigError({'numerics': {'delta_g_rel': 0.5}}, 'numerics.delta_g_rel')
        self.assertConfigError({'constants': {'g': 981.0}}, 'constants.g')
        self.assertConfigError({'sweep': {'axis': 'sigma_v', 'min': 0.04, 'max': 0.2}}, 'sweep.max')
        self.assertConfigError({'sweep': {'axis': 'mass'}}, 'sweep.axis')
        self.assertConfigError({'bogus': {}}, 'bogus')

    def test_5_syntax_error(self):
        with self.assertRaises(ConfigError) as e:
            parse_config('{\n  "grid": {"n": 1024,}\n}\n')
        self.assertEqual(e.exception.line, 2)
        self.assertIsNotNone(e.exception.column)
        self.assertIn('line 2', str(e.exception))

    def test_6_not_an_object(self):
        with self.assertRaises(ConfigError):
            parse_config('[1, 2]')

    def test_7_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config(self.path('missing.json'))

    def test_8_dump_round_trip(self):
        cfg = load_config(config_path('sweep_T.json'))
        again = parse_config(dump_config(cfg))
        self.assertEqual(again.document, cfg.document)
        self.assertEqual(again.sweep, cfg.sweep)
        self.assertTrue(dump_config(cfg).endswith('}\n'))

    def test_9_sweep_axis_override(self):
        cfg = build_config({'sweep': {'min': 0.04, 'max': 0.1}})
        self.assertEqual(cfg.with_sweep_axis('sigma_v').sweep.axis, 'sigma_v')
        self.assertEqual(cfg.sweep.axis, 'T')
        # a time range kept for the velocity dispersion
        with self.assertRaises(ConfigError):
            build_config({'sweep': {'min': 0.3, 'max': 1.0}}).with_sweep_axis('sigma_v')

    def test_10_default_sweep_ranges(self):
        cfg = load_config()
        self.assertIsNone(cfg.document['sweep']['min'])
        self.assertEqual((cfg.sweep.min, cfg.sweep.max), (0.1, 1.0))
        sweep = cfg.with_sweep_axis('sigma_v').sweep
        self.assertEqual((sweep.min, sweep.max), (0.04, 0.12))
        sweep = cfg.with_sweep_axis('z0').sweep
        self.assertEqual((sweep.min, sweep.max), (5e-4, 5e-3))
        sweep = build_config({'sweep': {'axis': 'sigma_v', 'max': 0.1}}).sweep
        self.assertEqual((sweep.min, sweep.max), (0.04, 0.1))
        sweep = build_config({'limits': {'sigma_v_max_mps': 0.1}, 'sweep': {'axis': 'sigma_v'}}).sweep
        self.assertEqual(sweep.max, 0.1)
        self.assertEqual(build_config({'sweep': {'min': None, 'max': 0.6}}).sweep.min, 0.1)
        self.assertConfigError({'sweep': {'min': 'low'}}, 'sweep.min')
        self.assertConfigError({'sweep': {'min': -0.1}}, 'sweep.min')
        self.assertConfigError({'sweep': {'axis': 'z0', 'max': 1e-4}}, 'sweep.max')


class SweepTest(TestBase):
    def test_1_threads(self):
        self.assertEqual(resolve_threads(3), 3)
        with mock.patch.dict(os.environ, {THREADS_ENVIRONMENT: '4'}):
            self.assertEqual(resolve_threads(), 4)
            self.assertEqual(resolve_threads(2), 2)
        with mock.patch.dict(os.environ, {THREADS_ENVIRONMENT: ''}):
            self.assertEqual(resolve_threads(), 1)
        with mock.patch.dict(os.environ, {THREADS_ENVIRONMENT: 'many'}):
            with self.assertRaises(ConfigError):
                resolve_threads()
        with self.assertRaises(ConfigError):
            resolve_threads(0)

    def test_2_values(self):
        cfg = build_config({'sweep': {'min': 0.1, 'max': 1.0, 'n_points': 4}})
        np.testing.assert_allclose(sweep_values(cfg), [0.1, 0.3, 0.4, 0.7, 1.0], rtol=1e-12)
        cfg = build_config({'sweep': {'min': 0.1, 'max': 1.0, 'n_points': 10}})
        self.assertEqual(len(sweep_values(cfg)), 10)
        cfg = build_config({'sweep': {'min': 0.1, 'max': 1.0, 'n_points': 4, 'include_reference': False}})
        self.assertEqual(len(sweep_values(cfg)), 4)

    def test_3_coupled_velocity(self):
        document = {'sweep': {'axis': 'z0', 'min': 5e-4, 'max': 2e-3, 'n_points': 3, 'couple_v0': True}}
        cfg = build_config(document)
        p = sweep_wavepacket(cfg, 2e-3)
        self.assertEqual(p.z0, 2e-3)
        self.assertEqual(p.v0, optimal_v0(2e-3, cfg.constants.g))
        document['sweep']['couple_v0'] = False
        self.assertEqual(sweep_wavepacket(build_config(document), 2e-3).v0, -0.0915)

    def test_4_failed_point(self):
        cfg = load_config()
        with mock.patch('airy_bounce.sweeps.position_information', side_effect=ResolutionError('too coarse')):
            with self.assertLogs('airy_bounce.sweeps', level='WARNING'):
                row = sweep_point(cfg, 0.3)
        self.assertTrue(row.failed)
        self.assertEqual(row.status, 'failed')
        out = io.StringIO()
        write_csv(out, sweep_header('T'), [sweep_record(row)])
        self.assertEqual(out.getvalue(), 'T_s,v0_mps,sqrt_i_z,sqrt_i_s,sqrt_i_p,cr_relative,status\n0.3,-0.0915,,,,,failed\n')

    def test_5_invalid_point(self):
        cfg = build_config({'sweep': {'axis': 'z0', 'min': 5e-4, 'max': 2e-3}})
        with self.assertLogs('airy_bounce.sweeps', level='WARNING'):
            row = sweep_point(cfg, -1.0)
        self.assertTrue(row.failed)

    def test_6_rows_keep_the_order(self):
        cfg = build_config({'sweep': {'min': 0.1, 'max': 1.0, 'n_points': 8, 'include_reference': False}})
        workers = set()

        def point(cfg, value):
            workers.add(threading.current_thread().name)
            time.sleep(0.05 * (1.0 - value))
            return SweepRow(value=value, v0=0.0)

        with mock.patch('airy_bounce.sweeps.sweep_point', side_effect=point):
            rows = run_sweep(cfg, threads=4)
        self.assertEqual([row.value for row in rows], sweep_values(cfg))
        self.assertGreater(len(workers), 1)

    def test_7_velocity_dispersion_sweep(self):
        cfg = build_config({
            'grid': {'n': 2 ** 17},
            'numerics': {'check_step': False},
            'sweep': {'axis': 'sigma_v', 'min': 0.06, 'max': 0.1, 'n_points': 2, 'include_reference': False},
        })
        rows = run_sweep(cfg, threads=2)
        self.assertEqual([row.value for row in rows], [0.06, 0.1])
        self.assertEqual([row.status for row in rows], ['ok', 'ok'])
        self.assertEqual({row.v0 for row in rows}, {-0.0915})
        self.assertLess(rows[0].sqrt_i_z, rows[1].sqrt_i_z)

    def test_8_coupled_altitude_sweep(self):
        cfg = build_config({
            'numerics': {'check_step': False},
            'sweep': {'axis': 'z0', 'min': 5e-4, 'max': 2e-3, 'n_points': 2, 'couple_v0': True, 'include_reference': False},
        })
        rows = run_sweep(cfg, threads=2)
        self.assertEqual([row.value for row in rows], [5e-4, 2e-3])
        self.assertEqual([row.status for row in rows], ['ok', 'ok'])
        for row in rows:
            self.assertEqual(row.v0, optimal_v0(row.value, cfg.constants.g))
        self.assertLess(rows[0].sqrt_i_z, rows[1].sqrt_i_z)


class CommandLineTest(TestBase):
    def test_1_exit_codes(self):
        self.assertEqual(main(['--config', self.path('missing.json'), 'scales']), 2)
        self.assertEqual(main(['--config', self.write('bad.json', '{"grid": {"n": 3}}'), 'scales']), 2)
        self.assertEqual(main(['--config', config_path('few_fringes.json'), '--out', self.path('s.json'), 'scales']), 4)
        with mock.patch.object(Gravimeter, 'from_config', side_effect=ResolutionError('too coarse')):
            self.assertEqual(main(['--out', self.path('p.csv'), 'pattern']), 3)
        self.assertEqual(main(['--config', config_path('sweep_T.json'), 'sweep', '--axis', 'sigma_v']), 2)
        self.assertEqual(main(['--out', os.path.join(self.tmp, 'missing', 'out.csv'), 'scales']), 2)

    def test_2_usage(self):
        with self.assertRaises(SystemExit):
            main(['bounce'])
        with self.assertRaises(ConfigError):
            CommandLine(load_config(), io.StringIO()).run('bounce')

    def test_3_version(self):
        out = io.StringIO()
        with mock.patch('sys.stdout', out):
            with self.assertRaises(SystemExit) as e:
                main(['--version'])
        self.assertEqual(e.exception.code, 0)
        self.assertIn(__version__, out.getvalue())

    def test_4_scales(self):
        self.assertEqual(main(['--out', self.path('scales.json'), 'scales']), 0)
        document = json.loads(self.read('scales.json').decode('utf-8'))
        self.assertAlmostEqual(document['l_gqs_m'] / 5.87e-6, 1.0, delta=1e-3)
        self.assertAlmostEqual(document['gamma'], 178.7, delta=0.5)
        self.assertAlmostEqual(document['branchpoint']['Z_c_m'], -0.37033, delta=1e-5)
        self.assertAlmostEqual(document['branchpoint']['v_c_mps'], 0.24261, delta=1e-5)
        self.assertAlmostEqual(document['optimal_v0_mps'], -0.0809, delta=1e-4)
        self.assertAlmostEqual(document['sqrt_i_s'], 3.04e4, delta=100)

    def test_5_model(self):
        self.assertEqual(main(['--out', self.path('model.csv'), 'model']), 0)
        header, rows = self.table('model.csv')
        self.assertEqual(header, PATTERN_HEADER)
        self.assertEqual(len(rows), 2 ** 13)
        self.assertTrue(all(row[1] == '' and row[2] == '' and float(row[3]) >= 0 for row in rows))
        self.assertNotIn(b'\r', self.read('model.csv'))

    def test_6_pattern(self):
        self.assertEqual(main(['--config', config_path('wide_pattern.json'), '--out', self.path('pattern.csv'), 'pattern']), 0)
        header, rows = self.table('pattern.csv')
        self.assertEqual(header, PATTERN_HEADER)
        self.assertNotIn(b'\r', self.read('pattern.csv'))
        table = np.array(rows, dtype=float)
        Z, exact, farfield = table[:, 0], table[:, 1], table[:, 2]
        self.assertEqual(Z.size, 2 ** 17)
        self.assertAlmostEqual(integrate.trapezoid(exact, Z), 1.0, delta=1e-3)
        self.assertAlmostEqual(integrate.trapezoid(farfield, Z), 1.0, delta=1e-3)
        Z_c = -0.37033
        self.assertGreater(Z[np.argmax(exact)], Z_c)
        self.assertLess(exact[Z < Z_c - 5e-3].max(), 1e-3 * exact.max())

    def test_7_sweep(self):
        argv = ['--config', config_path('sweep_T.json'), '--threads', '2']
        self.assertEqual(main(argv + ['--out', self.path('first.csv'), 'sweep']), 0)
        self.assertEqual(main(argv + ['--out', self.path('second.csv'), 'sweep']), 0)
        self.assertEqual(self.read('first.csv'), self.read('second.csv'))
        header, rows = self.table('first.csv')
        self.assertEqual(header, sweep_header('T'))
        self.assertEqual([row[0] for row in rows], ['0.3', '1'])
        self.assertEqual([row[-1] for row in rows], ['ok', 'ok'])
        T = np.array([float(row[0]) for row in rows])
        sqrt_i_z = np.array([float(row[2]) for row in rows])
        sqrt_i_s = np.array([float(row[3]) for row in rows])
        self.assertAlmostEqual((sqrt_i_s[1] / T[1]) / (sqrt_i_s[0] / T[0]), 1.0, delta=1e-9)
        ratio = sqrt_i_z / sqrt_i_s
        self.assertTrue(np.all((ratio >= 0.7) & (ratio <= 1.3)), msg=str(ratio))
        self.assertTrue(all(row[4] == '' for row in rows))

    def test_8_fisher(self):
        self.assertEqual(main(['--config', config_path('quick_fisher.json'), '--out', self.path('fisher.json'), 'fisher']), 0)
        document = json.loads(self.read('fisher.json').decode('utf-8'))
        self.assertEqual(set(document), {'i_z', 'i_p', 'i_s', 'cr_relative', 'n_events', 'numerics'})
        self.assertGreater(document['i_z'], 0)
        self.assertGreater(document['i_p'], 0)
        self.assertAlmostEqual(document['cr_relative'], 1 / np.sqrt(document['i_z']), delta=1e-9 * document['cr_relative'])
        self.assertEqual(document['numerics']['grid_n'], 2 ** 16)

    def test_9_density(self):
        self.assertEqual(main(['--config', config_path('short_density.json'), '--out', self.path('density.csv'), 'density']), 0)
        header, rows = self.table('density.csv')
        self.assertEqual(header, DENSITY_HEADER)
        self.assertEqual(len(rows), 33)
        table = np.array(rows, dtype=float)
        self.assertEqual(sorted(set(table[:, 0])), [0.0, 0.005, 0.01])
        self.assertTrue(np.all(table[:, 2:] >= 0))

    def test_10_sweep_axis_switches_the_range(self):
        def point(cfg, value):
            return SweepRow(value=value, v0=cfg.wavepacket.v0)

        with mock.patch('airy_bounce.sweeps.sweep_point', side_effect=point):
            self.assertEqual(main(['--out', self.path('sigma_v.csv'), 'sweep', '--axis', 'sigma_v']), 0)
        header, rows = self.table('sigma_v.csv')
        self.assertEqual(header, sweep_header('sigma_v'))
        values = [float(row[0]) for row in rows]
        self.assertEqual(len(values), 11)
        self.assertEqual((values[0], values[-1]), (0.04, 0.12))
        self.assertIn(0.079, values)

    def test_11_momentum(self):
        self.assertEqual(main(['--out', self.path('momentum.csv'), 'momentum']), 0)
        header, rows = self.table('momentum.csv')
        self.assertEqual(header, MOMENTUM_HEADER)
        self.assertNotIn(b'\r', self.read('momentum.csv'))
        table = np.array(rows, dtype=float)
        v1, density, model = table[:, 0], table[:, 1], table[:, 2]
        self.assertEqual(v1.size, 2 ** 13)
        self.assertTrue(np.all(np.diff(v1) > 0))
        self.assertTrue(np.all(density >= 0) and np.all(model >= 0))
        v_c = 0.24261
        self.assertLess(density[v1 < v_c - 5e-3].max(), 1e-2 * density.max())
        self.assertAlmostEqual(density.max() / model.max(), 1.0, delta=0.1)

    def test_12_trajectories(self):
        argv = ['--out', self.path('paths.csv'), 'trajectories', '--paths', '3', '--samples', '11']
        self.assertEqual(main(argv), 0)
        header, rows = self.table('paths.csv')
        self.assertEqual(header, TRAJECTORY_HEADER)
        # a single path at the branchpoint, two above it
        self.assertEqual(len(rows), 5 * 11)
        self.assertEqual([row[1] for row in rows[::11]], ['0', '0', '1', '0', '1'])
        table = np.array(rows, dtype=float)
        Z, t, z = table[:, 0], table[:, 4], table[:, 5]
        np.testing.assert_allclose(z[t == 0.0], 1e-3, rtol=0, atol=1e-12)
        np.testing.assert_allclose(z[t == 0.3], Z[t == 0.3], rtol=0, atol=1e-9)
        self.assertAlmostEqual(Z[0], -0.37033, delta=1e-3)
        self.assertEqual(main(['--out', self.path('none.csv'), 'trajectories', '--paths', '0']), 2)


class OutputTest(unittest.TestCase):
    def test_1_format_value(self):
        self.assertEqual(format_value(None), '')
        self.assertEqual(format_value(True), 'true')
        self.assertEqual(format_value(np.bool_(False)), 'false')
        self.assertEqual(format_value(3), '3')
        self.assertEqual(format_value(np.int64(3)), '3')
        self.assertEqual(format_value(0.1), '0.1')
        self.assertEqual(format_value(1.0 / 3.0), '0.333333333333')
        self.assertEqual(format_value(np.float64(2.5e-7)), '2.5e-07')
        self.assertEqual(format_value('ok'), 'ok')

    def test_2_columns(self):
        self.assertEqual(list(columns(np.arange(2), None)), [[0, None], [1, None]])

    def test_3_csv(self):
        out = io.StringIO()
        write_csv(out, ['a', 'b'], columns([1.5, 2.0], None))
        self.assertEqual(out.getvalue(), 'a,b\n1.5,\n2,\n')

    def test_4_json(self):
        out = io.StringIO()
        write_json(out, {'b': float('nan'), 'a': [np.float64(1.0 / 3.0), np.int64(2)], 'c': {'d': None}})
        self.assertEqual(json.loads(out.getvalue()), {'a': [0.333333333333, 2], 'b': None, 'c': {'d': None}})
        self.assertTrue(out.getvalue().endswith('}\n'))
        self.assertLess(out.getvalue().index('"a"'), out.getvalue().index('"b"'))
