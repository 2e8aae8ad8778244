'''
Command line interface.

    airy-bounce [-v] [--config PATH] [--out PATH] <command> [options]

Commands print CSV tables or JSON documents for external plotting:

    pattern       detector pattern: exact, far-field and uniform Airy model
    momentum      velocity distribution of the image wave and its model
    model         the uniform Airy model alone, same columns as pattern
    fisher        the Fisher information report
    sweep         Fisher information over T, sigma_v or z0
    density       densities of the source and image waves over (t, z)
    trajectories  classical paths from the source to the detector, above the branchpoint
    scales        natural scales and the derived parameters of the experiment

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
errors and 4 when the semiclassical model is used out of its range.
'''
import argparse
import contextlib
import sys

import numpy as np

from airy_bounce import __version__
from airy_bounce.config import SWEEP_AXES, load_config
from airy_bounce.exceptions import AiryBounceError, ConfigError, DomainError
from airy_bounce.fisher import fisher_report, fisher_simple
from airy_bounce.output import columns, write_csv, write_json
from airy_bounce.pipeline import Gravimeter
from airy_bounce.propagation import detector_window, farfield_map
from airy_bounce.semiclassical import ModelParams, branchpoint, classical_paths, gamma, model_pattern, optimal_v0
from airy_bounce.sweeps import run_sweep, sweep_header, sweep_record

import logging
logger = logging.getLogger(__name__)

PATTERN_HEADER = ['Z_m', 'prob_density_exact', 'prob_density_farfield', 'prob_density_model']
MOMENTUM_HEADER = ['v1_mps', 'prob_density', 'prob_density_model']
DENSITY_HEADER = ['t_s', 'z_m', 'prob_density_source', 'prob_density_image']
TRAJECTORY_HEADER = ['Z_m', 'path', 't_b_s', 'v0_mps', 't_s', 'z_m']


class CommandLine(object):
    '''
    The CommandLine class runs one command against a loaded configuration.

    Every command is a run_<command> method writing its result to the stream.
    '''
    def __init__(self, cfg, stream, threads=None):
        self.cfg = cfg
        self.stream = stream
        self.threads = threads

    def run(self, command, **options):
        method = getattr(self, 'run_%s' % command, None)
        if method is None:
            raise ConfigError('unknown command %r' % command)
        logger.info("Running %s", command)
        return method(**options)

    def gravimeter(self):
        return Gravimeter.from_config(self.cfg)

    def run_pattern(self, **options):
        gm = self.gravimeter()
        Z = gm.detector_grid()
        exact = gm.exact_pattern(Z)
        farfield = gm.farfield_pattern(Z)
        model = gm.model_pattern(Z) ** 2
        write_csv(self.stream, PATTERN_HEADER, columns(Z, exact, farfield, model))

    def run_model(self, **options):
        p, c, grid = self.cfg.wavepacket, self.cfg.constants, self.cfg.grid
        Z = detector_window(p.z0, p.T, c.g, below=grid.detector_below, above=grid.detector_above, n=grid.detector_n)
        model = model_pattern(Z, ModelParams.from_wavepacket(p, c), c) ** 2
        write_csv(self.stream, PATTERN_HEADER, columns(Z, None, None, model))

    def run_momentum(self, **options):
        gm = self.gravimeter()
        c = gm.constants
        # velocities mapped onto the detector window in the far-field limit
        v1 = farfield_map(gm.detector_grid(), gm.wavepacket.T, gm.wavepacket.z0, c) / c.m
        density = c.m * gm.momentum.sample_density(c.m * v1)
        model = gm.farfield_model(v1) ** 2
        write_csv(self.stream, MOMENTUM_HEADER, columns(v1, density, model))

    def run_fisher(self, **options):
        cfg = self.cfg
        report = fisher_report(cfg.wavepacket, cfg.constants, numerics=cfg.numerics, grid=cfg.grid, with_momentum=True)
        ratio = np.sqrt(report.i_z / report.i_s)
        low, high = cfg.agreement_band
        if not low <= ratio <= high:
            logger.warning("sqrt(I_Z / I_S) = %.4g is outside of the agreement band [%s, %s]", ratio, low, high)
        write_json(self.stream, report.as_dict())

    def run_sweep(self, axis=None, **options):
        cfg = self.cfg if axis is None else self.cfg.with_sweep_axis(axis)
        rows = run_sweep(cfg, threads=self.threads)
        write_csv(self.stream, sweep_header(cfg.sweep.axis), (sweep_record(row) for row in rows))

    def run_density(self, **options):
        d = self.cfg.density
        gm = self.gravimeter()
        times = np.linspace(0.0, d.t_max, d.n_times)
        z = np.linspace(d.z_min, d.z_max, d.n_z)

        def rows():
            for t in times:
                source = gm.position_wave(t, source=True).sample_density(z, fill=0.0)
                image = gm.position_wave(t).sample_density(z, fill=0.0)
                for row in columns(np.full(z.size, t), z, source, image):
                    yield row

        write_csv(self.stream, DENSITY_HEADER, rows())

    def run_trajectories(self, paths=5, samples=101, **options):
        if paths < 1:
            raise ConfigError('should be at least 1, got %r' % paths, key_path='paths')
        if samples < 2:
            raise ConfigError('should be at least 2, got %r' % samples, key_path='samples')
        p, c, grid = self.cfg.wavepacket, self.cfg.constants, self.cfg.grid
        bp = branchpoint(p.z0, p.T, c.g)
        times = np.linspace(0.0, p.T, samples)
        # the first position is the branchpoint, where the two paths merge
        positions = np.linspace(bp.Z_c_exact, bp.Z_c + grid.detector_above, paths)

        def rows():
            for Z in positions:
                for index, path in enumerate(classical_paths(p.z0, Z, p.T, c.g)):
                    z = path.altitude(times)
                    for t, altitude in zip(times, z):
                        yield [Z, index, path.t_b, path.v0, t, altitude]

        write_csv(self.stream, TRAJECTORY_HEADER, rows())

    def run_scales(self, **options):
        p, c = self.cfg.wavepacket, self.cfg.constants
        gm = self.gravimeter()
        s = gm.scales
        bp = branchpoint(p.z0, p.T, c.g)
        write_json(self.stream, {
            'l_gqs_m': s.l_gqs,
            'e_gqs_J': s.e_gqs,
            't_gqs_s': s.t_gqs,
            'v_gqs_mps': s.v_gqs,
            'sigma_z_m': p.sigma_z(c),
            'gamma': gamma(p.sigma_v, c),
            'branchpoint': {'Z_c_m': bp.Z_c, 'v_c_mps': bp.v_c, 'z_c_m': bp.z_c, 'Z_c_exact_m': bp.Z_c_exact},
            'optimal_v0_mps': optimal_v0(p.z0, c.g),
            'i_s': fisher_simple(p, c),
            'sqrt_i_s': np.sqrt(fisher_simple(p, c)),
        })


def create_parser():
    parser = argparse.ArgumentParser(prog='airy-bounce', description='Single-bounce quantum gravimeter simulation')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    parser.add_argument('-v', '--verbose', action='count', default=0, help='log progress (-v) or details (-vv) to stderr')
    parser.add_argument('--config', metavar='PATH', help='JSON configuration file')
    parser.add_argument('--out', metavar='PATH', help='output file instead of the standard output')
    parser.add_argument('--threads', metavar='N', type=int, help='worker threads of the sweeps')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    subparsers.add_parser('pattern', help='detector pattern at the time of flight')
    subparsers.add_parser('momentum', help='velocity distribution of the image wave')
    subparsers.add_parser('model', help='uniform Airy model of the detector pattern')
    subparsers.add_parser('fisher', help='Fisher information report')
    sweep    = subparsers.add_parser('sweep', help='Fisher information over a parameter')
    sweep.add_argument('--axis', choices=SWEEP_AXES, help='swept parameter, overrides sweep.axis')
    subparsers.add_parser('density', help='source and image densities over time and altitude')
    trajectories = subparsers.add_parser('trajectories', help='classical paths to the detector')
    trajectories.add_argument('--paths', metavar='N', type=int, default=5, help='detector positions from the branchpoint up')
    trajectories.add_argument('--samples', metavar='N', type=int, default=101, help='times per path')
    subparsers.add_parser('scales', help='natural scales and derived parameters')
    return parser


def configure_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format='%(levelname)s %(name)s: %(message)s')


@contextlib.contextmanager
def open_output(path):
    if path is None:
        yield sys.stdout
        return
    try:
        stream = open(path, 'w', encoding='utf-8', newline='')
    except OSError as e:
        raise ConfigError('can not write %s: %s' % (path, e.strerror))
    with stream:
        yield stream


def main(argv=None):
    args = create_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        try:
            cfg = load_config(args.config)
        except DomainError as e:
            raise ConfigError(str(e))
        options = {}
        if args.command == 'sweep':
            options['axis'] = args.axis
        if args.command == 'trajectories':
            options.update(paths=args.paths, samples=args.samples)
        with open_output(args.out) as stream:
            CommandLine(cfg, stream, threads=args.threads).run(args.command, **options)
    except AiryBounceError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    return 0
