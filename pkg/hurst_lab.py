#!/usr/bin/env python3
"""
hurst-lab: Hurst estimation by second-order quadratic variation for SDEs
driven by fractional Brownian motion, its limit constants and densities, and
the weighted-graph exponent calculus.

Every subcommand prints JSON on standard output. Errors print
{"error": ..., "message": ...} and exit with status 1.
"""
import os
import sys
import json
import logging
import argparse

from covariance import series_constants, inner_identities
from config import load_experiment
from estimator import estimate_from_path
from experiment import VERSION, run_experiment
from exponent import (
    catalog_entry, exact_l2_norm, exponent, load_graph, mc_l2_norm, order_slope,
)
from fgn import derive_stream, read_path_csv

logger = logging.getLogger('hurst_lab')

# Attributes of domain errors copied into the JSON error object.
ERROR_ATTRIBUTES = ('offset', 'step', 'tail_bound', 'k', 'diagnostics')
DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.realpath(__file__)), 'hurst_lab.yaml')


def emit(data):
    json.dump(data, sys.stdout, indent=4, ensure_ascii=False)
    sys.stdout.write('\n')


def cmd_constants(args):
    constants = series_constants(args.h, args.tol)
    result = constants.as_dict()
    result['identities'] = {name: {'computed': computed, 'closed_form': closed}
                            for name, (computed, closed) in inner_identities(args.h).items()}
    emit(result)


def cmd_simulate(args):
    experiment, config = load_experiment(args.config, full_scale=args.full_scale,
                                         out_dir=args.out_dir, workers=args.workers)
    emit(run_experiment(experiment, comments=config.get_comments()))


def cmd_estimate(args):
    _, values = read_path_csv(args.path)
    emit(estimate_from_path(values, args.n, args.h).as_dict())


def cmd_exponent(args):
    expected = None
    if os.path.exists(args.graph):
        graph = load_graph(args.graph)
    else:
        entry = catalog_entry(args.graph)
        graph, expected = entry.graph, entry.expected
    report = exponent(graph, args.h)
    result = report.as_dict()
    if expected is not None:
        result['name'] = args.graph
        result['expected'] = str(expected)
    print(report.table(), file=sys.stderr, flush=True)
    emit(result)


def cmd_ordercheck(args):
    entry = catalog_entry(args.name)
    rows = []
    for n in args.ns:
        row = {'n': n, 'exact': exact_l2_norm(args.name, n, args.h)}
        if args.reps:
            estimate, error = mc_l2_norm(args.name, n, args.h, args.reps,
                                         derive_stream(args.seed, 'order', n))
            row.update(mc=estimate, mc_se=error)
        rows.append(row)
    emit({
        'name': args.name, 'h': args.h,
        'exponent': str(entry.expected), 'exponent_value': entry.expected(args.h),
        'slope': order_slope(args.ns, [row['exact'] for row in rows]),
        'norms': rows,
    })


def cmd_version(args):
    emit({'version': VERSION})


def build_parser():
    parser = argparse.ArgumentParser(prog='hurst_lab', description=__doc__.strip().split('\n\n')[0])
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log INFO (-v) or DEBUG (-vv) to stderr')
    commands = parser.add_subparsers(dest='command', required=True)

    sub = commands.add_parser('constants', help='series constants for one Hurst parameter')
    sub.add_argument('--h', type=float, required=True)
    sub.add_argument('--tol', type=float, default=1e-10)
    sub.set_defaults(func=cmd_constants)

    sub = commands.add_parser('simulate', help='run a density-fit experiment')
    sub.add_argument('--config', default=DEFAULT_CONFIG, help='experiment YAML or JSON file')
    sub.add_argument('--full-scale', action='store_true',
                     help='use 10^5 histogram and 10^4 curve paths')
    sub.add_argument('--out-dir')
    sub.add_argument('--workers', type=int)
    sub.set_defaults(func=cmd_simulate)

    sub = commands.add_parser('estimate', help='estimate H from a path CSV (t,value)')
    sub.add_argument('--path', required=True)
    sub.add_argument('--n', type=int, required=True)
    sub.add_argument('--h', type=float, help='true H, to report the rescaled error')
    sub.set_defaults(func=cmd_estimate)

    sub = commands.add_parser('exponent', help='exponent of a weighted graph')
    sub.add_argument('--graph', required=True, help='graph JSON file or catalog name')
    sub.add_argument('--h', type=float)
    sub.set_defaults(func=cmd_exponent)

    sub = commands.add_parser('ordercheck', help='L2 norm order of a catalog functional')
    sub.add_argument('--name', required=True)
    sub.add_argument('--h', type=float, required=True)
    sub.add_argument('--ns', type=int, nargs='+', default=[64, 128, 256, 512, 1024])
    sub.add_argument('--reps', type=int, default=0, help='Monte Carlo replicas per n')
    sub.add_argument('--seed', type=int, default=911)
    sub.set_defaults(func=cmd_ordercheck)

    sub = commands.add_parser('version', help='print the version')
    sub.set_defaults(func=cmd_version)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        error = {'error': type(exc).__name__, 'message': str(exc)}
        for name in ERROR_ATTRIBUTES:
            if hasattr(exc, name):
                error[name] = getattr(exc, name)
        emit(error)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
