#!/usr/bin/env python3
"""
pcskew CLI - Main command-line interface
"""

import argparse
import json
import logging
import sys

from . import __version__
from .commands import alpha_sweep, config, estimate, simulate, version
from .errors import PcSkewError


def setup_logging(verbose: bool = False):
    """Setup logging configuration; records go to standard error"""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )
    if not verbose:
        logging.getLogger('numba').setLevel(logging.WARNING)


def _add_input_options(parser):
    parser.add_argument('--delimiter', help="Field delimiter (default: detect comma, tab, whitespace)")
    parser.add_argument('--orientation', choices=['rows', 'columns'],
                        help='Whether observations are rows (default) or columns')
    parser.add_argument('--header', action='store_true', default=None,
                        help='First line is a header row')
    parser.add_argument('--center', action='store_true', default=None,
                        help='Subtract column means before the decomposition')
    parser.add_argument('--standardize', action='store_true', default=None,
                        help='Scale columns to unit variance')
    parser.add_argument('--max-k', type=int, help='Largest k tested (default min(n-2, 30))')
    parser.add_argument('--test', choices=['triples', 'dagostino', 'both'],
                        help='Right-skew test (default both)')


def _add_run_options(parser):
    parser.add_argument('--config', help='Run configuration file (JSON, YAML or key = value)')
    parser.add_argument('--threads', type=int, help='Worker thread cap (PC_COUNT_THREADS wins)')
    parser.add_argument('--out', '-o', help="Result document path, '-' for standard output (default)")


def create_parser():
    """Create the argument parser"""
    parser = argparse.ArgumentParser(
        prog='pcskew',
        description='pcskew - number of principal components by skewness of residual lengths'
    )

    parser.add_argument(
        '--version',
        action='version',
        version=f'pcskew {__version__}'
    )

    parser.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Enable verbose logging'
    )

    # Subcommands
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # Estimate command
    estimate_parser = subparsers.add_parser('estimate', help='Estimate the number of components')
    estimate_parser.add_argument('input', nargs='?', help='Delimited numeric matrix')
    estimate_parser.add_argument('--alpha', type=float, help='Significance level (default 0.1)')
    _add_input_options(estimate_parser)
    estimate_parser.add_argument('--scores', help='Precomputed n x r score matrix instead of data')
    estimate_parser.add_argument('--dim', type=int, help='Number of variables d behind --scores')
    estimate_parser.add_argument('--kn-alpha', type=float,
                                 help='Kritchman-Nadler significance level (default 0.05)')
    estimate_parser.add_argument('--variance-threshold', type=float,
                                 help='Variance-explained threshold (default 0.8)')
    estimate_parser.add_argument('--no-baselines', action='store_true',
                                 help='Skip the comparison estimators')
    estimate_parser.add_argument('--plot-data', help='Directory for plot-data TSV files')
    _add_run_options(estimate_parser)

    # Simulate command
    simulate_parser = subparsers.add_parser('simulate', help='Monte-Carlo replicates under the spiked model')
    simulate_parser.add_argument('--case', choices=['I', 'II', 'III', 'IV', 'custom'],
                                 help='Parameter preset (default I)')
    simulate_parser.add_argument('--d', type=int, help='Dimension')
    simulate_parser.add_argument('--n', type=int, help='Sample size')
    simulate_parser.add_argument('--m', type=int, help='Number of spikes')
    simulate_parser.add_argument('--s', type=float, help='Signal strength')
    simulate_parser.add_argument('--g', type=float, help='Spike spacing')
    simulate_parser.add_argument('--beta', type=float, help='Noise eigenvalue decay, 0 <= beta < 0.5')
    simulate_parser.add_argument('--dist', choices=['normal', 't3'], help='Score distribution')
    simulate_parser.add_argument('--seed', type=int, help='Base seed')
    simulate_parser.add_argument('--reps', type=int, help='Number of replicates')
    simulate_parser.add_argument('--alpha', type=float, help='Significance level (default 0.1)')
    simulate_parser.add_argument('--max-k', type=int, help='Largest k tested')
    simulate_parser.add_argument('--estimators',
                                 help='Comma-separated: triples, dagostino, bai_ng, '
                                      'kritchman_nadler, variance_explained')
    simulate_parser.add_argument('--kn-alpha', type=float, help='Kritchman-Nadler significance level')
    simulate_parser.add_argument('--variance-threshold', type=float,
                                 help='Variance-explained threshold')
    simulate_parser.add_argument('--rotate', action='store_true', default=None,
                                 help='Rotate data by a random orthogonal matrix (d < 200)')
    simulate_parser.add_argument('--alphas',
                                 help='Comma-separated alpha grid; adds per-alpha summaries for '
                                      'triples, dagostino and kritchman_nadler')
    _add_run_options(simulate_parser)

    # Alpha sweep command
    sweep_parser = subparsers.add_parser('alpha-sweep', help='Estimates over a grid of alpha values')
    sweep_parser.add_argument('input', help='Delimited numeric matrix or a prior estimate document')
    sweep_parser.add_argument('--from-result', action='store_true',
                              help='Input is an estimate result document')
    sweep_parser.add_argument('--alphas', help='Comma-separated alpha grid (default 0.02..0.9)')
    sweep_parser.add_argument('--variance-thresholds',
                              help='Comma-separated variance-explained thresholds')
    sweep_parser.add_argument('--no-baselines', action='store_true',
                              help='Skip the Kritchman-Nadler and variance-explained sweeps')
    sweep_parser.add_argument('--plot-data', help='Directory for plot-data TSV files')
    _add_input_options(sweep_parser)
    _add_run_options(sweep_parser)

    # Version command
    subparsers.add_parser('version', help='Print the version')

    # Config command
    config_parser = subparsers.add_parser('config', help='Configuration management')
    config_subparsers = config_parser.add_subparsers(dest='config_action')

    config_get = config_subparsers.add_parser('get', help='Get configuration value')
    config_get.add_argument('key', help='Configuration key')

    config_set = config_subparsers.add_parser('set', help='Set configuration value')
    config_set.add_argument('key', help='Configuration key')
    config_set.add_argument('value', help='Configuration value')

    config_subparsers.add_parser('show', help='Show the effective configuration')
    config_subparsers.add_parser('init', help='Write the default configuration')

    return parser


def main(argv=None):
    """Main CLI entry point"""
    parser = create_parser()
    args = parser.parse_args(argv)

    setup_logging(args.verbose)
    logger = logging.getLogger(__name__)

    if not args.command:
        parser.print_help()
        return 1

    try:
        # Route to appropriate command handler
        if args.command == 'estimate':
            return estimate.handle(args)
        elif args.command == 'simulate':
            return simulate.handle(args)
        elif args.command == 'alpha-sweep':
            return alpha_sweep.handle(args)
        elif args.command == 'version':
            return version.handle(args)
        elif args.command == 'config':
            return config.handle(args)
        else:
            logger.error(f"Unknown command: {args.command}")
            return 1

    except PcSkewError as e:
        sys.stderr.write(json.dumps(e.to_dict()) + '\n')
        if args.verbose:
            logger.exception("Full traceback:")
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 1
    except Exception as e:
        logger.error(f"Error: {e}")
        if args.verbose:
            logger.exception("Full traceback:")
        return 1


if __name__ == '__main__':
    sys.exit(main())
