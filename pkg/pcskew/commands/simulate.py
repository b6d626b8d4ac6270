"""
pcskew simulate command - Monte-Carlo replicates under the spiked model
"""

import logging
import time

from ..core.simulation import SimSpec, run_replicates
from ..utils.config_manager import effective_settings
from ..utils.filesystem import write_output
from ..utils.results import WarningCollector, build_simulation_document, serialize_document
from .alpha_sweep import parse_grid
from .estimate import runtime_threads


logger = logging.getLogger(__name__)

FLAG_KEYS = (
    'case', 'd', 'n', 'm', 's', 'g', 'beta', 'dist', 'seed', 'reps', 'alpha',
    'estimators', 'kn_alpha', 'variance_threshold', 'rotate',
)


def build_spec(args) -> SimSpec:
    """Defaults, user store, --config file, then flags"""
    overrides = {key: getattr(args, key, None) for key in FLAG_KEYS}
    overrides['max_k'] = getattr(args, 'max_k', None)
    overrides['alphas'] = parse_grid(getattr(args, 'alphas', None))
    settings = effective_settings('simulate', overrides, args.config)
    return SimSpec.from_mapping(settings).validate()


def handle(args):
    """Handle the simulate command"""
    spec = build_spec(args)
    threads = runtime_threads(args)

    start = time.perf_counter()
    with WarningCollector() as collected:
        summary = run_replicates(spec, threads=threads)
    elapsed = time.perf_counter() - start

    document = build_simulation_document(summary, collected.messages, elapsed)
    write_output(args.out, serialize_document(document))
    return 0
