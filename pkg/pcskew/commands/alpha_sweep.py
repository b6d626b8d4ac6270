"""
pcskew alpha-sweep command - estimates over a grid of significance levels

The p-value sequence does not depend on alpha, so it is computed once (or
taken from a prior estimate document) and thresholded at every grid point.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..core import baselines
from ..core.estimator import Estimate, TestKind, alpha_sweep
from ..errors import ConfigError, NumericError
from ..utils.config_manager import effective_settings, parse_value
from ..utils.filesystem import content_hash, write_output
from ..utils.results import (
    WarningCollector,
    build_sweep_document,
    load_document,
    prepare_plot_directory,
    pvalue_sequences,
    serialize_document,
    write_alpha_sweep_tsv,
    write_variance_sweep_tsv,
)
from .estimate import estimate_settings, load_input, run_estimates, runtime_threads


logger = logging.getLogger(__name__)


def parse_grid(raw) -> Optional[List[float]]:
    """'0.1,0.2' or a JSON list to a list of floats"""
    if raw is None:
        return None
    values = parse_value(raw) if isinstance(raw, str) and raw.startswith('[') else raw
    if isinstance(values, str):
        values = [v for v in values.split(',') if v.strip()]
    try:
        grid = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid grid {raw!r}: expected comma-separated numbers")
    if not grid:
        raise ConfigError("Grid must contain at least one value")
    return grid


def handle(args):
    """Handle the alpha-sweep command"""
    sweep_settings = effective_settings('alpha_sweep', {
        'alphas': parse_grid(args.alphas),
        'variance_thresholds': parse_grid(getattr(args, 'variance_thresholds', None)),
    }, args.config)
    alphas = parse_grid(sweep_settings['alphas'])
    thresholds = parse_grid(sweep_settings['variance_thresholds'])
    settings = estimate_settings(args)
    kinds = TestKind.parse_many(settings['test'])
    include_baselines = not getattr(args, 'no_baselines', False)

    from_result = args.from_result or Path(args.input).suffix == '.json'
    start = time.perf_counter()
    with WarningCollector() as collected:
        if from_result:
            input_info, sweeps, eigenvalues, M = _sweep_document(args.input, kinds, alphas)
        else:
            X, input_info = load_input(args.input, settings)
            decomposition, estimates = run_estimates(
                X, dict(settings, alpha=alphas[0]), kinds, runtime_threads(args)
            )
            sweeps = {kind: alpha_sweep(estimates[kind], alphas) for kind in kinds}
            eigenvalues = decomposition.eigen.eigenvalues
            M = decomposition.M
            input_info = dict(input_info, n=decomposition.data.n, d=decomposition.data.d)

        kn_sweep: Sequence[baselines.BaselineResult] = []
        variance_sweep: Sequence[baselines.BaselineResult] = []
        if include_baselines and eigenvalues is not None and len(eigenvalues):
            kn_sweep = _kn_sweep(eigenvalues, input_info['n'], input_info['d'], alphas, M)
            variance_sweep = _variance_sweep(eigenvalues, thresholds)
    elapsed = time.perf_counter() - start

    config_echo: Dict[str, Any] = {
        'alphas': alphas,
        'variance_thresholds': thresholds,
        'tests': [kind.value for kind in kinds],
        'max_k': M,
        'baselines': include_baselines,
    }
    if not from_result:
        config_echo.update(center=settings.get('center'), standardize=settings.get('standardize'),
                           orientation=settings.get('orientation'))
    document = build_sweep_document(
        input_info, config_echo, sweeps, kn_sweep, variance_sweep,
        collected.messages, elapsed, reused=from_result,
    )
    write_output(args.out, serialize_document(document))

    if args.plot_data:
        directory = prepare_plot_directory(args.plot_data)
        write_alpha_sweep_tsv(directory, alphas, sweeps, kn_sweep)
        if variance_sweep:
            write_variance_sweep_tsv(directory, variance_sweep)
        logger.info(f"Plot data written to {directory}")

    for kind, estimates in sweeps.items():
        logger.info(f"{kind.value}: m_hat over alpha = {[e.m_hat for e in estimates]}")
    return 0


def _sweep_document(path, kinds: List[TestKind], alphas: List[float]):
    document = load_document(path)
    sequences = pvalue_sequences(document)
    missing = [kind.value for kind in kinds if kind not in sequences]
    if missing:
        # A document from a single-test run only holds that test
        kinds = [kind for kind in kinds if kind in sequences]
        if not kinds:
            raise ConfigError(f"Result document {path} has no p-values for {missing}")
        logger.warning(f"Result document {path} has no p-values for {missing}")

    skewness = np.array([np.nan if v is None else v for v in document['per_k_skewness']])
    sweeps: Dict[TestKind, List[Estimate]] = {}
    for kind in kinds:
        P = sequences[kind]
        sweeps[kind] = [
            Estimate(e.m_hat, e.alpha, e.pvalues, skewness, e.saturated, e.metadata)
            for e in alpha_sweep(P, alphas)
        ]
    logger.debug(f"Reusing p-values from {path}")

    eigenvalues = np.asarray(document.get('eigenvalues') or [], dtype=float)
    M = max(sequence.M for sequence in sequences.values())
    input_info = dict(document['input'])
    input_info.update(result_document=str(path), result_sha256=content_hash(path))
    return input_info, sweeps, eigenvalues, M


def _kn_sweep(eigenvalues, n: int, d: int, alphas: Sequence[float],
              M: int) -> List[baselines.BaselineResult]:
    sample = np.asarray(eigenvalues, dtype=float) / n
    try:
        return baselines.kn_alpha_sweep(sample, n, d, alphas, M)
    except (ConfigError, NumericError) as e:
        logger.warning(f"Skipping kritchman_nadler sweep: {e}")
        return []


def _variance_sweep(eigenvalues, thresholds: Sequence[float]) -> List[baselines.BaselineResult]:
    try:
        return baselines.variance_threshold_sweep(eigenvalues, thresholds)
    except (ConfigError, NumericError) as e:
        logger.warning(f"Skipping variance_explained sweep: {e}")
        return []
