"""
pcskew estimate command - number of components for one data matrix
"""

import logging
import time
from typing import Any, Dict, List, Optional, Tuple

from ..core import baselines
from ..core.estimator import (
    Decomposition,
    Estimate,
    EstimatorConfig,
    TestKind,
    decompose,
    default_max_k,
    estimate_from_decomposition,
    estimate_m,
    pvalue_sequence,
    skewness_profile,
)
from ..core.matrix import DataMatrix, ResidualLengths, residual_lengths_from_scores
from ..errors import (
    ConfigError,
    DegenerateResidualsError,
    NumericError,
    TooFewObservationsError,
)
from ..utils.config_manager import effective_settings
from ..utils.filesystem import get_file_info, write_output
from ..utils.matrix_io import read_matrix, read_scores
from ..utils.results import (
    WarningCollector,
    build_estimate_document,
    prepare_plot_directory,
    serialize_document,
    write_pvalues_tsv,
    write_residuals_tsv,
    write_scree_tsv,
)


logger = logging.getLogger(__name__)


def handle(args):
    """Handle the estimate command"""
    settings = estimate_settings(args)
    baseline_settings = effective_settings('baselines', {
        'include': False if getattr(args, 'no_baselines', False) else None,
        'kn_alpha': getattr(args, 'kn_alpha', None),
        'variance_threshold': getattr(args, 'variance_threshold', None),
    }, args.config)
    threads = runtime_threads(args)
    kinds = TestKind.parse_many(settings['test'])

    start = time.perf_counter()
    with WarningCollector() as collected:
        if getattr(args, 'scores', None):
            input_info, estimates, residuals = _estimate_from_scores(args, settings, kinds, threads)
            eigenvalues = None
            found = _score_baselines(residuals, input_info, baseline_settings)
        else:
            if not args.input:
                raise ConfigError("estimate needs an input matrix or --scores FILE")
            X, input_info = load_input(args.input, settings)
            decomposition, estimates = run_estimates(X, settings, kinds, threads)
            residuals = decomposition.residuals
            eigenvalues = decomposition.eigen.eigenvalues
            found = run_baselines(decomposition, baseline_settings)
    elapsed = time.perf_counter() - start

    config_echo = dict(settings)
    config_echo.update(
        tests=[kind.value for kind in kinds],
        max_k=residuals.M,
        baselines=baseline_settings,
    )
    config_echo.pop('test', None)
    document = build_estimate_document(
        input_info, config_echo, estimates, eigenvalues, found, collected.messages, elapsed,
    )
    write_output(args.out, serialize_document(document))

    if args.plot_data:
        directory = prepare_plot_directory(args.plot_data)
        write_pvalues_tsv(directory, estimates)
        write_residuals_tsv(directory, residuals)
        if eigenvalues is not None:
            write_scree_tsv(directory, eigenvalues)
        logger.info(f"Plot data written to {directory}")

    for kind, estimate in estimates.items():
        suffix = " (saturated)" if estimate.saturated else ""
        logger.info(f"m_hat ({kind.value}) = {estimate.m_hat} at alpha={estimate.alpha}{suffix}")
    for name, result in found.items():
        logger.info(f"m_hat ({name}) = {result.m_hat}")
    return 0


def estimate_settings(args) -> Dict[str, Any]:
    keys = ('alpha', 'test', 'max_k', 'center', 'standardize', 'orientation', 'delimiter', 'header')
    return effective_settings('estimate', {key: getattr(args, key, None) for key in keys},
                              args.config)


def runtime_threads(args) -> Optional[int]:
    return effective_settings('runtime', {'threads': getattr(args, 'threads', None)},
                              args.config).get('threads')


def load_input(path, settings: Dict[str, Any]) -> Tuple[DataMatrix, Dict[str, Any]]:
    X = read_matrix(
        path,
        delimiter=settings.get('delimiter'),
        orientation=settings.get('orientation'),
        header=bool(settings.get('header')),
    )
    info = dict(get_file_info(path), source='matrix', n=X.n, d=X.d)
    return X, info


def estimator_config(settings: Dict[str, Any], kind: TestKind,
                     threads: Optional[int]) -> EstimatorConfig:
    return EstimatorConfig(
        alpha=float(settings['alpha']),
        test=kind,
        max_k=settings.get('max_k'),
        center=bool(settings.get('center')),
        standardize=bool(settings.get('standardize')),
        threads=threads,
    )


def run_estimates(X: DataMatrix, settings: Dict[str, Any], kinds: List[TestKind],
                  threads: Optional[int]) -> Tuple[Decomposition, Dict[TestKind, Estimate]]:
    """One decomposition shared by every requested test kind"""
    for kind in kinds:
        if X.n < kind.min_n:
            raise TooFewObservationsError(
                f"{kind.value} test needs at least {kind.min_n} observations, got {X.n}", n=X.n
            )
    config = estimator_config(settings, kinds[0], threads)
    decomposition = decompose(X, config)
    estimates = {
        kind: estimate_from_decomposition(decomposition, config.alpha, kind, threads)
        for kind in kinds
    }
    return decomposition, estimates


def run_baselines(decomposition: Decomposition,
                  settings: Dict[str, Any]) -> Dict[str, baselines.BaselineResult]:
    """Comparison estimators; one that cannot run on this input is skipped with a warning"""
    if not settings.get('include', True):
        return {}
    data = decomposition.data
    eigen = decomposition.eigen
    M = decomposition.M
    found: Dict[str, baselines.BaselineResult] = {}
    attempts = {
        'bai_ng': lambda: baselines.bai_ng(decomposition.residuals, data.n, data.d, M),
        'kritchman_nadler': lambda: baselines.kritchman_nadler(
            eigen.sample_eigenvalues(), data.n, data.d, float(settings['kn_alpha']), M
        ),
        'variance_explained': lambda: baselines.variance_explained_estimate(
            eigen.eigenvalues, float(settings['variance_threshold'])
        ),
    }
    for name, attempt in attempts.items():
        try:
            found[name] = attempt()
        except (ConfigError, NumericError) as e:
            logger.warning(f"Skipping {name}: {e}")
    return found


def _estimate_from_scores(args, settings: Dict[str, Any], kinds: List[TestKind],
                          threads: Optional[int]):
    if not args.dim:
        raise ConfigError("--scores needs --dim, the number of variables of the original data")
    preprocessing = [key for key in ('center', 'standardize') if settings.get(key)]
    if preprocessing:
        raise ConfigError(
            f"{' and '.join(preprocessing)} cannot be applied to precomputed scores; "
            "preprocess the data before computing them",
            settings=preprocessing,
        )
    scores = read_scores(args.scores, delimiter=settings.get('delimiter'),
                         header=bool(settings.get('header')))
    n, r = scores.shape
    M = settings.get('max_k')
    M = min(default_max_k(n), r) if M is None else int(M)
    residuals = residual_lengths_from_scores(scores, int(args.dim), M)

    alpha = float(settings['alpha'])
    profile = skewness_profile(residuals)
    estimates = {}
    for kind in kinds:
        P = pvalue_sequence(residuals, kind, threads=threads)
        estimates[kind] = estimate_m(P, alpha, per_k_skewness=profile,
                                     metadata={'n': n, 'd': int(args.dim), 'M': M})
    info = dict(get_file_info(args.scores), source='scores', n=n, d=int(args.dim))
    return info, estimates, residuals


def _score_baselines(residuals: ResidualLengths, input_info: Dict[str, Any],
                     settings: Dict[str, Any]) -> Dict[str, baselines.BaselineResult]:
    if not settings.get('include', True):
        return {}
    try:
        return {'bai_ng': baselines.bai_ng(residuals, input_info['n'], input_info['d'],
                                           residuals.M)}
    except DegenerateResidualsError as e:
        logger.warning(f"Skipping bai_ng: {e}")
        return {}
