"""
Result documents and plot data

A result document is a single JSON object. Every command writes one; the
estimate document also carries enough (p-values, eigenvalues, input
fingerprint) for alpha-sweep to reuse it without recomputing. Plot data are
tab-separated files with a header row.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .. import __version__
from ..core.baselines import BaselineResult, scree_table
from ..core.estimator import Estimate, PValueSequence, TestKind
from ..core.matrix import ResidualLengths
from ..core.simulation import MethodSummary, SimSummary
from ..errors import InputNotFoundError, InvalidSpecError, ParseError
from .filesystem import atomic_write, ensure_directory


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COMMANDS = ('estimate', 'alpha-sweep', 'simulate')

REQUIRED_KEYS: Dict[str, Sequence[str]] = {
    'estimate': ('input', 'config', 'estimates', 'eigenvalues', 'per_k_skewness',
                 'warnings', 'timing'),
    'alpha-sweep': ('input', 'config', 'sweep', 'warnings', 'timing'),
    'simulate': ('spec', 'methods', 'replicates', 'warnings', 'timing'),
}

# Column labels used in plot data
PVALUE_LABELS = {TestKind.TRIPLES: 'p_R', TestKind.DAGOSTINO: 'p_D'}
ESTIMATE_LABELS = {TestKind.TRIPLES: 'm_R', TestKind.DAGOSTINO: 'm_D'}
FLOAT_FORMAT = '%.10g'


class WarningCollector(logging.Handler):
    """
    Keeps the messages of WARNING records logged while it is installed.

    Worker threads log in no fixed order, so ``messages`` is sorted.
    """

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self._seen: set = set()

    def emit(self, record: logging.LogRecord) -> None:
        self._seen.add(record.getMessage())

    @property
    def messages(self) -> List[str]:
        return sorted(self._seen)

    def __enter__(self) -> "WarningCollector":
        logging.getLogger('pcskew').addHandler(self)
        return self

    def __exit__(self, *exc) -> None:
        logging.getLogger('pcskew').removeHandler(self)


def _plain(value: Any) -> Any:
    """numpy scalars and arrays to JSON values; non-finite floats to null"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    if hasattr(value, 'value') and isinstance(getattr(value, 'value'), str):
        return value.value
    return value


def _header(command: str) -> Dict[str, Any]:
    return {
        'schema_version': SCHEMA_VERSION,
        'command': command,
        'pcskew_version': __version__,
    }


def estimate_entry(estimate: Estimate) -> Dict[str, Any]:
    P = estimate.pvalues
    entry = {
        'm_hat': estimate.m_hat,
        'alpha': estimate.alpha,
        'saturated': estimate.saturated,
        'pvalues': P.p,
        'statistics': P.statistics,
        'degenerate_k': np.flatnonzero(P.degenerate),
    }
    if 'variance_estimator' in estimate.metadata:
        entry['variance_estimator'] = estimate.metadata['variance_estimator']
    return entry


def baseline_entry(result: BaselineResult) -> Dict[str, Any]:
    return {
        'm_hat': result.m_hat,
        'criterion': result.criterion_trace,
        **result.metadata,
    }


def build_estimate_document(input_info: Mapping[str, Any], config: Mapping[str, Any],
                            estimates: Mapping[TestKind, Estimate],
                            eigenvalues: Optional[np.ndarray],
                            baselines: Mapping[str, BaselineResult],
                            warnings: Iterable[str], elapsed: float) -> Dict[str, Any]:
    first = next(iter(estimates.values()))
    document = _header('estimate')
    document.update({
        'input': dict(input_info),
        'config': dict(config),
        'estimates': {kind.value: estimate_entry(e) for kind, e in estimates.items()},
        'per_k_skewness': first.per_k_skewness,
        'eigenvalues': eigenvalues if eigenvalues is not None else [],
        'scree': scree_table(eigenvalues) if eigenvalues is not None else [],
        'baselines': {name: baseline_entry(r) for name, r in baselines.items()},
        'warnings': list(warnings),
        'timing': {'elapsed_seconds': elapsed, 'pvalues_reused': False},
    })
    return _plain(document)


def build_sweep_document(input_info: Mapping[str, Any], config: Mapping[str, Any],
                         sweeps: Mapping[TestKind, List[Estimate]],
                         kn_sweep: Sequence[BaselineResult],
                         variance_sweep: Sequence[BaselineResult],
                         warnings: Iterable[str], elapsed: float,
                         reused: bool) -> Dict[str, Any]:
    alphas = list(config.get('alphas', []))
    sweep: Dict[str, Any] = {
        'alphas': alphas,
        'm_hat': {kind.value: [e.m_hat for e in estimates] for kind, estimates in sweeps.items()},
        'saturated': {kind.value: [e.saturated for e in estimates]
                      for kind, estimates in sweeps.items()},
    }
    if kn_sweep:
        sweep['kritchman_nadler'] = [r.m_hat for r in kn_sweep]
    if variance_sweep:
        sweep['variance_thresholds'] = [r.metadata['threshold'] for r in variance_sweep]
        sweep['variance_explained'] = [r.m_hat for r in variance_sweep]

    document = _header('alpha-sweep')
    document.update({
        'input': dict(input_info),
        'config': dict(config),
        'sweep': sweep,
        'warnings': list(warnings),
        'timing': {'elapsed_seconds': elapsed, 'pvalues_reused': reused},
    })
    return _plain(document)


def _summary_entry(s: MethodSummary) -> Dict[str, Any]:
    return {
        'mean': s.mean,
        'stderr': s.stderr,
        'histogram': {str(k): v for k, v in s.histogram.items()},
        'failures': s.failures,
    }


def build_simulation_document(summary: SimSummary, warnings: Iterable[str],
                              elapsed: float) -> Dict[str, Any]:
    document = _header('simulate')
    document.update({
        'spec': summary.spec.to_mapping(),
        'methods': {name: _summary_entry(s) for name, s in summary.methods.items()},
        'replicates': [
            {
                'index': r.index,
                'seed': list(r.seed_key),
                'estimates': r.estimates,
                'failures': r.failures,
                'skewness_at_m': r.skewness_at_m,
                'skewness_before_m': r.skewness_before_m,
                'sweeps': r.sweeps,
            }
            for r in summary.replicates
        ],
        'alpha_sweep': {
            name: [
                dict(_summary_entry(s), alpha=alpha)
                for alpha, s in zip(summary.spec.alphas, points)
            ]
            for name, points in summary.sweeps.items()
        },
        'warnings': list(warnings),
        'timing': {'elapsed_seconds': elapsed},
    })
    return _plain(document)


def validate_document(document: Any) -> Dict[str, Any]:
    """Check the top-level shape of a result document; returns it unchanged"""
    if not isinstance(document, dict):
        raise InvalidSpecError("Result document must be a JSON object")
    version = document.get('schema_version')
    if version != SCHEMA_VERSION:
        raise InvalidSpecError(
            f"Unsupported result schema version {version!r} (expected {SCHEMA_VERSION})"
        )
    command = document.get('command')
    if command not in COMMANDS:
        raise InvalidSpecError(f"Unknown result document command {command!r}")
    missing = [key for key in REQUIRED_KEYS[command] if key not in document]
    if missing:
        raise InvalidSpecError(f"Result document is missing {missing}")
    if command == 'estimate':
        for kind, entry in document['estimates'].items():
            TestKind.parse(kind)
            for key in ('m_hat', 'pvalues', 'statistics'):
                if key not in entry:
                    raise InvalidSpecError(f"Estimate entry {kind!r} is missing {key!r}")
    return document


def serialize_document(document: Mapping[str, Any]) -> str:
    return json.dumps(validate_document(dict(document)), indent=2, sort_keys=True) + '\n'


def load_document(path) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"Result document not found: {path}", path=str(path))
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid result document {path}: {e}", line=e.lineno, column=e.colno)
    return validate_document(document)


def pvalue_sequences(document: Mapping[str, Any]) -> Dict[TestKind, PValueSequence]:
    """Rebuild the p-value sequences stored in an estimate document"""
    if document.get('command') != 'estimate':
        raise InvalidSpecError("p-values can only be reused from an estimate document")
    sequences = {}
    for name, entry in document['estimates'].items():
        kind = TestKind.parse(name)
        p = np.array([0.5 if v is None else v for v in entry['pvalues']], dtype=float)
        statistics = np.array([np.nan if v is None else v for v in entry['statistics']],
                              dtype=float)
        degenerate = np.zeros(p.shape[0], dtype=bool)
        degenerate[list(entry.get('degenerate_k', []))] = True
        sequences[kind] = PValueSequence(p=p, test_kind=kind, statistics=statistics,
                                         degenerate=degenerate)
    return sequences


# Plot data

def _write_tsv(directory: Path, name: str, frame: pd.DataFrame) -> Path:
    text = frame.to_csv(sep='\t', index=False, float_format=FLOAT_FORMAT, na_rep='NA')
    return atomic_write(directory / name, text)


def write_pvalues_tsv(directory, estimates: Mapping[TestKind, Estimate]) -> Path:
    M = max(e.pvalues.M for e in estimates.values())
    frame = pd.DataFrame({'k': np.arange(M + 1)})
    for kind in (TestKind.TRIPLES, TestKind.DAGOSTINO):
        if kind in estimates:
            frame[PVALUE_LABELS[kind]] = estimates[kind].pvalues.p
    return _write_tsv(Path(directory), 'pvalues.tsv', frame)


def write_scree_tsv(directory, eigenvalues) -> Path:
    rows = scree_table(eigenvalues)
    frame = pd.DataFrame(rows, columns=['i', 'eigenvalue', 'cumulative_percent'])
    return _write_tsv(Path(directory), 'scree.tsv', frame)


def write_residuals_tsv(directory, residuals: ResidualLengths) -> Path:
    frame = pd.DataFrame(residuals.table, columns=[f'R_{k}' for k in range(residuals.M + 1)])
    frame.insert(0, 'j', np.arange(1, residuals.n + 1))
    return _write_tsv(Path(directory), 'residuals.tsv', frame)


def write_alpha_sweep_tsv(directory, alphas: Sequence[float],
                          sweeps: Mapping[TestKind, List[Estimate]],
                          kn_sweep: Sequence[BaselineResult] = ()) -> Path:
    frame = pd.DataFrame({'alpha': list(alphas)})
    for kind in (TestKind.TRIPLES, TestKind.DAGOSTINO):
        if kind in sweeps:
            frame[ESTIMATE_LABELS[kind]] = [e.m_hat for e in sweeps[kind]]
    if kn_sweep:
        frame['m_KN'] = [r.m_hat for r in kn_sweep]
    return _write_tsv(Path(directory), 'alpha_sweep.tsv', frame)


def write_variance_sweep_tsv(directory, variance_sweep: Sequence[BaselineResult]) -> Path:
    frame = pd.DataFrame({
        'threshold': [r.metadata['threshold'] for r in variance_sweep],
        'm_hat': [r.m_hat for r in variance_sweep],
    })
    return _write_tsv(Path(directory), 'variance_sweep.tsv', frame)


def prepare_plot_directory(directory) -> Path:
    return ensure_directory(directory)
