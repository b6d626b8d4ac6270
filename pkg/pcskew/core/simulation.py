"""
Simulation harness for the spiked eigenvalue model

Population eigenvalues: lambda_i = s^2 (1 + g (m - i)) d for the m spikes,
tau_beta i^{-beta} for the tail, normalized so the tail has mean 1.
Eigenvectors are the standard basis; every statistic used downstream
depends on the scores and eigenvalues only. A rotated mode (d < 200)
exists to check that invariance.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.stats import ortho_group

from . import baselines
from .estimator import (
    DEFAULT_ALPHA,
    EstimatorConfig,
    TestKind,
    alpha_sweep,
    decompose,
    default_max_k,
    estimate_from_decomposition,
    skewness_profile,
)
from .matrix import DataMatrix, ResidualLengths
from .tracy_widom import ALPHA_RANGE
from ..errors import InvalidSpecError, PcSkewError, SpikeBelowNoiseError
from ..utils.config_manager import load_run_config, resolve_threads


logger = logging.getLogger(__name__)

SCORES_STREAM = 0
ROTATION_STREAM = 1
ROTATION_MAX_D = 200

ESTIMATOR_TAGS = (
    "triples",
    "dagostino",
    "bai_ng",
    "kritchman_nadler",
    "variance_explained",
)
DEFAULT_ESTIMATORS = ("triples", "dagostino", "bai_ng", "kritchman_nadler")
# Estimators with a significance level, swept over SimSpec.alphas
ALPHA_SWEEP_METHODS = ("triples", "dagostino", "kritchman_nadler")


class ScoreDistribution(str, Enum):
    NORMAL = "normal"
    T3 = "t3"

    @classmethod
    def parse(cls, value) -> "ScoreDistribution":
        aliases = {"standard_normal": cls.NORMAL, "gaussian": cls.NORMAL, "t": cls.T3}
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidSpecError(f"Unknown score distribution: {value!r}")


# Case name -> (s, g, beta, score distribution)
CASE_PRESETS: Dict[str, Tuple[float, float, float, ScoreDistribution]] = {
    "I": (0.2, 1.0, 0.0, ScoreDistribution.NORMAL),
    "II": (0.2, 1.0, 0.3, ScoreDistribution.NORMAL),
    "III": (0.2, 1.0, 0.3, ScoreDistribution.T3),
    "IV": (0.1, 0.5, 0.3, ScoreDistribution.T3),
}


def case_preset(name: str) -> Tuple[float, float, float, ScoreDistribution]:
    try:
        return CASE_PRESETS[str(name).upper()]
    except KeyError:
        raise InvalidSpecError(f"Unknown simulation case: {name!r} (expected I, II, III, IV or custom)")


@dataclass(frozen=True)
class EigenModel:
    lambdas: np.ndarray
    m: int
    s: float
    g: float
    beta: float
    tau_beta: float

    @property
    def d(self) -> int:
        return self.lambdas.shape[0]

    @property
    def spike_variances(self) -> np.ndarray:
        """sigma_i^2 = lambda_i / d for the spikes"""
        return self.lambdas[:self.m] / self.d

    @property
    def tau2(self) -> float:
        """Noise level sum_{i>m} lambda_i / d at this d"""
        return float(self.lambdas[self.m:].sum() / self.d)


def eigen_model(d: int, m: int, s: float, g: float, beta: float) -> EigenModel:
    if not 0 <= m < d:
        raise InvalidSpecError(f"Need d > m >= 0, got d={d}, m={m}", d=d, m=m)
    if not s > 0:
        raise InvalidSpecError(f"Signal strength s must be positive, got {s}", s=s)
    if m >= 2 and not g > 0:
        raise InvalidSpecError(f"Spike spacing g must be positive when m >= 2, got {g}", g=g)
    if not 0 <= beta < 0.5:
        raise InvalidSpecError(f"Tail decay beta must lie in [0, 0.5), got {beta}", beta=beta)

    i = np.arange(1, d + 1, dtype=float)
    tail = i[m:] ** (-beta)
    tau_beta = 1.0 / (tail.sum() / (d - m))
    lambdas = np.empty(d)
    lambdas[:m] = s ** 2 * (1.0 + g * (m - i[:m])) * d
    lambdas[m:] = tau_beta * tail

    if m >= 1 and not lambdas[m - 1] > lambdas[m]:
        raise SpikeBelowNoiseError(
            f"Smallest spike {lambdas[m - 1]:.4g} does not exceed the largest noise "
            f"eigenvalue {lambdas[m]:.4g}",
            spike=float(lambdas[m - 1]), noise=float(lambdas[m]),
        )
    lambdas.setflags(write=False)
    return EigenModel(lambdas=lambdas, m=m, s=s, g=g, beta=beta, tau_beta=float(tau_beta))


@dataclass(frozen=True)
class SimSpec:
    d: int = 2000
    n: int = 100
    m: int = 3
    s: float = 0.2
    g: float = 1.0
    beta: float = 0.0
    distribution: ScoreDistribution = ScoreDistribution.NORMAL
    seed: int = 20240101
    replicates: int = 100
    alpha: float = DEFAULT_ALPHA
    estimators: Tuple[str, ...] = DEFAULT_ESTIMATORS
    M: Optional[int] = None
    kn_alpha: float = baselines.DEFAULT_KN_ALPHA
    variance_threshold: float = baselines.DEFAULT_VARIANCE_THRESHOLD
    rotate: bool = False
    alphas: Tuple[float, ...] = ()
    case: str = "custom"

    @property
    def max_k(self) -> int:
        return default_max_k(self.n) if self.M is None else self.M

    def validate(self) -> "SimSpec":
        if self.replicates < 1:
            raise InvalidSpecError(f"replicates must be at least 1, got {self.replicates}")
        if not 0 <= self.beta < 0.5:
            raise InvalidSpecError(f"beta must lie in [0, 0.5), got {self.beta}")
        if not 0 <= self.m < self.n:
            raise InvalidSpecError(f"Need 0 <= m < n, got m={self.m}, n={self.n}")
        if not 0 <= self.max_k < self.n:
            raise InvalidSpecError(f"Need 0 <= M < n, got M={self.max_k}, n={self.n}")
        if not 0 < self.alpha < 1:
            raise InvalidSpecError(f"alpha must lie in (0, 1), got {self.alpha}")
        low, high = ALPHA_RANGE
        for a in self.alphas:
            if not 0 < a < 1:
                raise InvalidSpecError(f"Every swept alpha must lie in (0, 1), got {a}")
            if "kritchman_nadler" in self.estimators and not low <= a <= high:
                raise InvalidSpecError(
                    f"Kritchman-Nadler sweep needs alpha in [{low:g}, {high:g}], got {a}"
                )
        unknown = set(self.estimators) - set(ESTIMATOR_TAGS)
        if unknown:
            raise InvalidSpecError(f"Unknown estimator tag(s): {sorted(unknown)}")
        if self.rotate and self.d >= ROTATION_MAX_D:
            raise InvalidSpecError(f"Rotated mode is limited to d < {ROTATION_MAX_D}, got {self.d}")
        eigen_model(self.d, self.m, self.s, self.g, self.beta)
        return self

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "SimSpec":
        """Build a spec from plain values; a `case` preset is applied before other keys"""
        values = {k.replace('-', '_'): v for k, v in mapping.items() if v is not None}
        if 'reps' in values:
            values['replicates'] = values.pop('reps')
        if 'max_k' in values:
            values['M'] = values.pop('max_k')
        if 'dist' in values:
            values['distribution'] = values.pop('dist')

        params: Dict[str, Any] = {}
        case = str(values.pop('case', 'custom'))
        if case.lower() != 'custom':
            s, g, beta, dist = case_preset(case)
            params.update(s=s, g=g, beta=beta, distribution=dist)
            case = case.upper()
        params.update(values)
        params['case'] = case

        known = set(cls.__dataclass_fields__)
        unknown = set(params) - known
        if unknown:
            raise InvalidSpecError(f"Unknown simulation setting(s): {sorted(unknown)}")

        if 'distribution' in params:
            params['distribution'] = ScoreDistribution.parse(params['distribution'])
        if 'estimators' in params:
            estimators = params['estimators']
            if isinstance(estimators, str):
                estimators = [e.strip() for e in estimators.split(',') if e.strip()]
            params['estimators'] = tuple(estimators)
        if 'alphas' in params:
            alphas = params['alphas']
            if alphas is None:
                alphas = ()
            elif isinstance(alphas, str):
                alphas = [a for a in alphas.split(',') if a.strip()]
            elif isinstance(alphas, (int, float)):
                alphas = [alphas]
            params['alphas'] = alphas
        try:
            for key in ('d', 'n', 'm', 'seed', 'replicates'):
                if key in params:
                    params[key] = int(params[key])
            if params.get('M') is not None:
                params['M'] = int(params['M'])
            for key in ('s', 'g', 'beta', 'alpha', 'kn_alpha', 'variance_threshold'):
                if key in params:
                    params[key] = float(params[key])
            if 'alphas' in params:
                params['alphas'] = tuple(float(a) for a in params['alphas'])
        except (TypeError, ValueError) as e:
            raise InvalidSpecError(f"Invalid simulation setting: {e}")
        return cls(**params)

    def to_mapping(self) -> Dict[str, Any]:
        mapping = asdict(self)
        mapping['distribution'] = self.distribution.value
        mapping['estimators'] = list(self.estimators)
        mapping['alphas'] = list(self.alphas)
        return mapping


def load_spec(path) -> SimSpec:
    return SimSpec.from_mapping(load_run_config(path))


@dataclass(frozen=True)
class ScorePanel:
    """Row j, column i holds z_ij, the standardized score of component i for observation j"""

    z: np.ndarray
    distribution: ScoreDistribution
    seed: int
    replicate_index: int = 0

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def d(self) -> int:
        return self.z.shape[1]


def replicate_rng(seed: int, replicate_index: int, stream: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by (seed, replicate, stream)"""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(replicate_index, stream))
    return np.random.Generator(np.random.Philox(sequence))


def sample_scores(spec: SimSpec, replicate_index: int = 0) -> ScorePanel:
    rng = replicate_rng(spec.seed, replicate_index, SCORES_STREAM)
    shape = (spec.n, spec.d)
    if spec.distribution is ScoreDistribution.T3:
        z = rng.standard_t(3, size=shape) / np.sqrt(3.0)
    else:
        z = rng.standard_normal(shape)
    z.setflags(write=False)
    return ScorePanel(z=z, distribution=spec.distribution, seed=spec.seed,
                      replicate_index=replicate_index)


def sample_rotation(spec: SimSpec, replicate_index: int = 0) -> np.ndarray:
    """Haar-distributed d x d orthogonal matrix for the rotated mode"""
    if spec.d >= ROTATION_MAX_D:
        raise InvalidSpecError(f"Rotated mode is limited to d < {ROTATION_MAX_D}, got {spec.d}")
    rng = replicate_rng(spec.seed, replicate_index, ROTATION_STREAM)
    return ortho_group.rvs(spec.d, random_state=rng)


def population_scores(model: EigenModel, Z: ScorePanel) -> np.ndarray:
    """w_ij = lambda_i^{1/2} z_ij, laid out like Z"""
    if Z.d != model.d:
        raise InvalidSpecError(f"Score panel has d={Z.d}, model has d={model.d}")
    return Z.z * np.sqrt(model.lambdas)


def synth_data(model: EigenModel, Z: ScorePanel,
               rotation: Optional[np.ndarray] = None) -> DataMatrix:
    """X_j = sum_i lambda_i^{1/2} u_i z_ij with u_i the standard basis (or columns of `rotation`)"""
    X = population_scores(model, Z)
    if rotation is not None:
        X = X @ rotation.T
    return DataMatrix(X)


def true_residuals(model: EigenModel, Z: ScorePanel, M: int) -> ResidualLengths:
    """Residual lengths against the population eigenvectors: d^{-1} sum_{i>k} w_ij^2"""
    if not 0 <= M < model.d:
        raise InvalidSpecError(f"Need 0 <= M < d, got M={M}")
    w2 = population_scores(model, Z) ** 2
    tails = np.cumsum(w2[:, ::-1], axis=1)[:, ::-1]
    table = tails[:, :M + 1] / model.d
    table.setflags(write=False)
    return ResidualLengths(table=table, d=model.d)


def residual_gap(sample: ResidualLengths, true: ResidualLengths) -> np.ndarray:
    """a_j(k) = R_j(k) - R~_j(k)"""
    M = min(sample.M, true.M)
    return sample.table[:, :M + 1] - true.table[:, :M + 1]


@dataclass(frozen=True)
class ReplicateResult:
    index: int
    seed_key: Tuple[int, int]
    estimates: Dict[str, int]
    failures: Dict[str, str]
    pvalues: Dict[str, List[float]]
    skewness: List[Optional[float]]
    skewness_at_m: Optional[float]
    skewness_before_m: Optional[float]
    # method -> m_hat at each of SimSpec.alphas
    sweeps: Dict[str, List[int]] = field(default_factory=dict)


@dataclass(frozen=True)
class MethodSummary:
    method: str
    mean: float
    stderr: float
    histogram: Dict[int, int]
    failures: int

    @property
    def count(self) -> int:
        return sum(self.histogram.values())


@dataclass(frozen=True)
class SimSummary:
    spec: SimSpec
    methods: Dict[str, MethodSummary]
    replicates: List[ReplicateResult] = field(default_factory=list)
    # method -> one summary per swept alpha
    sweeps: Dict[str, List[MethodSummary]] = field(default_factory=dict)

    def estimates(self, method: str) -> np.ndarray:
        return np.array([r.estimates[method] for r in self.replicates if method in r.estimates])


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


def run_replicate(spec: SimSpec, model: EigenModel, index: int) -> ReplicateResult:
    Z = sample_scores(spec, index)
    rotation = sample_rotation(spec, index) if spec.rotate else None
    X = synth_data(model, Z, rotation)
    M = spec.max_k

    estimates: Dict[str, int] = {}
    failures: Dict[str, str] = {}
    pvalues: Dict[str, List[float]] = {}
    profile: List[Optional[float]] = []
    sweeps: Dict[str, List[int]] = {}

    try:
        dec = decompose(X, EstimatorConfig(max_k=M))
    except PcSkewError as e:
        logger.warning(f"Replicate {index} failed: {e}")
        failures = {method: type(e).__name__ for method in spec.estimators}
        return ReplicateResult(index, (spec.seed, index), estimates, failures, pvalues,
                               profile, None, None)

    skew = skewness_profile(dec.residuals)
    profile = [_finite_or_none(b) for b in skew]

    for method in spec.estimators:
        try:
            if method in ('triples', 'dagostino'):
                estimate = estimate_from_decomposition(dec, spec.alpha, TestKind(method), threads=1)
                estimates[method] = estimate.m_hat
                pvalues[method] = [float(p) for p in estimate.pvalues.p]
                if spec.alphas:
                    sweeps[method] = [e.m_hat for e in alpha_sweep(estimate, spec.alphas)]
            elif method == 'bai_ng':
                estimates[method] = baselines.bai_ng(dec.residuals, spec.n, spec.d, M).m_hat
            elif method == 'kritchman_nadler':
                sample_eigenvalues = dec.eigen.sample_eigenvalues()
                estimates[method] = baselines.kritchman_nadler(
                    sample_eigenvalues, spec.n, spec.d, spec.kn_alpha, M
                ).m_hat
                if spec.alphas:
                    sweeps[method] = [
                        r.m_hat for r in baselines.kn_alpha_sweep(
                            sample_eigenvalues, spec.n, spec.d, spec.alphas, M
                        )
                    ]
            elif method == 'variance_explained':
                estimates[method] = baselines.variance_explained_estimate(
                    dec.eigen.eigenvalues, spec.variance_threshold
                ).m_hat
        except PcSkewError as e:
            logger.warning(f"Replicate {index}, {method} failed: {e}")
            failures[method] = type(e).__name__

    at_m = profile[spec.m] if spec.m <= M else None
    before_m = profile[spec.m - 1] if 1 <= spec.m <= M + 1 else None
    return ReplicateResult(index, (spec.seed, index), estimates, failures, pvalues,
                           profile, at_m, before_m, sweeps)


def _summary(method: str, values: List[int], failures: int) -> MethodSummary:
    histogram: Dict[int, int] = {}
    for v in values:
        histogram[int(v)] = histogram.get(int(v), 0) + 1
    array = np.asarray(values, dtype=float)
    if array.size:
        mean = float(array.mean())
        stderr = float(array.std(ddof=1) / np.sqrt(array.size)) if array.size > 1 else 0.0
    else:
        mean, stderr = float('nan'), float('nan')
    return MethodSummary(method=method, mean=mean, stderr=stderr,
                         histogram=dict(sorted(histogram.items())), failures=failures)


def _summarize(method: str, results: List[ReplicateResult]) -> MethodSummary:
    values = [r.estimates[method] for r in results if method in r.estimates]
    failures = sum(1 for r in results if method in r.failures)
    return _summary(method, values, failures)


def summarize_alpha_sweep(method: str, alphas: Tuple[float, ...],
                          results: List[ReplicateResult]) -> List[MethodSummary]:
    """Mean, stderr and histogram of m_hat at each alpha, over the replicates that ran"""
    swept = [r.sweeps[method] for r in results if method in r.sweeps]
    failures = len(results) - len(swept)
    return [_summary(method, [row[i] for row in swept], failures) for i in range(len(alphas))]


def run_replicates(spec: SimSpec, threads: Optional[int] = None) -> SimSummary:
    """Run every replicate, keyed by index; failures are counted, never fatal"""
    spec.validate()
    model = eigen_model(spec.d, spec.m, spec.s, spec.g, spec.beta)
    workers = min(resolve_threads(threads), spec.replicates)
    logger.info(
        f"Simulating case {spec.case}: d={spec.d}, n={spec.n}, m={spec.m}, "
        f"(s, g, beta)=({spec.s}, {spec.g}, {spec.beta}), {spec.distribution.value} scores, "
        f"{spec.replicates} replicate(s) on {workers} thread(s)"
    )

    indices = range(spec.replicates)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: run_replicate(spec, model, r), indices))
    else:
        results = [run_replicate(spec, model, r) for r in indices]
    results.sort(key=lambda r: r.index)

    methods = {method: _summarize(method, results) for method in spec.estimators}
    for summary in methods.values():
        logger.info(
            f"{summary.method}: mean={summary.mean:.3f} stderr={summary.stderr:.3f} "
            f"failures={summary.failures}"
        )
    sweeps = {
        method: summarize_alpha_sweep(method, spec.alphas, results)
        for method in spec.estimators
        if spec.alphas and method in ALPHA_SWEEP_METHODS
    }
    return SimSummary(spec=spec, methods=methods, replicates=results, sweeps=sweeps)
