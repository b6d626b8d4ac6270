"""
Sequential skewness estimator of the number of components

For k = 0..M the residual lengths R_1(k), ..., R_n(k) are tested for right
skewness. The estimate is the first k whose p-value exceeds alpha.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from . import matrix
from .matrix import DataMatrix, ResidualLengths
from .skew_tests import (
    DAGOSTINO_MIN_N,
    TRIPLES_MIN_N,
    TestResult,
    dagostino_test_right,
    sample_skewness,
    triples_test_right,
)
from ..errors import (
    InvalidSpecError,
    OutOfRangeError,
    TooFewObservationsError,
    ZeroVarianceError,
)
from ..utils.config_manager import resolve_threads


logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.1
DEFAULT_MAX_K = 30
TRIPLES_VARIANCE = "exact-u-statistic"


class TestKind(str, Enum):
    __test__ = False

    TRIPLES = "triples"
    DAGOSTINO = "dagostino"

    @classmethod
    def parse(cls, value: Union[str, "TestKind"]) -> "TestKind":
        try:
            return cls(value)
        except ValueError:
            raise InvalidSpecError(f"Unknown test kind: {value!r}", test=str(value))

    @classmethod
    def parse_many(cls, value: Union[str, Iterable[str]]) -> List["TestKind"]:
        if isinstance(value, str):
            if value == 'both':
                return [cls.TRIPLES, cls.DAGOSTINO]
            return [cls.parse(value)]
        return [cls.parse(v) for v in value]

    @property
    def min_n(self) -> int:
        return TRIPLES_MIN_N if self is TestKind.TRIPLES else DAGOSTINO_MIN_N

    def run(self, y: np.ndarray) -> TestResult:
        if self is TestKind.TRIPLES:
            return triples_test_right(y)
        return dagostino_test_right(y)


@dataclass(frozen=True)
class PValueSequence:
    """p_0..p_M from one test kind, with per-k statistics and degenerate flags"""

    p: np.ndarray
    test_kind: TestKind
    statistics: np.ndarray
    degenerate: np.ndarray

    @property
    def M(self) -> int:
        return self.p.shape[0] - 1


@dataclass(frozen=True)
class Estimate:
    m_hat: int
    alpha: float
    pvalues: PValueSequence
    per_k_skewness: np.ndarray
    saturated: bool
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class EstimatorConfig:
    alpha: float = DEFAULT_ALPHA
    test: TestKind = TestKind.DAGOSTINO
    max_k: Optional[int] = None
    center: bool = False
    standardize: bool = False
    threads: Optional[int] = None


@dataclass(frozen=True)
class Decomposition:
    """Everything the estimators share for one data matrix"""

    data: DataMatrix
    gram: matrix.GramMatrix
    eigen: matrix.EigenSystem
    residuals: ResidualLengths

    @property
    def M(self) -> int:
        return self.residuals.M


def default_max_k(n: int) -> int:
    return max(0, min(n - 2, DEFAULT_MAX_K))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise OutOfRangeError(f"alpha must lie in (0, 1), got {alpha}", alpha=alpha)


def _test_column(kind: TestKind, y: np.ndarray) -> TestResult:
    try:
        return kind.run(y)
    except ZeroVarianceError:
        return TestResult(statistic=0.0, p_right=0.5, n=y.shape[0], degenerate=True)


def pvalue_sequence(R: ResidualLengths, kind: Union[TestKind, str],
                    threads: Optional[int] = None) -> PValueSequence:
    """Apply the chosen right-skew test to every column k = 0..M of R"""
    kind = TestKind.parse(kind)
    if R.n < kind.min_n:
        raise TooFewObservationsError(
            f"{kind.value} test needs at least {kind.min_n} observations, got {R.n}", n=R.n
        )

    columns = [np.ascontiguousarray(R.column(k)) for k in range(R.M + 1)]
    workers = min(resolve_threads(threads), len(columns))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_test_column, [kind] * len(columns), columns))
    else:
        results = [_test_column(kind, y) for y in columns]

    # Warnings in k order, after the pool
    for k, result in enumerate(results):
        if result.degenerate:
            logger.warning(
                f"{kind.value} residual column k={k} has zero variance; p_k set to 0.5"
            )
        logger.debug(f"{kind.value} k={k}: statistic={result.statistic:.4f} p={result.p_right:.4g}")

    return PValueSequence(
        p=np.array([r.p_right for r in results]),
        test_kind=kind,
        statistics=np.array([r.statistic for r in results]),
        degenerate=np.array([r.degenerate for r in results], dtype=bool),
    )


def skewness_profile(R: ResidualLengths) -> np.ndarray:
    """Sample skewness b1 of every residual column; NaN where the column is constant"""
    profile = np.full(R.M + 1, np.nan)
    for k in range(R.M + 1):
        try:
            profile[k] = sample_skewness(R.column(k))
        except ZeroVarianceError:
            pass
    return profile


def estimate_m(P: PValueSequence, alpha: float = DEFAULT_ALPHA,
               per_k_skewness: Optional[np.ndarray] = None,
               metadata: Optional[Dict[str, Any]] = None) -> Estimate:
    """m_hat = min {k : p_k > alpha}; saturated when no p_k up to M exceeds alpha"""
    _check_alpha(alpha)
    accepted = np.flatnonzero(P.p > alpha)
    if accepted.size:
        m_hat, saturated = int(accepted[0]), False
    else:
        m_hat, saturated = P.M, True
        logger.warning(
            f"No {P.test_kind.value} p-value exceeded alpha={alpha} up to M={P.M}; "
            "estimate is saturated, consider a larger --max-k"
        )
    if per_k_skewness is None:
        per_k_skewness = np.full(P.M + 1, np.nan)
    return Estimate(
        m_hat=m_hat,
        alpha=alpha,
        pvalues=P,
        per_k_skewness=per_k_skewness,
        saturated=saturated,
        metadata=dict(metadata or {}),
    )


def decompose(X: DataMatrix, config: EstimatorConfig) -> Decomposition:
    """Preprocess X per the configuration and compute residual lengths up to M"""
    data = X
    if config.center and not data.centered:
        data = matrix.center_columns(data)
    if config.standardize and not data.standardized:
        data = matrix.standardize_columns(data)

    limit = data.n - 2 if data.centered else data.n - 1
    M = default_max_k(data.n) if config.max_k is None else int(config.max_k)
    if not 0 <= M <= limit:
        raise OutOfRangeError(
            f"max_k={M} must satisfy 0 <= max_k <= {limit} "
            f"({'centered' if data.centered else 'uncentered'} data with n={data.n})",
            max_k=M, n=data.n,
        )

    G = matrix.gram(data)
    E = matrix.gram_eigen(G)
    W = matrix.pc_scores(data, E, M)
    R = matrix.residual_lengths(G, W, data.d, M)
    return Decomposition(data=data, gram=G, eigen=E, residuals=R)


def _metadata(decomposition: Decomposition, kind: TestKind) -> Dict[str, Any]:
    meta: Dict[str, Any] = {
        "n": decomposition.data.n,
        "d": decomposition.data.d,
        "M": decomposition.M,
        "centered": decomposition.data.centered,
        "standardized": decomposition.data.standardized,
        "eigenvalues": decomposition.eigen.eigenvalues,
        "sample_eigenvalues": decomposition.eigen.sample_eigenvalues(),
        "residuals": decomposition.residuals.table,
    }
    if kind is TestKind.TRIPLES:
        meta["variance_estimator"] = TRIPLES_VARIANCE
    return meta


def estimate_from_decomposition(decomposition: Decomposition, alpha: float,
                                kind: Union[TestKind, str],
                                threads: Optional[int] = None) -> Estimate:
    kind = TestKind.parse(kind)
    _check_alpha(alpha)
    P = pvalue_sequence(decomposition.residuals, kind, threads=threads)
    return estimate_m(
        P, alpha,
        per_k_skewness=skewness_profile(decomposition.residuals),
        metadata=_metadata(decomposition, kind),
    )


def estimate_from_data(X: DataMatrix, config: EstimatorConfig = EstimatorConfig()) -> Estimate:
    """End-to-end: preprocessing, Gram route residual lengths, p-values, m_hat"""
    _check_alpha(config.alpha)
    kind = TestKind.parse(config.test)
    if X.n < kind.min_n:
        raise TooFewObservationsError(
            f"{kind.value} test needs at least {kind.min_n} observations, got {X.n}", n=X.n
        )
    return estimate_from_decomposition(decompose(X, config), config.alpha, kind, config.threads)


def estimate_all(X: DataMatrix, config: EstimatorConfig = EstimatorConfig(),
                 kinds: Sequence[Union[TestKind, str]] = (TestKind.TRIPLES, TestKind.DAGOSTINO)
                 ) -> Dict[TestKind, Estimate]:
    """Run the shared pipeline once and apply each test kind to it"""
    _check_alpha(config.alpha)
    parsed = [TestKind.parse(k) for k in kinds]
    for kind in parsed:
        if X.n < kind.min_n:
            raise TooFewObservationsError(
                f"{kind.value} test needs at least {kind.min_n} observations, got {X.n}", n=X.n
            )
    decomposition = decompose(X, config)
    return {
        kind: estimate_from_decomposition(decomposition, config.alpha, kind, config.threads)
        for kind in parsed
    }


def alpha_sweep(source: Union[PValueSequence, Estimate, DataMatrix],
                alphas: Sequence[float],
                config: EstimatorConfig = EstimatorConfig()) -> List[Estimate]:
    """
    One Estimate per alpha. The p-value sequence is computed at most once:
    a PValueSequence or a prior Estimate is reused as is.
    """
    for alpha in alphas:
        _check_alpha(alpha)

    if isinstance(source, DataMatrix):
        base = estimate_from_data(source, replace(config, alpha=alphas[0] if alphas else config.alpha))
    elif isinstance(source, Estimate):
        base = source
    elif isinstance(source, PValueSequence):
        base = estimate_m(source, alphas[0] if alphas else DEFAULT_ALPHA)
    else:
        raise InvalidSpecError(f"Cannot sweep alpha over {type(source).__name__}")

    return [
        estimate_m(base.pvalues, alpha, per_k_skewness=base.per_k_skewness,
                   metadata=base.metadata)
        for alpha in alphas
    ]
