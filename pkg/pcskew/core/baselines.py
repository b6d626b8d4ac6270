"""
Comparison estimators

- Bai-Ng information criterion IC_p2 on the residual lengths (the standard
  criterion, not the modified variant some studies use).
- Kritchman-Nadler sequential test of the leading sample eigenvalue against a
  Tracy-Widom threshold, with a plain trailing-mean noise estimate.
- Cumulative proportion of variance explained (scree heuristic).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .matrix import ResidualLengths
from .tracy_widom import tw1_quantile
from ..errors import (
    DegenerateResidualsError,
    OutOfRangeError,
    TooFewObservationsError,
)


logger = logging.getLogger(__name__)

KN_MIN_N = 10
DEFAULT_KN_ALPHA = 0.05
DEFAULT_VARIANCE_THRESHOLD = 0.8


class BaselineMethod(str, Enum):
    BAI_NG = "bai_ng"
    KRITCHMAN_NADLER = "kritchman_nadler"
    VARIANCE_EXPLAINED = "variance_explained"


@dataclass(frozen=True)
class BaselineResult:
    method: BaselineMethod
    m_hat: int
    criterion_trace: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)


def bai_ng(R: ResidualLengths, n: int, d: int, M: int) -> BaselineResult:
    """
    IC(k) = ln V(k) + k ((n + d) / (n d)) ln(n d / (n + d)), V(k) = mean_j R_j(k);
    m_hat is the first minimizer over k = 0..M.
    """
    if M > R.M:
        raise OutOfRangeError(f"Residual table has M={R.M}, requested {M}", M=M)
    V = R.table[:, :M + 1].mean(axis=0)
    if np.any(V <= 0):
        k = int(np.flatnonzero(V <= 0)[0])
        raise DegenerateResidualsError(
            f"Mean residual length is zero at k={k}; the information criterion is undefined", k=k
        )
    k = np.arange(M + 1)
    penalty = k * ((n + d) / (n * d)) * np.log(n * d / (n + d))
    ic = np.log(V) + penalty
    m_hat = int(np.argmin(ic))
    return BaselineResult(
        method=BaselineMethod.BAI_NG,
        m_hat=m_hat,
        criterion_trace=ic,
        metadata={"criterion": "IC_p2"},
    )


def _tw_centering(n: int, p: int) -> Tuple[float, float]:
    """Centering mu_{n,p} and scaling xi_{n,p} of the largest eigenvalue, both per 1/n"""
    a = np.sqrt(n - 0.5)
    b = np.sqrt(p - 0.5)
    mu = (a + b) ** 2 / n
    xi = ((a + b) / n) * (1.0 / a + 1.0 / b) ** (1.0 / 3.0)
    return float(mu), float(xi)


def kritchman_nadler(sample_eigenvalues, n: int, d: int,
                     alpha: float = DEFAULT_KN_ALPHA, M: Optional[int] = None) -> BaselineResult:
    """
    For k = 0, 1, ... reject "rank = k" while the (k+1)-th sample eigenvalue
    exceeds sigma^2(k) (mu_{n,d-k} + s(alpha) xi_{n,d-k}). The noise level
    sigma^2(k) is the trailing eigenvalue mass divided by the d - k remaining
    dimensions. m_hat is the first k that is not rejected, or M if all are.
    """
    lam = np.sort(np.asarray(sample_eigenvalues, dtype=float))[::-1]
    if n < KN_MIN_N:
        raise TooFewObservationsError(
            f"Kritchman-Nadler estimator needs n >= {KN_MIN_N}, got {n}", n=n
        )
    if d <= n:
        raise OutOfRangeError(
            f"Kritchman-Nadler estimator is configured for d > n, got d={d}, n={n}", n=n, d=d
        )
    if M is None:
        M = min(n - 2, lam.shape[0] - 1)
    if not 0 <= M < min(n, lam.shape[0] + 1):
        raise OutOfRangeError(f"M={M} must satisfy 0 <= M < n={n}", M=M, n=n)
    s_alpha = tw1_quantile(alpha)

    thresholds = np.empty(M + 1)
    rejected = np.empty(M + 1, dtype=bool)
    for k in range(M + 1):
        remaining = d - k
        sigma2 = float(lam[k:].sum()) / remaining
        mu, xi = _tw_centering(n, remaining)
        thresholds[k] = sigma2 * (mu + s_alpha * xi)
        rejected[k] = k < lam.shape[0] and lam[k] > thresholds[k]

    accepted = np.flatnonzero(~rejected)
    m_hat = int(accepted[0]) if accepted.size else M
    return BaselineResult(
        method=BaselineMethod.KRITCHMAN_NADLER,
        m_hat=m_hat,
        criterion_trace=thresholds,
        metadata={"alpha": alpha, "tw_quantile": s_alpha, "noise_estimate": "trailing-mean"},
    )


def scree_table(eigenvalues) -> List[Tuple[int, float, float]]:
    """Rows (i, eigenvalue_i, cumulative percent of variance) for i = 1..r"""
    lam = np.asarray(eigenvalues, dtype=float)
    total = lam.sum()
    cumulative = np.cumsum(lam) / total * 100.0 if total > 0 else np.zeros_like(lam)
    return [(i + 1, float(lam[i]), float(cumulative[i])) for i in range(lam.shape[0])]


def variance_explained_estimate(eigenvalues,
                                threshold: float = DEFAULT_VARIANCE_THRESHOLD) -> BaselineResult:
    """Smallest k whose first k eigenvalues explain at least `threshold` of the variance"""
    if not 0.0 < threshold <= 1.0:
        raise OutOfRangeError(f"Variance threshold must lie in (0, 1], got {threshold}",
                              threshold=threshold)
    lam = np.asarray(eigenvalues, dtype=float)
    total = lam.sum()
    if not total > 0:
        raise DegenerateResidualsError("Eigenvalues sum to zero")
    proportions = np.concatenate([[0.0], np.cumsum(lam) / total])
    # Guard the final proportion against roundoff just below 1
    proportions[-1] = 1.0
    m_hat = int(np.flatnonzero(proportions >= threshold - 1e-12)[0])
    return BaselineResult(
        method=BaselineMethod.VARIANCE_EXPLAINED,
        m_hat=m_hat,
        criterion_trace=proportions,
        metadata={"threshold": threshold},
    )


def kn_alpha_sweep(sample_eigenvalues, n: int, d: int, alphas: Sequence[float],
                   M: Optional[int] = None) -> List[BaselineResult]:
    return [kritchman_nadler(sample_eigenvalues, n, d, alpha, M) for alpha in alphas]


def variance_threshold_sweep(eigenvalues, thresholds: Sequence[float]) -> List[BaselineResult]:
    return [variance_explained_estimate(eigenvalues, t) for t in thresholds]
