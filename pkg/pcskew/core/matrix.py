"""
Dense linear algebra for the d >> n regime

Everything is computed from the n x n Gram matrix: the d x d covariance is
never formed. Sample PC scores come from the Gram eigenvectors and residual
lengths from the squared row norms minus the cumulative squared scores.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ._accel import njit
from ..errors import (
    InvalidMatrixError,
    NonConvergenceError,
    OutOfRangeError,
    RankDeficientError,
)


logger = logging.getLogger(__name__)

JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
JACOBI_SIZE_BUDGET = 5000
RANK_THRESHOLD = 1e-12
PSD_TOLERANCE = 1e-8
RESIDUAL_TOLERANCE = 1e-10

ArrayLike = Union[np.ndarray, "DataMatrix"]


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """n observations (rows) by d variables (columns)"""

    values: np.ndarray
    centered: bool = False
    standardized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InvalidMatrixError(f"Data must be two-dimensional, got shape {values.shape}")
        if values.shape[0] < 2 or values.shape[1] < 1:
            raise InvalidMatrixError(
                f"Need at least 2 observations and 1 variable, got {values.shape}",
                n=values.shape[0], d=values.shape[1],
            )
        if not np.all(np.isfinite(values)):
            raise InvalidMatrixError("Data contains non-finite values")
        object.__setattr__(self, 'values', _frozen(values))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def scaled(self, factor: float) -> "DataMatrix":
        return DataMatrix(self.values * factor, self.centered, self.standardized)


@dataclass(frozen=True)
class GramMatrix:
    """G = X X^T; S_D = G / d is the scaled Gram matrix"""

    entries: np.ndarray
    d: int

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def scaled(self) -> np.ndarray:
        return self.entries / self.d

    @property
    def squared_norms(self) -> np.ndarray:
        return np.diag(self.entries).copy()


@dataclass(frozen=True)
class EigenSystem:
    """Descending eigenvalues with paired orthonormal eigenvector columns"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def sample_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the d x d sample covariance n^{-1} X^T X (the nonzero ones)"""
        return self.eigenvalues / self.n


@dataclass(frozen=True)
class ScoreMatrix:
    """Entry (j, i) is the score of observation j on sample component i"""

    scores: np.ndarray

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def M(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class ResidualLengths:
    """Entry (j, k) is R_j(k), the scaled squared residual after k components"""

    table: np.ndarray
    d: int

    @property
    def n(self) -> int:
        return self.table.shape[0]

    @property
    def M(self) -> int:
        return self.table.shape[1] - 1

    def column(self, k: int) -> np.ndarray:
        return self.table[:, k]


def _values(X: ArrayLike) -> np.ndarray:
    if isinstance(X, DataMatrix):
        return X.values
    values = np.asarray(X, dtype=float)
    if values.ndim != 2:
        raise InvalidMatrixError(f"Data must be two-dimensional, got shape {values.shape}")
    return values


def center_columns(X: DataMatrix) -> DataMatrix:
    """Subtract column means"""
    values = X.values - X.values.mean(axis=0, keepdims=True)
    return DataMatrix(values, centered=True, standardized=X.standardized)


def standardize_columns(X: DataMatrix) -> DataMatrix:
    """Scale each column to unit standard deviation; constant columns are left alone"""
    std = X.values.std(axis=0)
    constant = std <= 1e-300
    if np.any(constant):
        logger.warning(f"{int(constant.sum())} constant column(s) left unscaled")
    scale = np.where(constant, 1.0, std)
    return DataMatrix(X.values / scale, centered=X.centered, standardized=True)


def gram(X: ArrayLike) -> GramMatrix:
    """Gram matrix X X^T, computed once and mirrored so it is exactly symmetric"""
    values = _values(X)
    G = values @ values.T
    upper = np.triu(G)
    G = upper + np.triu(upper, 1).T
    return GramMatrix(_frozen(G), d=values.shape[1])


@njit(cache=True, nogil=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if np.sqrt(2.0 * off) <= tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    return -1


def sym_eigen(A: np.ndarray, psd: bool = False) -> EigenSystem:
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues are sorted descending (stable, so ties keep their original
    order) and every eigenvector is signed so that its largest-magnitude
    entry is positive. With ``psd=True`` tiny negative eigenvalues from
    roundoff are clamped to zero.
    """
    a = np.array(A, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidMatrixError(f"Expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a)))) if n else 1.0
    if n and np.max(np.abs(a - a.T)) > 1e-10 * scale:
        raise InvalidMatrixError("Matrix is not symmetric")
    if n > JACOBI_SIZE_BUDGET:
        logger.warning(f"Jacobi eigensolver on n={n} exceeds the dense budget of {JACOBI_SIZE_BUDGET}")

    a = 0.5 * (a + a.T)
    trace = float(np.trace(a))
    v = np.eye(n)
    tol = JACOBI_TOLERANCE * float(np.linalg.norm(a))
    sweeps = _jacobi_sweeps(a, v, tol, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NonConvergenceError(
            f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps", n=n
        )
    logger.debug(f"Jacobi converged in {sweeps} sweeps (n={n})")

    mu = np.diag(a).copy()
    order = np.argsort(-mu, kind='stable')
    mu = mu[order]
    v = v[:, order]

    for i in range(n):
        lead = int(np.argmax(np.abs(v[:, i])))
        if v[lead, i] < 0:
            v[:, i] = -v[:, i]

    if psd and n:
        floor = PSD_TOLERANCE * max(trace, 0.0) / n
        if mu[-1] < -floor:
            raise NonConvergenceError(
                f"Eigenvalue {mu[-1]:.3e} is too negative for a positive semi-definite matrix",
                eigenvalue=float(mu[-1]),
            )
        negative = mu < 0
        if np.any(negative):
            logger.debug(f"Clamped {int(negative.sum())} roundoff-negative eigenvalue(s) to 0")
            mu[negative] = 0.0

    return EigenSystem(_frozen(mu), _frozen(v), sweeps=sweeps)


def gram_eigen(G: GramMatrix) -> EigenSystem:
    return sym_eigen(G.entries, psd=True)


def pc_scores(X: ArrayLike, E: EigenSystem, M: int) -> ScoreMatrix:
    """
    Sample PC scores through the Gram route: the score of observation j on
    component i is sqrt(mu_i) times entry j of the i-th Gram eigenvector.
    """
    n = _values(X).shape[0]
    if E.n != n:
        raise InvalidMatrixError(f"Eigensystem has size {E.n}, data has {n} observations")
    if not 0 <= M < n:
        raise OutOfRangeError(f"Number of components M={M} must satisfy 0 <= M < n={n}", M=M, n=n)
    mu = E.eigenvalues
    if M > 0 and not mu[M - 1] > RANK_THRESHOLD * mu[0]:
        raise RankDeficientError(
            f"Component {M} has eigenvalue {mu[M - 1]:.3e}, below the numerical rank "
            f"threshold ({RANK_THRESHOLD:g} x {mu[0]:.3e})",
            M=M,
        )
    scores = E.eigenvectors[:, :M] * np.sqrt(mu[:M])
    return ScoreMatrix(_frozen(scores))


def _residual_table(sq_norms: np.ndarray, scores: np.ndarray, d: int, M: int) -> ResidualLengths:
    n = sq_norms.shape[0]
    table = np.empty((n, M + 1))
    table[:, 0] = sq_norms
    if M:
        table[:, 1:] = sq_norms[:, None] - np.cumsum(scores[:, :M] ** 2, axis=1)
    table /= d

    # Entries within the floor of zero are roundoff, whatever their sign
    floor = RESIDUAL_TOLERANCE * float(table[:, 0].max())
    if table.min() < -floor:
        raise RankDeficientError(
            f"Residual length {table.min():.3e} is negative beyond roundoff",
            minimum=float(table.min()),
        )
    roundoff = np.abs(table) <= floor
    if np.any(roundoff & (table != 0.0)):
        logger.debug(f"Set {int(roundoff.sum())} roundoff-level residual length(s) to 0")
    table[roundoff] = 0.0
    return ResidualLengths(_frozen(table), d=d)


def residual_lengths(G: GramMatrix, W: ScoreMatrix, d: int, M: int) -> ResidualLengths:
    """R_j(k) = (G_jj - sum_{i<=k} w_ij^2) / d for k = 0..M"""
    if not 0 <= M < G.n:
        raise OutOfRangeError(f"M={M} must satisfy 0 <= M < n={G.n}", M=M, n=G.n)
    if M > W.M:
        raise OutOfRangeError(f"Only {W.M} score columns available, M={M} requested", M=M)
    return _residual_table(G.squared_norms, W.scores, d, M)


def residual_lengths_from_scores(scores: np.ndarray, d: int, M: int,
                                 sq_norms: Optional[np.ndarray] = None) -> ResidualLengths:
    """
    Residual lengths from a precomputed scores matrix (n x r).

    Without ``sq_norms`` the scores are taken to span the data, so each
    squared norm is the row sum of squared scores.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2:
        raise InvalidMatrixError(f"Scores must be two-dimensional, got shape {scores.shape}")
    if not 0 <= M <= scores.shape[1]:
        raise OutOfRangeError(
            f"M={M} must be between 0 and the number of score columns ({scores.shape[1]})", M=M
        )
    if sq_norms is None:
        sq_norms = np.sum(scores ** 2, axis=1)
    return _residual_table(np.asarray(sq_norms, dtype=float), scores, d, M)


def decompose(X: ArrayLike, M: int):
    """Gram, eigensystem, scores and residual lengths in one pass"""
    G = gram(X)
    E = gram_eigen(G)
    W = pc_scores(X, E, M)
    R = residual_lengths(G, W, G.d, M)
    return G, E, W, R
