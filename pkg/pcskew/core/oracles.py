"""
Numerical oracles for the spiked model

gram_limit_check compares the scaled Gram matrix S_D = X X^T / d with its
large-d limit W1^T W1 + tau^2 I. score_rotation_check compares the leading
sample scores with the rotated and scaled true scores W1^T R S, where R holds
the eigenvectors of W1 W1^T and S = diag(rho_k), rho_k = (1 + tau^2 / l_k)^{1/2}.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import matrix
from .simulation import EigenModel, ScoreDistribution, ScorePanel, population_scores
from ..errors import InvalidSpecError


logger = logging.getLogger(__name__)

NORMAL_SQUARE_VARIANCE = 2.0


@dataclass(frozen=True)
class GramLimitReport:
    max_deviation: float
    max_offdiag_deviation: float
    studentized_diagonal: np.ndarray
    tau2: float
    upsilon_d: float
    upsilon_o: float


@dataclass(frozen=True)
class ScoreRotationReport:
    residual: float
    rho: np.ndarray
    first_component_ratio: np.ndarray
    noise_second_moments: np.ndarray
    tau2: float


def _spike_scores(model: EigenModel, Z: ScorePanel) -> np.ndarray:
    """W1^T: n x m, entries sigma_i z_ij"""
    return Z.z[:, :model.m] * np.sqrt(model.spike_variances)


def _square_variance(model: EigenModel, Z: ScorePanel) -> float:
    if Z.distribution is ScoreDistribution.NORMAL:
        return NORMAL_SQUARE_VARIANCE
    noise = Z.z[:, model.m:]
    return float(np.var(noise ** 2))


def gram_limit_check(model: EigenModel, Z: ScorePanel) -> GramLimitReport:
    if not model.m < Z.n:
        raise InvalidSpecError(f"Need m < n, got m={model.m}, n={Z.n}")
    d = model.d
    W = population_scores(model, Z)
    S = (W @ W.T) / d

    W1t = _spike_scores(model, Z)
    tau2 = model.tau2
    limit = W1t @ W1t.T + tau2 * np.eye(Z.n)
    deviation = np.abs(S - limit)
    off = deviation[~np.eye(Z.n, dtype=bool)]

    noise = model.lambdas[model.m:]
    upsilon_d = float(np.sqrt(np.sum(noise ** 2) * _square_variance(model, Z) / d))
    upsilon_o = float(np.sqrt(np.sum(noise ** 2) / d))
    spike_part = np.sum(W1t ** 2, axis=1)
    studentized = np.sqrt(d) * (np.diag(S) - spike_part - tau2) / upsilon_d

    return GramLimitReport(
        max_deviation=float(deviation.max()),
        max_offdiag_deviation=float(off.max()) if off.size else 0.0,
        studentized_diagonal=studentized,
        tau2=tau2,
        upsilon_d=upsilon_d,
        upsilon_o=upsilon_o,
    )


def score_rotation_check(model: EigenModel, Z: ScorePanel) -> ScoreRotationReport:
    m = model.m
    if m < 1:
        raise InvalidSpecError("Score rotation check needs at least one spike")
    if not m < Z.n:
        raise InvalidSpecError(f"Need m < n, got m={m}, n={Z.n}")
    d = model.d

    X = matrix.DataMatrix(population_scores(model, Z))
    E = matrix.gram_eigen(matrix.gram(X))
    sample = matrix.pc_scores(X, E, m).scores / np.sqrt(d)

    W1t = _spike_scores(model, Z)
    inner = matrix.sym_eigen(W1t.T @ W1t)
    tau2 = model.tau2
    rho = np.sqrt(1.0 + tau2 / inner.eigenvalues)
    target = W1t @ inner.eigenvectors * rho

    # Eigenvector signs are arbitrary; align each sample column with its target
    signs = np.sign(np.sum(sample * target, axis=0))
    signs[signs == 0] = 1.0
    aligned = sample * signs
    residual = float(np.max(np.abs(aligned - target)))

    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = aligned[:, 0] / W1t[:, 0]
    noise_moments = E.eigenvalues[m:] / d

    logger.debug(f"Score rotation residual {residual:.4g} at d={d}, rho={rho}")
    return ScoreRotationReport(
        residual=residual,
        rho=rho,
        first_component_ratio=ratio,
        noise_second_moments=noise_moments,
        tau2=tau2,
    )
