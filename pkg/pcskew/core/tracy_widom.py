"""
Tracy-Widom (order 1) upper quantiles

Quantiles come from the published TW1 percentile table (two decimals) and
are interpolated with a monotone cubic (PCHIP) in the lower-tail
probability. No density solver is involved.
"""

import logging

import numpy as np
from scipy.interpolate import PchipInterpolator

from ..errors import OutOfRangeError


logger = logging.getLogger(__name__)

# F1 percentiles: cumulative probability -> quantile
TW1_PERCENTILES = (
    (0.01, -3.90),
    (0.05, -3.18),
    (0.10, -2.78),
    (0.30, -1.91),
    (0.50, -1.27),
    (0.70, -0.59),
    (0.90, 0.45),
    (0.95, 0.98),
    (0.99, 2.02),
)

_probs = np.array([p for p, _ in TW1_PERCENTILES])
_quantiles = np.array([q for _, q in TW1_PERCENTILES])
_interpolator = PchipInterpolator(_probs, _quantiles, extrapolate=False)

ALPHA_RANGE = (round(1.0 - _probs[-1], 12), round(1.0 - _probs[0], 12))


def tw1_quantile(alpha: float) -> float:
    """s(alpha), the (1 - alpha) quantile of the TW1 law"""
    lo, hi = ALPHA_RANGE
    if not lo - 1e-12 <= alpha <= hi + 1e-12:
        raise OutOfRangeError(
            f"Tracy-Widom quantile table covers alpha in [{lo:.2f}, {hi:.2f}], got {alpha}",
            alpha=alpha,
        )
    prob = float(np.clip(1.0 - alpha, _probs[0], _probs[-1]))
    return float(_interpolator(prob))
