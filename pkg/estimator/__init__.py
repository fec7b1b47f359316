"""
Second-order quadratic variation and the Hurst estimator built on it.
"""
import math
import logging
from dataclasses import dataclass, asdict

import numpy as np

from covariance import check_hurst

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)


class EstimatorError(ValueError):
    pass


class DegenerateVariationError(EstimatorError):
    pass


@dataclass(frozen=True)
class QvRecord:
    n: int
    v2_n: float
    v2_2n: float
    h_hat_raw: float
    h_hat: float
    rescaled_error: float = None

    def as_dict(self):
        return asdict(self)


def second_diff(x):
    """
    Second differences x[j+1] - 2 x[j] + x[j-1] for j = 1..n-1.
    :param x: n+1 grid values (or a (rows, n+1) array of paths)
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 3:
        raise EstimatorError(f'Need at least 3 grid values, got {x.shape[-1]}')
    return x[..., 2:] - 2.0 * x[..., 1:-1] + x[..., :-2]


def qv2(x):
    """
    Sum of squared second differences over j = 1..n-1.
    """
    diff = second_diff(x)
    return np.sum(diff * diff, axis=-1)


def rescaled_variation(x, n, h):
    """
    n^{2H-1} times the second-order quadratic variation on the n-grid.
    """
    h = check_hurst(h)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != n + 1:
        raise EstimatorError(f'Expected {n + 1} grid values, got {x.shape[-1]}')
    return n ** (2.0 * h - 1.0) * qv2(x)


def hurst_hat(v2_n, v2_2n):
    """
    Uncapped and capped estimates 1/2 + log(v2_n / v2_2n) / (2 log 2).
    :return: (h_hat_raw, h_hat)
    :raises DegenerateVariationError: if either variation is not positive
    """
    if not v2_n > 0 or not v2_2n > 0:
        raise DegenerateVariationError(
            f'Degenerate variation: v2_n={v2_n}, v2_2n={v2_2n}')
    raw = 0.5 + math.log(v2_n / v2_2n) / (2.0 * LOG2)
    return raw, min(1.0, max(0.0, raw))


def hurst_hat_batch(v2_n, v2_2n):
    """
    Vectorized uncapped estimate; rows with a nonpositive variation are nan.
    """
    v2_n = np.asarray(v2_n, dtype=np.float64)
    v2_2n = np.asarray(v2_2n, dtype=np.float64)
    ok = (v2_n > 0) & (v2_2n > 0)
    raw = np.full(v2_n.shape, np.nan)
    raw[ok] = 0.5 + np.log(v2_n[ok] / v2_2n[ok]) / (2.0 * LOG2)
    return raw


def estimate_from_path(values, n, h=None):
    """
    Estimate from values on the 2n-grid: v2_2n from all points, v2_n from
    every other point.
    :param values: 2n+1 grid values
    :param n: coarse grid size
    :param h: true Hurst parameter, fills rescaled_error when given
    :return: QvRecord
    """
    values = np.asarray(values, dtype=np.float64)
    n = int(n)
    if n < 2:
        raise EstimatorError(f'n must be at least 2: {n}')
    if values.ndim != 1 or values.size != 2 * n + 1:
        raise EstimatorError(f'Expected {2 * n + 1} grid values for n={n}, got {values.size}')
    v2_2n = float(qv2(values))
    v2_n = float(qv2(values[::2]))
    raw, capped = hurst_hat(v2_n, v2_2n)
    error = None
    if h is not None:
        error = math.sqrt(n) * (raw - check_hurst(h))
    return QvRecord(n=n, v2_n=v2_n, v2_2n=v2_2n, h_hat_raw=raw, h_hat=capped,
                    rescaled_error=error)
