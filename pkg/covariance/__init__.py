"""
Inner products of fBm increments over intervals, the covariance sequences of
second differences, and the series constants of the Hurst estimator expansion.
"""
import math
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy.signal import fftconvolve

logger = logging.getLogger(__name__)

# Lags beyond this are evaluated in extended precision.
EXTENDED_PRECISION_LAG = 1000
MIN_TRUNCATION = 64
MAX_TRUNCATION = 60000
# Lags used to estimate the decay constant of rho_hat / rho_tilde.
DECAY_LAGS = range(2, 65)


class HurstError(ValueError):
    pass


class LagError(ValueError):
    pass


class TruncationError(ValueError):
    def __init__(self, message, tail_bound, k):
        super().__init__(message)
        self.tail_bound = tail_bound
        self.k = k


def check_hurst(h, allow_boundary=False):
    """
    Validate a Hurst parameter.
    :param h: Hurst parameter
    :param allow_boundary: accept h = 1/2 (closed-form oracles only)
    :return: h as a float
    :raises HurstError: if h is outside (1/2, 1), or [1/2, 1) with allow_boundary
    """
    h = float(h)
    if not math.isfinite(h) or h >= 1.0 or h < 0.5:
        raise HurstError(f'Hurst parameter out of range: {h}')
    if h == 0.5 and not allow_boundary:
        raise HurstError(f'Hurst parameter must exceed 1/2: {h}')
    return h


def _power(x, h):
    return np.abs(x) ** (2.0 * h)


def interval_inner(h, a, b, c, d):
    """
    Covariance of the fBm increments over [a, b] and [c, d], that is the
    inner product of the indicators 1_[a,b] and 1_[c,d] in the fBm Hilbert
    space. Degenerate intervals (a = b or c = d) give the zero kernel.
    Array endpoints are broadcast.
    """
    a, b, c, d = (np.asarray(v, dtype=np.float64) for v in (a, b, c, d))
    value = 0.5 * (_power(d - a, h) + _power(c - b, h) - _power(c - a, h) - _power(d - b, h))
    value = np.where((a == b) | (c == d), 0.0, value)
    if value.ndim == 0:
        return float(value)
    return value


def fgn_autocov(h, k):
    """
    Autocovariance of unit-lag fractional Gaussian noise,
    gamma(k) = interval_inner(h, 0, 1, k, k+1).
    """
    k = np.asarray(k, dtype=np.float64)
    return interval_inner(h, 0.0, 1.0, k, k + 1.0)


def c2h(h):
    return 4.0 - 2.0 ** (2.0 * h)


def _rho_hat_float(h, j):
    return (interval_inner(h, 0, 1, j, j + 1) - interval_inner(h, 0, 1, j - 1, j)
            - interval_inner(h, -1, 0, j, j + 1) + interval_inner(h, -1, 0, j - 1, j))


def _rho_tilde_float(h, j):
    value = (interval_inner(h, 0, 1, j, j + 2) - interval_inner(h, 0, 1, j - 2, j)
             - interval_inner(h, -1, 0, j, j + 2) + interval_inner(h, -1, 0, j - 2, j))
    return 2.0 ** (-2.0 * h) * value


@lru_cache(maxsize=1 << 18)
def _mp_power(k, h):
    with mp.workdps(40):
        return mp.power(abs(k), 2 * mp.mpf(h))


def _rho_hat_mp(h, j):
    # the four-term expansion collapses to a fourth difference of |k|^{2H}
    p = [_mp_power(j + s, h) for s in (-2, -1, 0, 1, 2)]
    with mp.workdps(40):
        return float((-p[0] + 4 * p[1] - 6 * p[2] + 4 * p[3] - p[4]) / 2)


def _rho_tilde_mp(h, j):
    p = [_mp_power(j + s, h) for s in (-3, -2, -1, 0, 1, 2, 3)]
    with mp.workdps(40):
        value = (-p[0] + 2 * p[1] + p[2] - 4 * p[3] + p[4] + 2 * p[5] - p[6]) / 2
        return float(mp.power(2, -2 * mp.mpf(h)) * value)


def _sequence(h, js, float_fn, mp_fn):
    js = np.asarray(js, dtype=np.int64)
    out = np.array(float_fn(h, js.astype(np.float64)), dtype=np.float64, ndmin=1)
    for idx in np.flatnonzero(np.abs(js) > EXTENDED_PRECISION_LAG):
        out[idx] = mp_fn(h, int(js[idx]))
    return out


def rho_hat(h, j):
    """
    Covariance of unit-scale second differences,
    <1_[0,1] - 1_[-1,0], 1_[j,j+1] - 1_[j-1,j]>.
    :param h: Hurst parameter, h = 1/2 permitted
    :param j: integer lag or array of lags
    """
    h = check_hurst(h, allow_boundary=True)
    if np.ndim(j) == 0:
        return float(_sequence(h, [int(j)], _rho_hat_float, _rho_hat_mp)[0])
    return _sequence(h, j, _rho_hat_float, _rho_hat_mp)


def rho_tilde(h, j):
    """
    Covariance between a unit-scale second difference and a second
    difference on the doubled scale,
    2^{-2H} <1_[0,1] - 1_[-1,0], 1_[j,j+2] - 1_[j-2,j]>.
    """
    h = check_hurst(h, allow_boundary=True)
    if np.ndim(j) == 0:
        return float(_sequence(h, [int(j)], _rho_tilde_float, _rho_tilde_mp)[0])
    return _sequence(h, j, _rho_tilde_float, _rho_tilde_mp)


def rescaled_inner(h, n, j1, j2, scale=1):
    """
    n^{2H} <d^n_{j1}, d^{scale*n}_{j2}> where d^n_j = 1^n_{j+1} - 1^n_j and
    1^n_j is the indicator of [(j-1)/n, j/n].
    """
    m = scale * n

    def pieces(j, size):
        return (((j / size, (j + 1) / size), 1.0), (((j - 1) / size, j / size), -1.0))

    total = 0.0
    for (a, b), s in pieces(j1, n):
        for (c, d), t in pieces(j2, m):
            total += s * t * interval_inner(h, a, b, c, d)
    return n ** (2.0 * h) * total


def inner_identities(h, n=1, j=1):
    """
    Evaluate the identities between second differences and indicators
    through interval_inner.
    :return: dict name -> (computed, closed form)
    """
    d_vs_right = interval_inner(h, 0, 1, 0, 1) - interval_inner(h, -1, 0, 0, 1)
    d_vs_left = interval_inner(h, 0, 1, -1, 0) - interval_inner(h, -1, 0, -1, 0)
    indicator_sq = interval_inner(h, (j - 1) / n, j / n, (j - 1) / n, j / n)
    return {
        'd_vs_right': (d_vs_right, 0.5 * c2h(h)),
        'd_vs_left': (d_vs_left, -0.5 * c2h(h)),
        'indicator_sq': (indicator_sq, n ** (-2.0 * h)),
    }


@dataclass(frozen=True)
class HurstConstants:
    """
    Series constants for one Hurst parameter. rho_hat and rho_tilde are
    read-only tables over lags -truncation_k..truncation_k.
    """
    h: float
    c2h: float
    rho_hat: np.ndarray = field(repr=False)
    rho_tilde: np.ndarray = field(repr=False)
    c_hat: float
    c_tilde: float
    c_inf: float
    c_qtor: float
    g_coeff: float
    truncation_k: int
    tol: float
    tail_bound: float

    def rho_hat_at(self, j):
        if abs(j) > self.truncation_k:
            raise LagError(f'lag {j} beyond truncation {self.truncation_k}')
        return float(self.rho_hat[j + self.truncation_k])

    def rho_tilde_at(self, j):
        if abs(j) > self.truncation_k:
            raise LagError(f'lag {j} beyond truncation {self.truncation_k}')
        return float(self.rho_tilde[j + self.truncation_k])

    def as_dict(self):
        return {
            'h': self.h, 'c2h': self.c2h, 'c_hat': self.c_hat,
            'c_tilde': self.c_tilde, 'c_inf': self.c_inf,
            'c_qtor': self.c_qtor, 'g_coeff': self.g_coeff,
            'truncation_k': self.truncation_k, 'tol': self.tol,
            'tail_bound': self.tail_bound,
        }


def decay_constant(h):
    """
    C = 2 max_{2<=k<=64} |rho(k)| k^{4-2H} over both sequences.
    """
    lags = np.arange(min(DECAY_LAGS), max(DECAY_LAGS) + 1)
    scale = lags.astype(np.float64) ** (4.0 - 2.0 * h)
    hat = np.max(np.abs(rho_hat(h, lags)) * scale)
    tilde = np.max(np.abs(rho_tilde(h, lags)) * scale)
    return 2.0 * max(hat, tilde)


def _tail_prefactor(h, decay):
    # Tails beyond K are bounded by A K^{4H-7}. Single sums: both sides of
    # C^2 k^{4H-8}. Double sums: the inner convolution decays like the
    # sequences themselves, up to 2^{4-2H} times their l1 norm.
    rate = 7.0 - 4.0 * h
    single = 2.0 * decay ** 2 / rate
    cut = max(DECAY_LAGS)
    lags = np.arange(-cut, cut + 1)
    l1 = (np.sum(np.abs(rho_hat(h, lags))) + np.sum(np.abs(rho_tilde(h, lags)))
          + 4.0 * decay * cut ** (2.0 * h - 3.0) / (3.0 - 2.0 * h))
    weight = 1.0 + 2.0 ** (2.0 * h + 1.0) + 2.0 ** (2.0 * h)
    double = weight * 8.0 * 2.0 ** (4.0 - 2.0 * h) * l1 * decay ** 2 / rate
    return max(single, double)


def truncation(h, tol):
    """
    Smallest K >= MIN_TRUNCATION whose tail bound is below tol.
    :return: (K, tail bound at K)
    :raises TruncationError: if K exceeds MAX_TRUNCATION
    """
    rate = 7.0 - 4.0 * h
    prefactor = _tail_prefactor(h, decay_constant(h))
    if prefactor == 0.0:
        return MIN_TRUNCATION, 0.0
    k = max(math.ceil((prefactor / tol) ** (1.0 / rate)), MIN_TRUNCATION)
    if k > MAX_TRUNCATION:
        achieved = prefactor * MAX_TRUNCATION ** (-rate)
        raise TruncationError(
            f'tol {tol} needs truncation {k} beyond cap {MAX_TRUNCATION}; '
            f'achievable tail bound {achieved:.3e}', achieved, k)
    return k, prefactor * k ** (-rate)


def series_constants(h, tol=1e-10):
    """
    Compute c_{2,H}, the rho tables and the series constants c_hat, c_tilde,
    c_inf, c_qtor and the g_infinity coefficient, truncating the lattice sums
    at |j| <= K.
    :param h: Hurst parameter in [1/2, 1)
    :param tol: tail tolerance
    :return: HurstConstants
    :raises TruncationError: when K would exceed MAX_TRUNCATION
    """
    h = check_hurst(h, allow_boundary=True)
    if not tol > 0:
        raise ValueError(f'Tolerance must be positive: {tol}')
    k, tail = truncation(h, tol)
    logger.debug('h=%s tol=%s truncation K=%d tail bound %.3e', h, tol, k, tail)

    # rho_hat(i1 - i2) reaches 2K, rho_tilde(2 i1 - i2) reaches 3K
    hat_full = rho_hat(h, np.arange(-2 * k, 2 * k + 1))
    tilde_full = rho_tilde(h, np.arange(-3 * k, 3 * k + 1))
    hat = hat_full[k:3 * k + 1].copy()
    tilde = tilde_full[2 * k:4 * k + 1].copy()
    hat.flags.writeable = False
    tilde.flags.writeable = False

    c_hat = float(np.sum(hat ** 2))
    c_tilde = float(np.sum(tilde ** 2))
    two_2h = 2.0 ** (2.0 * h)
    c_inf = 3.0 * c_hat - 2.0 * two_2h * c_tilde

    # fftconvolve(short on [-K,K], long on [-L,L]) holds
    # sum_p short(p) long(i - p) at index i + K + L.
    idx = np.arange(-k, k + 1)
    conv = fftconvolve(hat, hat_full)
    first = float(np.sum(hat * conv[idx + 3 * k]))
    conv = fftconvolve(tilde, tilde_full)
    second = float(np.sum(hat * conv[2 * idx + 4 * k]))
    conv = fftconvolve(tilde, hat_full)
    third = float(np.sum(tilde * conv[idx + 3 * k]))
    c_qtor = first - 2.0 * two_2h * second + two_2h * third

    g_coeff = 0.5 * c_hat / (3.0 * c_hat - 2.0 * c_tilde * two_2h)
    return HurstConstants(
        h=h, c2h=c2h(h), rho_hat=hat, rho_tilde=tilde, c_hat=c_hat,
        c_tilde=c_tilde, c_inf=c_inf, c_qtor=c_qtor, g_coeff=g_coeff,
        truncation_k=k, tol=tol, tail_bound=tail)
