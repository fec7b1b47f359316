"""
Exact sampling of fractional Gaussian noise and fBm paths on uniform grids
of [0, 1], by circulant embedding or Cholesky factorization.
"""
import zlib
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import pandas as pd
import scipy.fft
import scipy.linalg

from covariance import check_hurst, fgn_autocov

logger = logging.getLogger(__name__)

METHODS = ('circulant', 'cholesky')
# Eigenvalues in [-EIGEN_TOL * max, 0) are roundoff and clipped to zero.
EIGEN_TOL = 1e-12
CHOLESKY_MAX_POINTS = 4096


class SamplerError(ValueError):
    pass


def derive_stream(master_seed, tag, index):
    """
    Counter-based random stream for one replica.
    :param master_seed: 64-bit experiment seed
    :param tag: stream family name, e.g. 'hist' or 'mc'
    :param index: replica index
    :return: numpy Generator on a Philox bit generator
    """
    seq = np.random.SeedSequence([int(master_seed) & (2 ** 64 - 1),
                                  zlib.crc32(tag.encode('utf8')), int(index)])
    return np.random.Generator(np.random.Philox(seq))


class FgnSampler:
    """
    Precomputed sampling plan for m fGn increments over [0, 1]. The plan is
    immutable after construction; sample() may be called from any thread
    with its own generator.
    """

    def __init__(self, h, m, method='circulant', allow_boundary=False):
        """
        :param h: Hurst parameter
        :param m: number of increments
        :param method: 'circulant' or 'cholesky'
        :param allow_boundary: accept h = 1/2 (test reference paths)
        """
        self.h = check_hurst(h, allow_boundary=allow_boundary)
        self.m = int(m)
        if self.m < 2:
            raise SamplerError(f'Need at least 2 increments: {m}')
        if method not in METHODS:
            raise SamplerError(f'Unknown sampling method: {method}')
        self.requested = method
        self.fallback = False
        self.scale = self.m ** (-self.h)
        self._weights = None
        self._factor = None
        if method == 'circulant':
            self._weights = self._embedding()
        if self._weights is None:
            self._factor = self._cholesky()
        self.method = 'circulant' if self._weights is not None else 'cholesky'

    def _embedding(self):
        size = 2 * self.m
        row = fgn_autocov(self.h, np.arange(self.m + 1))
        row = np.concatenate([row, row[-2:0:-1]])
        eigen = scipy.fft.fft(row).real
        floor = -EIGEN_TOL * np.max(eigen)
        if np.min(eigen) < floor:
            logger.warning('circulant embedding for h=%s m=%d has eigenvalue %.3e; '
                           'falling back to cholesky', self.h, self.m, np.min(eigen))
            self.fallback = True
            return None
        eigen = np.clip(eigen, 0.0, None)
        weights = np.sqrt(eigen / size)
        weights.flags.writeable = False
        logger.debug('circulant plan h=%s m=%d', self.h, self.m)
        return weights

    def _cholesky(self):
        if self.m > CHOLESKY_MAX_POINTS:
            raise SamplerError(
                f'Cholesky plan for {self.m} points exceeds {CHOLESKY_MAX_POINTS}; '
                f'use the circulant method')
        cov = scipy.linalg.toeplitz(fgn_autocov(self.h, np.arange(self.m)))
        factor = np.linalg.cholesky(cov)
        factor.flags.writeable = False
        logger.debug('cholesky plan h=%s m=%d', self.h, self.m)
        return factor

    def sample(self, rng, size=None):
        """
        Draw increments B_{(k+1)/m} - B_{k/m}.
        :param rng: numpy Generator
        :param size: None for one path, or a number of paths
        :return: array of shape (m,) or (size, m)
        """
        rows = 1 if size is None else int(size)
        if self._weights is not None:
            size2 = self._weights.size
            noise = rng.standard_normal((rows, size2)) + 1j * rng.standard_normal((rows, size2))
            out = scipy.fft.fft(self._weights * noise, axis=1).real[:, :self.m]
        else:
            out = rng.standard_normal((rows, self.m)) @ self._factor.T
        out = self.scale * out
        return out[0] if size is None else out


@lru_cache(maxsize=64)
def sampler(h, m, method='circulant', allow_boundary=False):
    """
    Shared FgnSampler for (h, m, method).
    """
    return FgnSampler(h, m, method, allow_boundary)


def sample_fgn(h, m, rng, method='circulant', allow_boundary=False):
    """
    Sample m fGn increments of an fBm on the grid k/m of [0, 1]; their
    covariance is m^{-2H} gamma(j - k).
    """
    return sampler(float(h), int(m), method, allow_boundary).sample(rng)


@dataclass(frozen=True)
class FbmPath:
    h: float
    values: np.ndarray = field(repr=False)
    seed_info: dict = None

    @property
    def n_points(self):
        return self.values.size - 1

    @property
    def grid(self):
        return np.arange(self.values.size) / self.n_points


def fbm_path(increments, h, seed_info=None):
    """
    Build a path from increments: cumulative sums prefixed with 0.
    """
    increments = np.asarray(increments, dtype=np.float64)
    if increments.ndim != 1 or increments.size == 0:
        raise SamplerError('Increments must be a nonempty 1-d array')
    values = np.concatenate([[0.0], np.cumsum(increments)])
    values.flags.writeable = False
    return FbmPath(h=h, values=values, seed_info=seed_info)


def coarsen(path, factor):
    """
    Keep every factor-th grid value.
    :raises SamplerError: unless factor >= 1 divides the grid size
    """
    factor = int(factor)
    if factor < 1 or path.n_points % factor:
        raise SamplerError(f'Factor {factor} does not divide grid size {path.n_points}')
    if factor == 1:
        return path
    values = path.values[::factor].copy()
    values.flags.writeable = False
    return FbmPath(h=path.h, values=values, seed_info=path.seed_info)


def sample_path(h, m, master_seed, tag, index, method='circulant'):
    """
    One fBm path on k/m drawn from the replica stream (master_seed, tag, index).
    """
    plan = sampler(float(h), int(m), method, False)
    increments = plan.sample(derive_stream(master_seed, tag, index))
    info = {'master_seed': master_seed, 'tag': tag, 'index': index, 'method': plan.method}
    return fbm_path(increments, h, info)


def write_path_csv(file_path, values, column='value'):
    """
    Write grid values on [0, 1] as CSV with header t,<column>.
    """
    values = np.asarray(values, dtype=np.float64)
    frame = pd.DataFrame({'t': np.arange(values.size) / (values.size - 1), column: values})
    frame.to_csv(file_path, index=False, float_format='%.17g', lineterminator='\n',
                 encoding='utf8')


def read_path_csv(file_path, column='value'):
    """
    Read a path written by write_path_csv.
    :return: (t, values) arrays
    :raises SamplerError: on a missing column or a non-uniform grid
    """
    frame = pd.read_csv(file_path, encoding='utf8')
    if 't' not in frame.columns or column not in frame.columns:
        raise SamplerError(f'{file_path}: expected columns t,{column}')
    t = frame['t'].to_numpy(dtype=np.float64)
    values = frame[column].to_numpy(dtype=np.float64)
    if t.size < 2:
        raise SamplerError(f'{file_path}: need at least 2 rows')
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise SamplerError(f'{file_path}: grid is not uniform')
    return t, values
