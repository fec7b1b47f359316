"""
Random coefficients of the mixed normal limit of the Hurst estimator and
Monte Carlo evaluation of the limit density and its first-order expansion.
"""
import math
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats
from scipy.integrate import trapezoid

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
TWO_LOG2 = 2.0 * LOG2
# Below this the rescaled variation limit is treated as zero.
MIN_VARIATION = 1e-300
# Points of the fine grid used to compare a histogram with a curve.
COMPARISON_POINTS = 4001
CDF_CHUNK = 1024


class DegenerateCoefficientError(ValueError):
    pass


class VarianceError(ValueError):
    pass


@dataclass(frozen=True)
class PathFunctionals:
    """
    Per-path coefficients. Fields are floats for one path or equally long
    arrays for a batch (see path_functionals_batch).
    """
    v_inf: object
    g_hat: object
    g_inf: object
    a_n: object
    m6: object
    c3: object

    def __len__(self):
        return np.size(self.g_inf)

    def rows(self):
        """
        Split a batch into single-path records.
        """
        columns = [np.atleast_1d(getattr(self, name)) for name in FIELDS]
        return [PathFunctionals(*(float(col[i]) for col in columns)) for i in range(len(self))]

    def as_frame(self):
        return pd.DataFrame({name: np.atleast_1d(getattr(self, name)) for name in FIELDS})


FIELDS = ('v_inf', 'g_hat', 'g_inf', 'a_n', 'm6', 'c3')


def _quadrature_values(x_values, quad_n):
    x_values = np.asarray(x_values, dtype=np.float64)
    points = x_values.shape[-1] - 1
    quad_n = int(quad_n)
    if quad_n < 1 or points % quad_n:
        raise ValueError(f'quad_n {quad_n} does not divide the path grid size {points}')
    return x_values[..., ::points // quad_n]


def path_functionals_batch(x_values, coeffs, constants, quad_n, strict=True):
    """
    Left-endpoint Riemann sums over quad_n cells of [0, 1] for a batch of
    solutions.
    :param x_values: (rows, m + 1) solution values on the grid k/m
    :param coeffs: CoefficientSpec of the equation
    :param constants: HurstConstants
    :param quad_n: number of quadrature cells, dividing m
    :param strict: raise on a degenerate row instead of filling it with nan
    :return: PathFunctionals with array fields
    :raises DegenerateCoefficientError: if strict and some v_inf is below
        MIN_VARIATION
    """
    x = np.atleast_2d(_quadrature_values(x_values, quad_n))
    a = coeffs.diffusion(x) ** 2
    degenerate = ~(constants.c2h * np.mean(a[:, :-1], axis=1) > MIN_VARIATION)
    if np.any(degenerate):
        row = int(np.flatnonzero(degenerate)[0])
        if strict:
            raise DegenerateCoefficientError(
                f'Rescaled variation limit {constants.c2h * np.mean(a[row, :-1])} '
                f'is degenerate (row {row})')
        a = np.where(degenerate[:, None], np.nan, a)
    left = a[:, :-1]
    v_inf = constants.c2h * np.mean(left, axis=1)
    m4 = np.mean(left ** 2, axis=1)
    m6 = np.mean(left ** 3, axis=1)
    g_hat = m4 / v_inf ** 2
    return PathFunctionals(
        v_inf=v_inf,
        g_hat=g_hat,
        g_inf=constants.c_inf * g_hat,
        a_n=-0.5 * constants.c2h * (a[:, 0] + a[:, -1]) / v_inf,
        m6=m6,
        c3=constants.c_qtor * m6 / v_inf ** 3,
    )


def path_functionals(sde_path, coeffs, constants, quad_n):
    """
    Functionals of one solution path: the variation limit v_inf, g_hat,
    g_inf = c_inf g_hat, the boundary term a_n, m6 and c3.
    """
    batch = path_functionals_batch(sde_path.x_values, coeffs, constants, quad_n)
    return batch.rows()[0]


def _columns(samples):
    if isinstance(samples, PathFunctionals):
        g, a, c3 = (np.atleast_1d(np.asarray(getattr(samples, name), dtype=np.float64))
                    for name in ('g_inf', 'a_n', 'c3'))
    else:
        samples = list(samples)
        g = np.array([s.g_inf for s in samples], dtype=np.float64)
        a = np.array([s.a_n for s in samples], dtype=np.float64)
        c3 = np.array([s.c3 for s in samples], dtype=np.float64)
    if g.size == 0:
        raise ValueError('No functional samples')
    if np.any(~(g > 0)):
        raise VarianceError(f'Nonpositive asymptotic variance {g[~(g > 0)][0]}')
    return g, a, c3


def check_positive_variance(constants):
    """
    :raises VarianceError: unless c_inf > 0 for these constants
    """
    if not constants.c_inf > 0:
        raise VarianceError(f'c_inf = {constants.c_inf} is not positive at h = {constants.h}')
    return constants.c_inf


def _normal_pdf(w, var):
    return np.exp(-w * w / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)


def mixed_normal_density(z_grid, samples):
    """
    Mean over samples of the N(0, g_inf / (2 log 2)^2) density at each z.
    """
    g, _, _ = _columns(samples)
    z = np.asarray(z_grid, dtype=np.float64)
    return np.mean(_normal_pdf(z[:, None], g[None, :] / TWO_LOG2 ** 2), axis=1)


def mixed_normal_cdf(z, samples):
    """
    Distribution function of the same mixture.
    """
    g, _, _ = _columns(samples)
    z = np.asarray(z, dtype=np.float64)
    sd = np.sqrt(g) / TWO_LOG2
    flat = z.ravel()
    out = np.empty(flat.size)
    for start in range(0, flat.size, CDF_CHUNK):
        chunk = flat[start:start + CDF_CHUNK]
        out[start:start + CDF_CHUNK] = np.mean(stats.norm.cdf(chunk[:, None] / sd), axis=1)
    return out.reshape(z.shape)


@dataclass(frozen=True)
class DensityCurve:
    z_grid: np.ndarray = field(repr=False)
    leading: np.ndarray = field(repr=False)
    corrected: np.ndarray = field(repr=False)
    n: int
    mc_replicas: int

    def mass(self):
        """
        Trapezoid integrals of (leading, corrected) over the grid.
        """
        return (float(trapezoid(self.leading, self.z_grid)),
                float(trapezoid(self.corrected, self.z_grid)))

    def to_csv(self, file_path):
        frame = pd.DataFrame({'z': self.z_grid, 'leading': self.leading,
                              'corrected': self.corrected})
        frame.to_csv(file_path, index=False, float_format='%.17g', lineterminator='\n',
                     encoding='utf8')


def expansion_density(z_grid, n, samples, constants):
    """
    Leading mixed normal density and the density corrected to order n^{-1/2}
    of sqrt(n)(H' - H), averaged over the sampled coefficients.
    :param z_grid: points z
    :param n: coarse grid size of the estimator
    :param samples: PathFunctionals batch or a list of them
    :param constants: HurstConstants supplying g_coeff
    :return: DensityCurve
    """
    n = int(n)
    if n < 2:
        raise ValueError(f'n must be at least 2: {n}')
    g, a, c3 = _columns(samples)
    z = np.asarray(z_grid, dtype=np.float64)
    w = TWO_LOG2 * z[:, None]
    gg = g[None, :]
    phi = _normal_pdf(w, gg)
    base = np.mean(phi, axis=1)
    third = np.mean(c3[None, :] * (w ** 3 / gg ** 3 - 3.0 * w / gg ** 2) * phi, axis=1)
    boundary = np.mean(0.5 * a[None, :] * (w / gg) * phi, axis=1)
    perturbation = constants.g_coeff * np.mean((2.0 * w - w ** 3 / gg) * phi, axis=1)
    scale = n ** -0.5
    density = base + scale * (third + boundary) + scale * perturbation
    leading = TWO_LOG2 * base
    corrected = TWO_LOG2 * density
    leading.flags.writeable = False
    corrected.flags.writeable = False
    return DensityCurve(z_grid=z.copy(), leading=leading, corrected=corrected, n=n,
                        mc_replicas=int(g.size))


def z_grid_for(values, samples, points=401, width=6.0):
    """
    Equally spaced grid over +-width empirical standard deviations of values;
    with fewer than two values (or zero spread) the mixture sd is used.
    """
    values = np.asarray(values, dtype=np.float64)
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    if not sd > 0:
        g, _, _ = _columns(samples)
        sd = math.sqrt(float(np.mean(g))) / TWO_LOG2
    return np.linspace(-width * sd, width * sd, int(points))


def histogram_density(values):
    """
    Freedman-Diaconis binned density.
    :return: (edges, density)
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError('No values to bin')
    density, edges = np.histogram(values, bins='fd', density=True)
    return edges, density


def write_histogram_csv(file_path, edges, density):
    frame = pd.DataFrame({'bin_left': edges[:-1], 'bin_right': edges[1:], 'density': density})
    frame.to_csv(file_path, index=False, float_format='%.17g', lineterminator='\n',
                 encoding='utf8')


def _step_values(edges, density, z):
    idx = np.searchsorted(edges, z, side='right') - 1
    inside = (idx >= 0) & (idx < density.size)
    # the last bin is closed on the right
    inside |= z == edges[-1]
    idx = np.clip(idx, 0, density.size - 1)
    return np.where(inside, density[idx], 0.0)


def histogram_distances(edges, density, z_grid, curve):
    """
    L1 and sup distances between a histogram step density and a curve given
    on z_grid (linear interpolation, zero outside), over the union of both
    supports.
    :return: dict with 'l1' and 'sup'
    """
    edges = np.asarray(edges, dtype=np.float64)
    density = np.asarray(density, dtype=np.float64)
    z_grid = np.asarray(z_grid, dtype=np.float64)
    lo = min(edges[0], z_grid[0])
    hi = max(edges[-1], z_grid[-1])
    fine = np.union1d(np.linspace(lo, hi, COMPARISON_POINTS), edges)
    curve_values = np.interp(fine, z_grid, np.asarray(curve, dtype=np.float64),
                             left=0.0, right=0.0)
    gap = np.abs(_step_values(edges, density, fine) - curve_values)
    return {'l1': float(trapezoid(gap, fine)), 'sup': float(np.max(gap))}


def ks_distance(values, samples):
    """
    Kolmogorov-Smirnov distance between the empirical law of values and the
    mixed normal CDF of samples.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError('No values for the KS distance')
    result = stats.kstest(values, lambda z: mixed_normal_cdf(z, samples))
    return float(result.statistic)
