"""
Pathwise solvers for dX = V2(X) dt + V1(X) dB driven by an fBm path with
H > 1/2 (Young integration, so first-order schemes converge pathwise).
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from fgn import write_path_csv

logger = logging.getLogger(__name__)

INTEGRATORS = ('euler', 'heun')


class NonFiniteStateError(ValueError):
    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class SdePath:
    h: float
    x_values: np.ndarray = field(repr=False)
    coeffs: object = field(repr=False)
    x0: float

    @property
    def n_points(self):
        return self.x_values.size - 1

    @property
    def grid(self):
        return np.arange(self.x_values.size) / self.n_points

    def to_csv(self, file_path):
        """
        Write the solution as CSV with header t,x.
        """
        write_path_csv(file_path, self.x_values, column='x')


def _check_state(x, step):
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(f'Non-finite state at step {step}', step)


def euler_batch(coeffs, increments, x0):
    """
    Euler scheme for a batch of drivers.
    :param coeffs: CoefficientSpec
    :param increments: (replicas, m) array of fBm increments over [0, 1]
    :param x0: initial value
    :return: (replicas, m + 1) array of states
    :raises NonFiniteStateError: with the first step that left the reals
    """
    increments = np.atleast_2d(np.asarray(increments, dtype=np.float64))
    rows, m = increments.shape
    dt = 1.0 / m
    out = np.empty((rows, m + 1))
    out[:, 0] = x0
    x = out[:, 0].copy()
    for k in range(m):
        x = x + coeffs.drift(x) * dt + coeffs.diffusion(x) * increments[:, k]
        _check_state(x, k + 1)
        out[:, k + 1] = x
    return out


def heun_batch(coeffs, increments, x0):
    """
    Trapezoidal predictor-corrector: an Euler predictor, then a corrector
    averaging the coefficients at both ends of the step.
    """
    increments = np.atleast_2d(np.asarray(increments, dtype=np.float64))
    rows, m = increments.shape
    dt = 1.0 / m
    out = np.empty((rows, m + 1))
    out[:, 0] = x0
    x = out[:, 0].copy()
    for k in range(m):
        db = increments[:, k]
        drift, diffusion = coeffs.drift(x), coeffs.diffusion(x)
        guess = x + drift * dt + diffusion * db
        _check_state(guess, k + 1)
        x = x + 0.5 * (drift + coeffs.drift(guess)) * dt \
            + 0.5 * (diffusion + coeffs.diffusion(guess)) * db
        _check_state(x, k + 1)
        out[:, k + 1] = x
    return out


BATCH_SOLVERS = {'euler': euler_batch, 'heun': heun_batch}


def solve_batch(coeffs, increments, x0, integrator='euler'):
    if integrator not in BATCH_SOLVERS:
        raise ValueError(f'Unknown integrator: {integrator}')
    return BATCH_SOLVERS[integrator](coeffs, increments, x0)


def _driver_increments(driver):
    return np.diff(np.asarray(driver.values, dtype=np.float64))


def _to_path(values, driver, coeffs, x0):
    values = values[0]
    values.flags.writeable = False
    return SdePath(h=driver.h, x_values=values, coeffs=coeffs, x0=float(x0))


def euler_solve(coeffs, driver, x0):
    """
    X_{k+1} = X_k + V2(X_k)/m + V1(X_k) (B_{k+1} - B_k) on the driver's grid.
    :param driver: FbmPath
    :return: SdePath
    """
    return _to_path(euler_batch(coeffs, _driver_increments(driver), x0), driver, coeffs, x0)


def heun_solve(coeffs, driver, x0):
    return _to_path(heun_batch(coeffs, _driver_increments(driver), x0), driver, coeffs, x0)


def solve(coeffs, driver, x0, integrator='euler'):
    """
    Solve on the driver's grid with the named integrator.
    """
    logger.debug('%s solve on %d points', integrator, driver.n_points)
    return _to_path(solve_batch(coeffs, _driver_increments(driver), x0, integrator),
                    driver, coeffs, x0)
