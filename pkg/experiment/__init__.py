"""
Density-fit experiments: histogram of sqrt(n)(H' - H) over simulated SDE
paths against the mixed normal and expansion densities, written as CSV,
JSON and a plotting script.
"""
import os
import json
import math
import time
import logging

import numpy as np
from scipy import stats

from control import Control
from covariance import series_constants
from estimator import qv2, hurst_hat_batch
from expansion import (
    PathFunctionals, FIELDS, path_functionals_batch, check_positive_variance,
    expansion_density, histogram_density, histogram_distances, ks_distance,
    write_histogram_csv, z_grid_for,
)
from fgn import derive_stream, sampler
from youngsde import NonFiniteStateError, solve_batch
from config import write_experiment

logger = logging.getLogger(__name__)

VERSION = 'v0.1.0'
# Largest share of degenerate paths tolerated before aborting.
MAX_SKIPPED_FRACTION = 0.01
HIST_TAG = 'hist'
MC_TAG = 'mc'

PLOT_TEMPLATE = """#!/usr/bin/env python3
\"\"\"
Plot the histogram of sqrt(n)(H' - H) with the mixed normal (dashed) and
expansion (solid) densities. Generated by hurst_lab {version}.
\"\"\"
import os

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import pandas as pd

HERE = os.path.dirname(os.path.realpath(__file__))


def main():
    hist = pd.read_csv(os.path.join(HERE, 'hist.csv'))
    curves = pd.read_csv(os.path.join(HERE, 'curves.csv'))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(hist['bin_left'], hist['density'], width=hist['bin_right'] - hist['bin_left'],
           align='edge', color='0.85', edgecolor='0.6', label='histogram')
    ax.plot(curves['z'], curves['leading'], 'k--', label='mixed normal')
    ax.plot(curves['z'], curves['corrected'], 'k-', label='expansion')
    ax.set_title('{title}')
    ax.set_xlabel('z')
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, '{image}'), dpi=150)


if __name__ == '__main__':
    main()
"""


class ExperimentAborted(ValueError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


def _batches(count, size):
    return [(start, min(start + size, count)) for start in range(0, count, size)]


def _drivers(cfg, tag, start, stop, points):
    plan = sampler(float(cfg.h), int(points), cfg.method, False)
    return np.stack([plan.sample(derive_stream(cfg.master_seed, tag, idx))
                     for idx in range(start, stop)])


def _solve_rows(cfg, coeffs, increments):
    """
    Solve a batch; on a non-finite state fall back to row by row solving.
    :return: (states with nan rows for failures, list of (row, step))
    """
    try:
        return solve_batch(coeffs, increments, cfg.x0, cfg.integrator), []
    except NonFiniteStateError:
        pass
    out = np.full((increments.shape[0], increments.shape[1] + 1), np.nan)
    failures = []
    for row in range(increments.shape[0]):
        try:
            out[row] = solve_batch(coeffs, increments[row:row + 1], cfg.x0, cfg.integrator)[0]
        except NonFiniteStateError as exc:
            failures.append((row, exc.step))
    return out, failures


def hist_batch(task):
    """
    Rescaled estimation errors for histogram replicas start..stop-1; nan
    marks a skipped path.
    """
    cfg, start, stop = task
    coeffs = cfg.coefficients()
    increments = _drivers(cfg, HIST_TAG, start, stop, cfg.fine_points)
    states, failures = _solve_rows(cfg, coeffs, increments)
    on_2n = states[:, ::cfg.oversample]
    raw = hurst_hat_batch(qv2(on_2n[:, ::2]), qv2(on_2n))
    errors = math.sqrt(cfg.n) * (raw - cfg.h)
    notes = [f'hist path {start + row}: non-finite state at step {step}' for row, step in failures]
    notes += [f'hist path {start + row}: degenerate variation'
              for row in np.flatnonzero(np.isnan(errors)) if row not in dict(failures)]
    return errors, notes


def mc_batch(task):
    """
    Path functionals for curve replicas start..stop-1, simulated on the
    quadrature grid; rows of skipped paths are nan.
    """
    cfg, constants, start, stop = task
    coeffs = cfg.coefficients()
    increments = _drivers(cfg, MC_TAG, start, stop, cfg.quad_n)
    states, failures = _solve_rows(cfg, coeffs, increments)
    good = np.flatnonzero(np.all(np.isfinite(states), axis=1))
    columns = {name: np.full(stop - start, np.nan) for name in FIELDS}
    if good.size:
        batch = path_functionals_batch(states[good], coeffs, constants, cfg.quad_n, strict=False)
        for name in FIELDS:
            columns[name][good] = getattr(batch, name)
    notes = [f'mc path {start + row}: non-finite state at step {step}' for row, step in failures]
    notes += [f'mc path {start + row}: degenerate variation limit'
              for row in good[np.isnan(columns['g_inf'][good])]]
    return columns, notes


def _check_skipped(kind, skipped, total, notes):
    if skipped > MAX_SKIPPED_FRACTION * total:
        diagnostics = {'kind': kind, 'skipped': skipped, 'paths': total, 'notes': notes[:20]}
        raise ExperimentAborted(
            f'{skipped} of {total} {kind} paths are degenerate '
            f'(limit {MAX_SKIPPED_FRACTION:.0%})', diagnostics)
    if skipped:
        logger.warning('skipped %d of %d %s paths', skipped, total, kind)


def _finite_or_none(value):
    value = float(value)
    return value if math.isfinite(value) else None


def _moments(values):
    values = np.asarray(values, dtype=np.float64)
    record = {'count': int(values.size), 'mean': _finite_or_none(np.mean(values))}
    if values.size > 1:
        record['sd'] = _finite_or_none(np.std(values, ddof=1))
        record['skewness'] = _finite_or_none(stats.skew(values))
        record['excess_kurtosis'] = _finite_or_none(stats.kurtosis(values))
    else:
        record.update(sd=None, skewness=None, excess_kurtosis=None)
    return record


def write_plot_script(out_dir, cfg):
    """
    Write plot.py rendering hist.csv and curves.csv with matplotlib.
    """
    title = f'sde={cfg.sde if isinstance(cfg.sde, str) else "custom"}, H={cfg.h}, n={cfg.n}'
    source = PLOT_TEMPLATE.format(version=VERSION, title=title,
                                  image=f'density_h{cfg.h}_n{cfg.n}_sd{cfg.master_seed}.png')
    file_path = os.path.join(out_dir, 'plot.py')
    with open(file_path, 'w', encoding='utf8') as file:
        file.write(source)
    return file_path


def run_experiment(cfg, comments=None, control=None):
    """
    Run one experiment and write hist.csv, curves.csv, summary.json,
    experiment.yaml and plot.py into cfg.out_dir.
    :param cfg: ExperimentConfig
    :param comments: YAML comments of the source file for the echo
    :param control: started Control, or None to run with cfg.workers
    :return: the summary dict
    :raises ExperimentAborted: if more than 1% of paths are degenerate
    """
    started = time.perf_counter()
    constants = series_constants(cfg.h, cfg.tol)
    check_positive_variance(constants)
    os.makedirs(cfg.out_dir, exist_ok=True)

    own_control = control is None
    if own_control:
        control = Control(cfg.workers, name='experiment')
        control.start()
    try:
        logger.info('histogram phase: %d paths on %d points', cfg.hist_paths, cfg.fine_points)
        results = control.map(hist_batch, [(cfg, start, stop) for start, stop
                                           in _batches(cfg.hist_paths, cfg.batch_size)])
        errors = np.concatenate([r[0] for r in results])
        hist_notes = [note for r in results for note in r[1]]
        logger.info('curve phase: %d paths on %d points', cfg.mc_paths, cfg.quad_n)
        results = control.map(mc_batch, [(cfg, constants, start, stop) for start, stop
                                         in _batches(cfg.mc_paths, cfg.batch_size)])
    finally:
        if own_control:
            control.stop()
    columns = {name: np.concatenate([r[0][name] for r in results]) for name in FIELDS}
    mc_notes = [note for r in results for note in r[1]]

    kept = errors[np.isfinite(errors)]
    _check_skipped(HIST_TAG, cfg.hist_paths - kept.size, cfg.hist_paths, hist_notes)
    good = np.isfinite(columns['g_inf'])
    _check_skipped(MC_TAG, cfg.mc_paths - int(good.sum()), cfg.mc_paths, mc_notes)
    functionals = PathFunctionals(**{name: columns[name][good] for name in FIELDS})

    edges, density = histogram_density(kept)
    z_grid = z_grid_for(kept, functionals, cfg.z_points)
    curve = expansion_density(z_grid, cfg.n, functionals, constants)

    write_histogram_csv(os.path.join(cfg.out_dir, 'hist.csv'), edges, density)
    curve.to_csv(os.path.join(cfg.out_dir, 'curves.csv'))
    write_experiment(cfg, os.path.join(cfg.out_dir, 'experiment.yaml'), comments)
    write_plot_script(cfg.out_dir, cfg)

    leading_mass, corrected_mass = curve.mass()
    g_inf = functionals.g_inf
    summary = {
        'version': VERSION,
        'config': cfg.to_mapping()['experiment'],
        'constants': constants.as_dict(),
        'estimator': {**_moments(kept), 'skipped': int(cfg.hist_paths - kept.size)},
        'mixture': {
            'replicas': int(g_inf.size),
            'skipped': int(cfg.mc_paths - g_inf.size),
            'mean_g_inf': float(np.mean(g_inf)),
            'predicted_sd': math.sqrt(float(np.mean(g_inf))) / (2.0 * math.log(2.0)),
        },
        'distances': {
            'leading': histogram_distances(edges, density, z_grid, curve.leading),
            'corrected': histogram_distances(edges, density, z_grid, curve.corrected),
            'ks_mixture': ks_distance(kept, functionals),
        },
        'mass': {'leading': leading_mass, 'corrected': corrected_mass},
        'runtime_seconds': round(time.perf_counter() - started, 3),
    }
    with open(os.path.join(cfg.out_dir, 'summary.json'), 'w', encoding='utf8') as file:
        json.dump(summary, file, indent=4, ensure_ascii=False)
        file.write('\n')
    logger.info('L1 leading %.4f corrected %.4f',
                summary['distances']['leading']['l1'], summary['distances']['corrected']['l1'])
    return summary
