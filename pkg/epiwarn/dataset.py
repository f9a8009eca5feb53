# -----------------------------------------------------------------------------
# Copyright (c) 2024 The epiwarn developers.
#
# This file is part of epiwarn.
#
# epiwarn is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software
# Foundation, either version 3 of the License, or (at your option) any later
# version.
#
# epiwarn is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR
# A PARTICULAR PURPOSE. See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with
# epiwarn. If not, see <https://www.gnu.org/licenses/>.
# -----------------------------------------------------------------------------

"""
Sweep generation, run splitting, window extraction and calibration.

A sweep simulates every `(value index, seed index)` pair of a
`SweepSpec`. Run seeds are derived from the master seed, so a sweep is
reproduced exactly from its specification. Output layout:

```
<out_dir>/manifest.json
<out_dir>/runs/run_00000.csv
...
```
"""

from __future__ import annotations

import logging
import math
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .config import MIN_CALIBRATION_RUNS, SimConfig, SweepSpec
from .constants import COUNT_COLUMNS, ConfigError, SearchError
from .curves import CurveSet
from .file_io import load_trajectory, save_trajectory, write_json
from .prng import derive_seed
from .result import Outcome, Serializable, Trajectory
from .simulation import run_simulation

logger = logging.getLogger(__name__)

PROBE_TAG = 0xCA11B
"""Seed coordinate separating calibration probes from sweep runs."""

GAP = (0.1, 0.3)
"""Attack-rate interval that should stay nearly empty near criticality."""

SPLITS = ('train', 'val', 'test')


class RunRecord(Serializable):
    """One run of a sweep.

    Attributes:
        run_id (int): Unique run index.
        value_index (int): Index of `s_hi` in the sweep values.
        seed_index (int): Seed index within the value.
        s_lo (float): Susceptibility lower bound.
        s_hi (float): Susceptibility upper bound.
        seed (int): Derived run seed.
        recorded_days (int): Days in the trajectory.
        trajectory_path (str): Trajectory CSV, relative to the manifest.
        outcome (Outcome): Final outcome.
    """

    def __init__(self, run_id: int = 0, value_index: int = 0,
                 seed_index: int = 0, s_lo: float = 0.0, s_hi: float = 0.0,
                 seed: int = 0, recorded_days: int = 0,
                 trajectory_path: str = '',
                 outcome: Optional[Outcome] = None):
        self.run_id = run_id
        self.value_index = value_index
        self.seed_index = seed_index
        self.s_lo = s_lo
        self.s_hi = s_hi
        self.seed = seed
        self.recorded_days = recorded_days
        self.trajectory_path = trajectory_path
        self.outcome = outcome or Outcome()

    @property
    def _attrs(self) -> List[str]:
        return ['run_id', 'value_index', 'seed_index', 's_lo', 's_hi',
                'seed', 'recorded_days', 'trajectory_path']

    @property
    def _ser_attrs(self) -> List[Tuple[str, Type[Serializable]]]:
        return [('outcome', Outcome)]

    @property
    def rho(self) -> float:
        return self.outcome.attack_rate

    @property
    def label(self) -> int:
        return self.outcome.label

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), 'rho': self.rho, 'label': self.label,
                'peak': self.outcome.peak_infected,
                'peak_day': self.outcome.peak_day}

    @staticmethod
    def from_dict(**kwargs) -> RunRecord:
        """Restore RunRecord object."""
        return Serializable._load(RunRecord(), **kwargs)


class Manifest(Serializable):
    """Description of a generated sweep.

    Attributes:
        sim (SimConfig): Simulator template.
        sweep (SweepSpec): Sweep specification.
        runs (List[RunRecord]): Runs, ordered by `run_id`.
        regimes (Dict[str, Any]): Regime statistics of the outcomes.
    """

    def __init__(self, sim: Optional[SimConfig] = None,
                 sweep: Optional[SweepSpec] = None,
                 runs: Optional[List[RunRecord]] = None,
                 regimes: Optional[Dict[str, Any]] = None):
        self.sim = sim or SimConfig()
        self.sweep = sweep or SweepSpec()
        self.runs = runs or []
        self.regimes = regimes or {}
        self.sweep.base_config = self.sim

    @property
    def _attrs(self) -> List[str]:
        return ['regimes']

    @property
    def _ser_attrs(self) -> List[Tuple[str, Type[Serializable]]]:
        return [('sim', SimConfig), ('sweep', SweepSpec)]

    @property
    def _ser_list(self) -> List[Tuple[str, Type[Serializable]]]:
        return [('runs', RunRecord)]

    def run(self, run_id: int) -> RunRecord:
        """Run by id."""
        return self.runs[run_id]

    def run_config(self, run: RunRecord) -> SimConfig:
        """Exact simulator configuration of a run."""
        return run_config(self.sweep, run.value_index, run.seed_index)

    @staticmethod
    def from_dict(**kwargs) -> Manifest:
        """Restore Manifest object."""
        manifest = Serializable._load(Manifest(), **kwargs)
        manifest.sweep.base_config = manifest.sim
        return manifest


class Window:
    """Consecutive days of count observables from one run.

    Attributes:
        run_id (int): Source run.
        end_day (int): Last day of the window.
        values (np.ndarray): `(k, 9)` counts of days `end_day-k+1..end_day`.
        label (int): Run label.
        rho (float): Run attack rate.
        s_lo (float): Run susceptibility lower bound.
        s_hi (float): Run susceptibility upper bound.
        ahead (np.ndarray): `(max(h, 1), 9)` counts of the following
            days, repeating the last recorded day past the run end.
        padded (np.ndarray): `(max(h, 1),)` flags of repeated days.
    """

    def __init__(self, run_id: int, end_day: int, values: np.ndarray,
                 label: int, rho: float, s_lo: float, s_hi: float,
                 ahead: Optional[np.ndarray] = None,
                 padded: Optional[np.ndarray] = None):
        self.run_id = run_id
        self.end_day = end_day
        self.values = values
        self.label = label
        self.rho = rho
        self.s_lo = s_lo
        self.s_hi = s_hi
        self.ahead = ahead if ahead is not None else values[-1:].copy()
        self.padded = padded if padded is not None else \
            np.ones(len(self.ahead), dtype=bool)

    def __repr__(self):
        return f'Window(run={self.run_id}, end={self.end_day}, ' \
               f'y={self.label})'

    @property
    def k(self) -> int:
        return len(self.values)

    @property
    def flat(self) -> np.ndarray:
        """Values in day-major order."""
        return self.values.reshape(-1)

    @property
    def next_values(self) -> np.ndarray:
        """The window shifted one day ahead."""
        return np.vstack([self.values[1:], self.ahead[:1]])

    def series(self, name: str) -> np.ndarray:
        """One observable over the window days."""
        return self.values[:, COUNT_COLUMNS.index(name)]


def run_config(spec: SweepSpec, value_index: int,
               seed_index: int) -> SimConfig:
    """Simulator configuration of one sweep run."""
    return spec.base_config.with_(
        s_lo=spec.s_lo, s_hi=spec.s_hi_values[value_index],
        seed=derive_seed(spec.master_seed, value_index, seed_index),
        T_max=spec.T_max, early_stop=spec.early_stop)


def trajectory_path(run_id: int) -> str:
    """Trajectory file of a run, relative to the sweep directory."""
    return os.path.join('runs', f'run_{run_id:05d}.csv')


def simulate_run(spec: SweepSpec, run_id: int, value_index: int,
                 seed_index: int, out_dir: str,
                 curves: Optional[CurveSet] = None) -> RunRecord:
    """Simulate one sweep run and store its trajectory.

    Raises:
        OSError: if the trajectory cannot be written.
    """
    config = run_config(spec, value_index, seed_index)
    trajectory = run_simulation(config, curves=curves)
    path = trajectory_path(run_id)
    try:
        save_trajectory(os.path.join(out_dir, path), trajectory)
    except OSError:
        logger.error(f'run {run_id}: cannot write {path}')
        raise
    return RunRecord(
        run_id=run_id, value_index=value_index, seed_index=seed_index,
        s_lo=config.s_lo, s_hi=config.s_hi, seed=config.seed,
        recorded_days=trajectory.recorded_days, trajectory_path=path,
        outcome=trajectory.outcome)


def regime_statistics(runs: Sequence[RunRecord]) -> Dict[str, Any]:
    """Outcome statistics per label, plus the gap fraction.

    The gap fraction is the share of runs whose attack rate falls in
    `(0.1, 0.3)`.
    """
    stats: Dict[str, Any] = {'n_runs': len(runs)}
    for label, name in ((0, 'contained'), (1, 'major')):
        group = [r for r in runs if r.label == label]
        rho = np.array([r.rho for r in group])
        peak = np.array([r.outcome.peak_infected for r in group])
        stats[name] = {'runs': len(group)} if not group else {
            'runs': len(group),
            'rho_min': float(rho.min()), 'rho_max': float(rho.max()),
            'rho_mean': float(rho.mean()),
            'peak_min': int(peak.min()), 'peak_max': int(peak.max()),
            'peak_mean': float(peak.mean())}
    stats['gap_fraction'] = gap_fraction([r.rho for r in runs])
    return stats


def generate_sweep(spec: SweepSpec, out_dir: str) -> Manifest:
    """Simulate all runs of a sweep and write its manifest.

    Arguments:
        spec: Valid sweep specification with its `base_config`.
        out_dir: Sweep directory.

    Raises:
        OSError: if a trajectory or the manifest cannot be written.

    Returns:
        Manifest of the sweep.
    """
    curves = CurveSet.from_config(spec.base_config)
    tasks = [(vi * spec.seeds_per_value + si, vi, si)
             for vi in range(len(spec.s_hi_values))
             for si in range(spec.seeds_per_value)]
    logger.info(f'sweep of {len(tasks)} runs in {out_dir}')
    runs = Parallel(n_jobs=spec.n_jobs)(
        delayed(simulate_run)(spec, run_id, vi, si, out_dir, curves)
        for run_id, vi, si in tasks)
    runs = sorted(runs, key=lambda r: r.run_id)
    regimes = regime_statistics(runs)
    if regimes['gap_fraction'] > spec.max_gap:
        logger.warning(f'{regimes["gap_fraction"]:.1%} of runs have an '
                       f'attack rate in {GAP}; regime may be mis-calibrated')
    manifest = Manifest(spec.base_config, spec, runs, regimes)
    write_json(os.path.join(out_dir, 'manifest.json'), manifest.to_dict())
    return manifest


def load_trajectories(manifest: Manifest,
                      sweep_dir: str) -> Dict[int, Trajectory]:
    """Load the trajectory of every run, with recomputed outcomes."""
    return {r.run_id: load_trajectory(
        os.path.join(sweep_dir, r.trajectory_path), manifest.sim.N,
        manifest.sim.rho_c) for r in manifest.runs}


def verify_manifest(manifest: Manifest,
                    trajectories: Dict[int, Trajectory]) -> List[int]:
    """Ids of runs whose stored trajectory disagrees with the manifest."""
    return [r.run_id for r in manifest.runs
            if trajectories[r.run_id].outcome != r.outcome
            or trajectories[r.run_id].recorded_days != r.recorded_days]


def split_runs(run_ids: Sequence[int], ratios: Sequence[float],
               split_seed: int) -> Dict[str, List[int]]:
    """Partition runs into train, validation and test sets.

    Train and validation sizes are $\\lfloor r \\cdot n \\rfloor$; the
    test set takes the remaining runs. Membership follows a shuffle
    seeded by `split_seed`; each set is returned sorted.

    Raises:
        ValueError: fewer runs than partitions, or invalid ratios.
    """
    n = len(run_ids)
    if n < len(SPLITS):
        raise ValueError(f'{n} runs cannot fill {len(SPLITS)} partitions')
    if len(ratios) != len(SPLITS) or min(ratios) <= 0 \
            or abs(sum(ratios) - 1) > 1e-9:
        raise ValueError(f'invalid split ratios {ratios}')
    order = np.random.default_rng(split_seed).permutation(sorted(run_ids))
    n_train = int(math.floor(ratios[0] * n + 1e-9))
    n_val = int(math.floor(ratios[1] * n + 1e-9))
    parts = np.split(order, [n_train, n_train + n_val])
    return {name: sorted(int(i) for i in part)
            for name, part in zip(SPLITS, parts)}


def extract_windows(run: RunRecord, trajectory: Trajectory, k: int,
                    end_day_min: int, end_day_max: int,
                    h: int = 0) -> List[Window]:
    """Windows of `k` days ending at each eligible end day.

    End days range over `[end_day_min, end_day_max]`, limited to recorded
    days. Each window also carries the `h` following days for forecast
    targets.

    Raises:
        ValueError: if `k < 1` or `end_day_min < k - 1`.
    """
    if k < 1 or end_day_min < k - 1:
        raise ValueError(f'need k >= 1 and end_day_min >= k - 1, got '
                         f'k={k}, end_day_min={end_day_min}')
    counts = trajectory.counts()
    last = len(counts) - 1
    windows = []
    for e in range(end_day_min, min(end_day_max, last) + 1):
        days = np.arange(e + 1, e + max(h, 1) + 1)
        windows.append(Window(
            run.run_id, e, counts[e - k + 1:e + 1].copy(), run.label,
            run.rho, run.s_lo, run.s_hi, counts[np.minimum(days, last)],
            days > last))
    return windows


def build_windows(manifest: Manifest, trajectories: Dict[int, Trajectory],
                  k: int, end_day_min: int, end_day_max: int, h: int = 0,
                  run_ids: Optional[Sequence[int]] = None) -> List[Window]:
    """Windows of all (or the given) runs, ordered by run and end day."""
    ids = sorted(run_ids) if run_ids is not None else \
        [r.run_id for r in manifest.runs]
    return [w for i in ids for w in extract_windows(
        manifest.run(i), trajectories[i], k, end_day_min, end_day_max, h)]


def windows_frame(windows: Sequence[Window]) -> pd.DataFrame:
    """Windows as a table: metadata then day-major value columns."""
    if not windows:
        return pd.DataFrame(columns=['run_id', 'end_day', 'label', 'rho',
                                     's_lo', 's_hi'])
    k = windows[0].k
    names = [f'd{j}_{c}' for j in range(k) for c in COUNT_COLUMNS]
    meta = pd.DataFrame([(w.run_id, w.end_day, w.label, w.rho, w.s_lo,
                          w.s_hi) for w in windows],
                        columns=['run_id', 'end_day', 'label', 'rho',
                                 's_lo', 's_hi'])
    values = pd.DataFrame(np.array([w.flat for w in windows]),
                          columns=names)
    return pd.concat([meta, values], axis=1)


def calibration_outcomes(theta_tr: float, configs: Sequence[SimConfig],
                         curves: CurveSet, n_jobs: int = 1
                         ) -> List[Outcome]:
    """Outcomes of calibration runs at a given threshold."""
    runs = Parallel(n_jobs=n_jobs)(
        delayed(run_simulation)(c.with_(theta_tr=theta_tr), curves=curves)
        for c in configs)
    return [t.outcome for t in runs]


def gap_fraction(rates: Sequence[float]) -> float:
    """Share of attack rates strictly inside `GAP`."""
    if not len(rates):
        return 0.0
    return sum(1 for rho in rates if GAP[0] < rho < GAP[1]) / len(rates)


def probe_fraction(theta_tr: float, configs: Sequence[SimConfig],
                   curves: CurveSet, n_jobs: int = 1) -> float:
    """Outbreak fraction of calibration runs at a given threshold."""
    outcomes = calibration_outcomes(theta_tr, configs, curves, n_jobs)
    return sum(o.label for o in outcomes) / len(outcomes)


def probe_configs(base_config: SimConfig, probe_seeds: int,
                  master_seed: int = 0,
                  s_hi_values: Optional[Sequence[float]] = None,
                  offset: int = 0) -> List[SimConfig]:
    """Configurations of calibration runs.

    Run `j` uses a seed derived from `(master_seed, j + offset)` and,
    when values are given, cycles through the `s_hi` values.
    """
    values = list(s_hi_values or [base_config.s_hi])
    return [base_config.with_(
        seed=derive_seed(master_seed, PROBE_TAG, j + offset),
        s_hi=values[j % len(values)], early_stop=True)
        for j in range(probe_seeds)]


def calibrate_threshold(base_config: SimConfig, probe_seeds: int,
                        band: Sequence[float],
                        bracket: Sequence[float] = (0.0, 200.0),
                        max_iter: int = 20, master_seed: int = 0,
                        s_hi_values: Optional[Sequence[float]] = None,
                        n_jobs: int = 1, max_gap: float = 0.05
                        ) -> Tuple[float, pd.DataFrame]:
    """Bisect the transmission threshold into a target outbreak band.

    The outbreak fraction over the calibration runs does not increase
    with the threshold, so bisection keeps the bracket ends on either
    side of the band. A threshold is accepted when its fraction is in
    the band and at most `max_gap` of its runs end with an attack rate
    inside `GAP`. A threshold in the band with too many such runs moves
    the search toward lower thresholds, where outbreaks run their full
    course. If no threshold meets both conditions the in-band one with
    the smallest gap fraction is returned.

    Arguments:
        base_config: Simulator template.
        probe_seeds: Calibration runs per evaluated threshold, at least
            `MIN_CALIBRATION_RUNS`.
        band: Target `[low, high]` outbreak fraction.
        bracket: Initial `[low, high]` threshold bracket.
        max_iter: Bisection steps after the endpoints.
        master_seed: Seed of the calibration run seeds.
        s_hi_values: Upper bounds the runs cycle through.
        n_jobs: Parallel workers.
        max_gap: Largest accepted gap fraction.

    Raises:
        ConfigError: if there are fewer than `MIN_CALIBRATION_RUNS`
            runs per threshold.
        SearchError: if the bracket does not cross the band, or no
            threshold in the band is found in `max_iter` steps.

    Returns:
        Calibrated threshold and the table of evaluated thresholds.
    """
    if probe_seeds < MIN_CALIBRATION_RUNS:
        raise ConfigError('sweep.probe_seeds',
                          f'must be >= {MIN_CALIBRATION_RUNS}')
    lo_band, hi_band = band
    configs = probe_configs(base_config, probe_seeds, master_seed,
                            s_hi_values)
    curves = CurveSet.from_config(base_config)
    rows = []
    in_band: List[Tuple[float, int, float]] = []

    def evaluate(it: int, theta: float) -> Tuple[float, float]:
        outcomes = calibration_outcomes(theta, configs, curves, n_jobs)
        outbreaks = sum(o.label for o in outcomes)
        frac = outbreaks / probe_seeds
        gap = gap_fraction([o.attack_rate for o in outcomes])
        rows.append((it, theta, outbreaks, probe_seeds, frac, gap))
        logger.info(f'iteration {it}: theta_tr={theta:.6f} -> {frac:.3f}'
                    f' • gap {gap:.3f}')
        if lo_band <= frac <= hi_band:
            in_band.append((gap, len(rows), theta))
        return frac, gap

    def table() -> pd.DataFrame:
        return pd.DataFrame(rows, columns=['iteration', 'theta_tr',
                                           'outbreaks', 'runs', 'fraction',
                                           'gap'])

    def accepted(frac: float, gap: float) -> bool:
        return lo_band <= frac <= hi_band and gap <= max_gap

    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo, g_lo = evaluate(0, lo)
    f_hi, g_hi = evaluate(0, hi)
    for theta, frac, gap in ((lo, f_lo, g_lo), (hi, f_hi, g_hi)):
        if accepted(frac, gap):
            return theta, table()
    if f_lo < lo_band or f_hi > hi_band:
        raise SearchError(f'no crossing in bracket [{lo}, {hi}]: outbreak '
                          f'fractions {f_lo:.3f} and {f_hi:.3f}')
    for it in range(1, max_iter + 1):
        mid = (lo + hi) / 2
        frac, gap = evaluate(it, mid)
        if accepted(frac, gap):
            return mid, table()
        if frac > hi_band:
            lo = mid
        else:
            hi = mid
    if in_band:
        gap, _, theta = min(in_band)
        logger.warning(f'no threshold in band {list(band)} has a gap '
                       f'fraction <= {max_gap}; using theta_tr={theta} '
                       f'with {gap:.3f}')
        return theta, table()
    raise SearchError(f'no threshold in band {list(band)} after {max_iter} '
                      f'steps; last bracket [{lo}, {hi}]')
