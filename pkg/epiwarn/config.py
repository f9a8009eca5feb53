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
Configuration blocks of the pipeline.

Each block is a plain class with defaults in its constructor, a
`validate()` method that raises `ConfigError` naming the offending
field, and JSON conversion through `Serializable`. A full pipeline
configuration is one JSON document:

```json
{"sim": {...}, "sweep": {...}, "koopman": {...},
 "earlywarn": {...}, "intervention": {...}, "paths": {...}}
```

Missing keys take defaults; unknown keys are rejected.
"""

from __future__ import annotations

import copy
import json
import logging
import math
import os
from typing import Any, Dict, List, Optional, Tuple, Type

from .constants import ConfigError, Criterion, Immunity, Strategy
from .result import Serializable

logger = logging.getLogger(__name__)

CONFIG_ENV = 'EPIWARN_CONFIG'
"""Environment variable holding the default config file path."""

MIN_CALIBRATION_RUNS = 20
"""Fewest calibration runs per evaluated threshold."""

DEFAULT_PULSES: Dict[str, List[float]] = {
    'strong': [45.0, 80.0],
    'medium': [70.0, 120.0],
    'low': [95.0, 160.0],
    'compromised': [115.0, 200.0]}
"""Parametric viral-load pulse (peak load V, peak age A in steps)."""


def _num(value: Any) -> float:
    """Float from a number or a string such as `"inf"`."""
    return float(value)


class Block(Serializable):
    """Common behavior of configuration blocks."""

    NAME = 'block'

    def validate(self) -> Block:
        """Check invariants; returns self."""
        return self

    def with_(self, **changes) -> Block:
        """Copy of this block with some attributes replaced."""
        other = copy.deepcopy(self)
        for key, value in changes.items():
            if key not in self._attrs:
                raise ConfigError(f'{self.NAME}.{key}', 'unknown field')
            setattr(other, key, value)
        return other

    def _fail(self, field: str, message: str):
        raise ConfigError(f'{self.NAME}.{field}', message)

    @classmethod
    def load(cls, data: Optional[Dict[str, Any]]) -> Block:
        """Build block from dict, rejecting unknown keys."""
        obj = cls()
        unknown = sorted(set(data or {}) - set(obj._attrs))
        if unknown:
            raise ConfigError(f'{cls.NAME}.{unknown[0]}', 'unknown field')
        return Serializable._load(obj, **(data or {}))

    @staticmethod
    def from_dict(**kwargs) -> Block:
        raise NotImplementedError  # pragma: no cover


class SimConfig(Block):
    """Simulator parameters $\\theta$ and seed $\\omega$.

    Attributes:
        N (int): Number of agents.
        G (int): Grid side length in cells.
        H (int): Number of homes.
        K (int): Routine length in cells.
        L_D (int): Daytime steps per day.
        L_N (int): Nighttime steps per day.
        T_max (int): Horizon in days.
        theta_tr (float): Transmission threshold; may be infinite.
        rho_c (float): Major outbreak threshold.
        s_lo (float): Susceptibility lower bound.
        s_hi (float): Susceptibility upper bound.
        immunity_probs (List[float]): Strong, medium, low, compromised.
        symptom_thr (float): Symptomatic viral load.
        homebound_thr (float): Homebound viral load (strict >).
        death_thr (float): Lethal viral load (strict >).
        recovery_thr (float): Recovery viral load (strict <).
        home_transmission (bool): Evaluate transmission at homes too.
        early_stop (bool): Stop after the first day with no infected.
        seed (int): Seed $\\omega$.
        pulses (Dict[str, List[float]]): Parametric curve (V, A) by
            category name.
        curve_files (Dict[str, str]): Tabulated curve CSV by category
            name; overrides the pulse of that category.
    """

    NAME = 'sim'

    def __init__(self, N: int = 500, G: int = 50, H: int = 200, K: int = 10,
                 L_D: int = 10, L_N: int = 10, T_max: int = 60,
                 theta_tr: float = 50.0, rho_c: float = 0.3,
                 s_lo: float = 0.5, s_hi: float = 1.5,
                 immunity_probs: Optional[List[float]] = None,
                 symptom_thr: float = 10.0, homebound_thr: float = 50.0,
                 death_thr: float = 100.0, recovery_thr: float = 1.0,
                 home_transmission: bool = False, early_stop: bool = False,
                 seed: int = 0,
                 pulses: Optional[Dict[str, List[float]]] = None,
                 curve_files: Optional[Dict[str, str]] = None):
        self.N, self.G, self.H, self.K = N, G, H, K
        self.L_D, self.L_N, self.T_max = L_D, L_N, T_max
        self.theta_tr = theta_tr
        self.rho_c = rho_c
        self.s_lo, self.s_hi = s_lo, s_hi
        self.immunity_probs = immunity_probs or [0.35, 0.45, 0.15, 0.05]
        self.symptom_thr = symptom_thr
        self.homebound_thr = homebound_thr
        self.death_thr = death_thr
        self.recovery_thr = recovery_thr
        self.home_transmission = home_transmission
        self.early_stop = early_stop
        self.seed = seed
        self.pulses = pulses or copy.deepcopy(DEFAULT_PULSES)
        self.curve_files = curve_files or {}

    @property
    def _attrs(self) -> List[str]:
        return ('N,G,H,K,L_D,L_N,T_max,theta_tr,rho_c,s_lo,s_hi,'
                'immunity_probs,symptom_thr,homebound_thr,death_thr,'
                'recovery_thr,home_transmission,early_stop,seed,pulses,'
                'curve_files').split(',')

    @property
    def L(self) -> int:
        """Steps per day."""
        return self.L_D + self.L_N

    @property
    def n_cells(self) -> int:
        """Number of grid cells, $G^2$."""
        return self.G * self.G

    @property
    def n_locations(self) -> int:
        """Grid cells plus homes."""
        return self.n_cells + self.H

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        if math.isinf(self.theta_tr):
            data['theta_tr'] = 'inf'
        return data

    def validate(self) -> SimConfig:
        """Check simulator invariants.

        Raises:
            ConfigError: naming the first invalid field.
        """
        self.theta_tr = _num(self.theta_tr)
        for name in ('N', 'G', 'H', 'K', 'L_D', 'L_N', 'T_max'):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) \
                    or value < 1:
                self._fail(name, f'must be a positive integer, got {value}')
        if self.K > self.n_cells:
            self._fail('K', f'{self.K} distinct cells do not fit in a '
                            f'{self.G}x{self.G} grid')
        if not (0 < self.s_lo <= self.s_hi):
            self._fail('s_lo', 'require 0 < s_lo <= s_hi')
        probs = self.immunity_probs
        if len(probs) != len(Immunity) or min(probs) < 0:
            self._fail('immunity_probs', 'need 4 non-negative values')
        if abs(sum(probs) - 1.0) > 1e-9:
            self._fail('immunity_probs', f'sum to {sum(probs)}, not 1')
        if not (0 < self.rho_c < 1):
            self._fail('rho_c', 'must lie in (0, 1)')
        if math.isnan(self.theta_tr) or self.theta_tr < 0:
            self._fail('theta_tr', 'must be a non-negative number')
        if not (self.recovery_thr < self.symptom_thr < self.homebound_thr
                < self.death_thr):
            self._fail('recovery_thr', 'thresholds must be strictly '
                                       'ordered recovery < symptom < '
                                       'homebound < death')
        names = {m.label for m in Immunity}
        for field in ('pulses', 'curve_files'):
            extra = set(getattr(self, field)) - names
            if extra:
                self._fail(field, f'unknown category {sorted(extra)[0]}')
        for name in names:
            if name not in self.pulses and name not in self.curve_files:
                self._fail('pulses', f'no curve for category {name}')
        for name, (v, a) in self.pulses.items():
            if v < 0 or a <= 0:
                self._fail('pulses', f'{name}: need V >= 0 and A > 0')
        return self

    @staticmethod
    def from_dict(**kwargs) -> SimConfig:
        """Restore SimConfig object."""
        return SimConfig.load(kwargs)


class SweepSpec(Block):
    """Boundary-focused sweep over the susceptibility upper bound.

    Attributes:
        s_lo (float): Fixed susceptibility lower bound.
        s_hi_values (List[float]): Strictly increasing upper bounds.
        seeds_per_value (int): Runs per upper bound.
        master_seed (int): Seed from which every run seed derives.
        T_max (int): Horizon in days.
        early_stop (bool): Stop recording at extinction.
        split_ratios (List[float]): Train, validation, test fractions.
        split_seed (int): Shuffle seed of the run-level split.
        probe_seeds (int): Calibration runs per evaluated threshold.
        band (List[float]): Target outbreak-fraction band.
        max_gap (float): Largest accepted share of runs with an attack
            rate in the gap between the regimes.
        bracket (List[float]): Initial theta_tr bisection bracket.
        max_iter (int): Bisection iterations.
        n_jobs (int): Parallel workers for runs.
        base_config (SimConfig): Template; not part of the block.
    """

    NAME = 'sweep'

    def __init__(self, s_lo: float = 1.3,
                 s_hi_values: Optional[List[float]] = None,
                 seeds_per_value: int = 20, master_seed: int = 2024,
                 T_max: int = 60, early_stop: bool = True,
                 split_ratios: Optional[List[float]] = None,
                 split_seed: int = 0, probe_seeds: int = 40,
                 band: Optional[List[float]] = None, max_gap: float = 0.05,
                 bracket: Optional[List[float]] = None, max_iter: int = 20,
                 n_jobs: int = 1, base_config: Optional[SimConfig] = None):
        self.s_lo = s_lo
        self.s_hi_values = s_hi_values or \
            [1.3015, 1.30175, 1.302, 1.30225, 1.3025]
        self.seeds_per_value = seeds_per_value
        self.master_seed = master_seed
        self.T_max = T_max
        self.early_stop = early_stop
        self.split_ratios = split_ratios or [0.70, 0.15, 0.15]
        self.split_seed = split_seed
        self.probe_seeds = probe_seeds
        self.band = band or [0.3, 0.7]
        self.max_gap = max_gap
        self.bracket = bracket or [0.0, 200.0]
        self.max_iter = max_iter
        self.n_jobs = n_jobs
        self.base_config = base_config or SimConfig()

    @property
    def _attrs(self) -> List[str]:
        return ('s_lo,s_hi_values,seeds_per_value,master_seed,T_max,'
                'early_stop,split_ratios,split_seed,probe_seeds,band,'
                'max_gap,bracket,max_iter,n_jobs').split(',')

    @property
    def n_runs(self) -> int:
        """Total runs of the sweep."""
        return len(self.s_hi_values) * self.seeds_per_value

    def validate(self) -> SweepSpec:
        """Check sweep invariants.

        Raises:
            ConfigError: naming the first invalid field.
        """
        values = self.s_hi_values
        if not values:
            self._fail('s_hi_values', 'empty')
        if any(b <= a for a, b in zip(values, values[1:])):
            self._fail('s_hi_values', 'must be strictly increasing')
        if values[0] < self.s_lo:
            self._fail('s_hi_values', 'all values must be >= s_lo')
        if self.seeds_per_value < 1:
            self._fail('seeds_per_value', 'must be >= 1')
        if self.T_max < 1:
            self._fail('T_max', 'must be >= 1')
        ratios = self.split_ratios
        if len(ratios) != 3 or min(ratios) <= 0 \
                or abs(sum(ratios) - 1) > 1e-9:
            self._fail('split_ratios', 'need 3 positive values summing to 1')
        lo, hi = self.band
        if not (0 < lo <= hi < 1):
            self._fail('band', 'must lie inside (0, 1)')
        if self.bracket[0] >= self.bracket[1]:
            self._fail('bracket', 'lower end must be below upper end')
        if self.probe_seeds < MIN_CALIBRATION_RUNS:
            self._fail('probe_seeds', f'must be >= {MIN_CALIBRATION_RUNS}')
        if not 0 <= self.max_gap < 1:
            self._fail('max_gap', 'must lie in [0, 1)')
        return self

    @staticmethod
    def from_dict(**kwargs) -> SweepSpec:
        """Restore SweepSpec object."""
        return SweepSpec.load(kwargs)


class KoopmanParams(Block):
    """Koopman model architecture, loss weights and optimizer constants.

    Attributes:
        k (int): Observation window length in days.
        h (int): Forecast horizon in days.
        r (int): Latent dimension.
        width (int): Hidden layer width.
        lambda_rec, lambda_lin, lambda_pred, lambda_ar, lambda_cls (float):
            Loss weights.
        lr (float): Adam step size.
        beta1, beta2, eps (float): Adam constants.
        batch_size (int): Mini-batch size.
        epochs (int): Training epochs.
        init_noise (float): Scale of the noise added to the identity
            initialization of A.
        mask_padded (bool): Exclude padded forecast targets from the loss.
        seed (int): Initialization and shuffle seed.
    """

    NAME = 'koopman'

    def __init__(self, k: int = 5, h: int = 5, r: int = 6, width: int = 64,
                 lambda_rec: float = 1.0, lambda_lin: float = 1.0,
                 lambda_pred: float = 1.0, lambda_ar: float = 1.0,
                 lambda_cls: float = 0.1, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, batch_size: int = 64, epochs: int = 100,
                 init_noise: float = 0.01, mask_padded: bool = False,
                 seed: int = 0):
        self.k, self.h, self.r, self.width = k, h, r, width
        self.lambda_rec = lambda_rec
        self.lambda_lin = lambda_lin
        self.lambda_pred = lambda_pred
        self.lambda_ar = lambda_ar
        self.lambda_cls = lambda_cls
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.batch_size = batch_size
        self.epochs = epochs
        self.init_noise = init_noise
        self.mask_padded = mask_padded
        self.seed = seed

    @property
    def _attrs(self) -> List[str]:
        return ('k,h,r,width,lambda_rec,lambda_lin,lambda_pred,lambda_ar,'
                'lambda_cls,lr,beta1,beta2,eps,batch_size,epochs,'
                'init_noise,mask_padded,seed').split(',')

    @property
    def weights(self) -> Dict[str, float]:
        """Loss weights by term name."""
        return dict(rec=self.lambda_rec, lin=self.lambda_lin,
                    pred=self.lambda_pred, ar=self.lambda_ar,
                    cls=self.lambda_cls)

    def validate(self) -> KoopmanParams:
        """Check Koopman invariants.

        Raises:
            ConfigError: naming the first invalid field.
        """
        for name in ('k', 'h', 'r', 'width', 'batch_size'):
            if getattr(self, name) < 1:
                self._fail(name, 'must be >= 1')
        if self.epochs < 0:
            self._fail('epochs', 'must be >= 0')
        for name, value in self.weights.items():
            if value < 0:
                self._fail(f'lambda_{name}', 'must be >= 0')
        if self.lr <= 0:
            self._fail('lr', 'must be positive')
        return self

    @staticmethod
    def from_dict(**kwargs) -> KoopmanParams:
        """Restore KoopmanParams object."""
        return KoopmanParams.load(kwargs)


class ForestParams(Block):
    """Early-warning classifier and window range.

    Attributes:
        n_trees (int): Trees in the forest.
        min_leaf (int): Nodes with fewer samples are leaves.
        max_depth (Optional[int]): Depth limit; `None` is unlimited.
        max_features (Optional[int]): Candidate features per node;
            `None` means $\\lceil\\sqrt{F}\\rceil$.
        seed (int): Forest seed.
        end_day_min (int): First window end day.
        end_day_max (int): Last window end day.
        include_end_day (bool): Use end day as a feature.
        use_koopman (bool): Add Koopman-derived features.
        threshold (float): Decision threshold.
        n_jobs (int): Parallel workers across trees.
    """

    NAME = 'earlywarn'

    def __init__(self, n_trees: int = 300, min_leaf: int = 2,
                 max_depth: Optional[int] = None,
                 max_features: Optional[int] = None, seed: int = 0,
                 end_day_min: int = 4, end_day_max: int = 12,
                 include_end_day: bool = True, use_koopman: bool = True,
                 threshold: float = 0.5, n_jobs: int = 1):
        self.n_trees = n_trees
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed
        self.end_day_min = end_day_min
        self.end_day_max = end_day_max
        self.include_end_day = include_end_day
        self.use_koopman = use_koopman
        self.threshold = threshold
        self.n_jobs = n_jobs

    @property
    def _attrs(self) -> List[str]:
        return ('n_trees,min_leaf,max_depth,max_features,seed,end_day_min,'
                'end_day_max,include_end_day,use_koopman,threshold,'
                'n_jobs').split(',')

    def validate(self) -> ForestParams:
        """Check forest invariants.

        Raises:
            ConfigError: naming the first invalid field.
        """
        if self.n_trees < 1:
            self._fail('n_trees', 'must be >= 1')
        if self.min_leaf < 1:
            self._fail('min_leaf', 'must be >= 1')
        if self.max_depth is not None and self.max_depth < 1:
            self._fail('max_depth', 'must be >= 1 or null')
        if self.max_features is not None and self.max_features < 1:
            self._fail('max_features', 'must be >= 1 or null')
        if self.end_day_max < self.end_day_min:
            self._fail('end_day_max', 'must be >= end_day_min')
        if not (0 <= self.threshold <= 1):
            self._fail('threshold', 'must lie in [0, 1]')
        return self

    @staticmethod
    def from_dict(**kwargs) -> ForestParams:
        """Restore ForestParams object."""
        return ForestParams.load(kwargs)


class InterventionParams(Block):
    """Counterfactual quarantine search.

    Attributes:
        strategy (str): `exhaustive` or `contact-ranked`.
        k_agents (int): Agents kept by contact ranking.
        day_min (int): First candidate day.
        day_max (int): Last candidate day.
        criterion (str): `attack-rate` or `peak`.
        max_baselines (int): Outbreak baselines searched by `intervene`.
        n_jobs (int): Parallel workers across candidates.
    """

    NAME = 'intervention'

    def __init__(self, strategy: str = Strategy.CONTACT_RANKED.value,
                 k_agents: int = 50, day_min: int = 0, day_max: int = 9,
                 criterion: str = Criterion.ATTACK_RATE.value,
                 max_baselines: int = 10, n_jobs: int = 1):
        self.strategy = strategy
        self.k_agents = k_agents
        self.day_min = day_min
        self.day_max = day_max
        self.criterion = criterion
        self.max_baselines = max_baselines
        self.n_jobs = n_jobs

    @property
    def _attrs(self) -> List[str]:
        return ('strategy,k_agents,day_min,day_max,criterion,'
                'max_baselines,n_jobs').split(',')

    def validate(self) -> InterventionParams:
        """Check search invariants.

        Raises:
            ConfigError: naming the first invalid field.
        """
        try:
            Strategy(self.strategy)
        except ValueError:
            self._fail('strategy', f'unknown strategy {self.strategy}')
        try:
            Criterion(self.criterion)
        except ValueError:
            self._fail('criterion', f'unknown criterion {self.criterion}')
        if self.k_agents < 1:
            self._fail('k_agents', 'must be >= 1')
        if not (0 <= self.day_min <= self.day_max):
            self._fail('day_min', 'require 0 <= day_min <= day_max')
        if self.max_baselines < 1:
            self._fail('max_baselines', 'must be >= 1')
        return self

    @staticmethod
    def from_dict(**kwargs) -> InterventionParams:
        """Restore InterventionParams object."""
        return InterventionParams.load(kwargs)


class PathsConfig(Block):
    """Output directory layout, relative to `root`.

    Attributes:
        root (str): Output root directory.
        sweep (str): Sweep runs and manifest.
        models (str): Trained models.
        reports (str): Evaluation reports.
        cases (str): Intervention searches.
    """

    NAME = 'paths'

    def __init__(self, root: str = 'output', sweep: str = 'sweep',
                 models: str = 'models', reports: str = 'reports',
                 cases: str = 'cases'):
        self.root = root
        self.sweep = sweep
        self.models = models
        self.reports = reports
        self.cases = cases

    @property
    def _attrs(self) -> List[str]:
        return ['root', 'sweep', 'models', 'reports', 'cases']

    def dir(self, name: str) -> str:
        """Absolute-or-relative path of a layout directory."""
        return os.path.join(self.root, getattr(self, name))

    @property
    def manifest(self) -> str:
        """Sweep manifest file."""
        return os.path.join(self.dir('sweep'), 'manifest.json')

    @property
    def windows(self) -> str:
        """Windows CSV of the sweep."""
        return os.path.join(self.dir('sweep'), 'windows.csv')

    @property
    def koopman_model(self) -> str:
        """Koopman model file."""
        return os.path.join(self.dir('models'), 'koopman.json')

    @property
    def forest_model(self) -> str:
        """Forest model file."""
        return os.path.join(self.dir('models'), 'forest.json')

    @staticmethod
    def from_dict(**kwargs) -> PathsConfig:
        """Restore PathsConfig object."""
        return PathsConfig.load(kwargs)


BLOCKS: List[Tuple[str, Type[Block]]] = [
    ('sim', SimConfig), ('sweep', SweepSpec), ('koopman', KoopmanParams),
    ('earlywarn', ForestParams), ('intervention', InterventionParams),
    ('paths', PathsConfig)]


class PipelineConfig(Serializable):
    """All configuration blocks of the pipeline.

    Attributes:
        sim (SimConfig): Simulator block.
        sweep (SweepSpec): Sweep and calibration block.
        koopman (KoopmanParams): Koopman block.
        earlywarn (ForestParams): Early warning block.
        intervention (InterventionParams): Intervention block.
        paths (PathsConfig): Output layout block.
    """

    def __init__(self):
        self.sim = SimConfig()
        self.sweep = SweepSpec()
        self.koopman = KoopmanParams()
        self.earlywarn = ForestParams()
        self.intervention = InterventionParams()
        self.paths = PathsConfig()
        self.sweep.base_config = self.sim

    @property
    def _ser_attrs(self) -> List[Tuple[str, Type[Serializable]]]:
        return BLOCKS

    def sweep_spec(self) -> SweepSpec:
        """Sweep block bound to the current simulator block."""
        self.sweep.base_config = self.sim
        return self.sweep

    def validate(self) -> PipelineConfig:
        """Validate every block, then cross-block consistency.

        Raises:
            ConfigError: naming the first invalid field.
        """
        for name, _ in BLOCKS:
            getattr(self, name).validate()
        ew, k = self.earlywarn, self.koopman.k
        if ew.end_day_min < k - 1:
            raise ConfigError(
                'earlywarn.end_day_min',
                f'must be >= koopman.k - 1 = {k - 1}')
        self.sweep_spec()
        return self

    def override(self, dotted: str, raw: str) -> PipelineConfig:
        """Set one field by dotted path, e.g. `sim.theta_tr=45`.

        The value is parsed as JSON when possible, else kept as text.

        Raises:
            ConfigError: if the path does not name a field.
        """
        parts = dotted.split('.')
        if len(parts) < 2 or parts[0] not in dict(BLOCKS):
            raise ConfigError(dotted, 'unknown config path')
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target: Any = getattr(self, parts[0])
        if parts[1] not in target._attrs:
            raise ConfigError(dotted, 'unknown config path')
        if len(parts) == 2:
            setattr(target, parts[1], value)
        else:
            container = getattr(target, parts[1])
            for key in parts[2:-1]:
                container = container.setdefault(key, {})
            container[parts[-1]] = value
        self.sweep_spec()
        return self

    @staticmethod
    def from_dict(**kwargs) -> PipelineConfig:
        """Restore PipelineConfig object; unknown blocks are errors."""
        unknown = sorted(set(kwargs) - set(dict(BLOCKS)))
        if unknown:
            raise ConfigError(unknown[0], 'unknown config block')
        cfg = PipelineConfig()
        for name, blockT in BLOCKS:
            setattr(cfg, name, blockT.load(kwargs.get(name)))
        cfg.sweep_spec()
        return cfg


def load_config(path: Optional[str] = None,
                overrides: Optional[List[str]] = None) -> PipelineConfig:
    """Resolve, read, override and validate a pipeline configuration.

    Resolution order: explicit `path`, then `$EPIWARN_CONFIG`, then
    built-in defaults.

    Arguments:
        path: Config JSON file.
        overrides: `dotted.path=value` strings.

    Raises:
        ConfigError: malformed file or invalid field.

    Returns:
        Validated configuration.
    """
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        try:
            with open(path) as fp:
                data = json.load(fp)
        except json.JSONDecodeError as err:
            raise ConfigError(path, f'malformed JSON: {err}') from err
        except OSError as err:
            raise ConfigError(path, f'cannot read config: {err}') from err
        cfg = PipelineConfig.from_dict(**data)
        logger.debug(f'loaded config {path}')
    else:
        cfg = PipelineConfig()
    for item in overrides or []:
        if '=' not in item:
            raise ConfigError(item, 'override must be dotted.path=value')
        key, raw = item.split('=', 1)
        cfg.override(key.strip(), raw.strip())
    return cfg.validate()
