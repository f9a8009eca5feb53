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
Viral-load curves by immunity category.

A curve maps infection age (in steps) to viral load. It is either a
parametric pulse

$$\\gamma(a) = V \\cdot (a / A)^2 \\cdot e^{2 (1 - a / A)}$$

which peaks at age $A$ with load $V$, or a tabulated curve read from
a CSV file with columns `age_step,load`, linearly interpolated and 0
beyond its last row.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .constants import ArtifactError, ConfigError, Immunity

logger = logging.getLogger(__name__)


class Curve:
    """Viral-load curve of one immunity category."""

    def __call__(self, age: int) -> float:
        return float(self.loads(np.array([age]))[0])

    def loads(self, ages: np.ndarray) -> np.ndarray:
        """Evaluate the curve at integer ages."""
        raise NotImplementedError  # pragma: no cover

    def past_peak(self, recovery_thr: float) -> int:
        """Ages strictly above this value are past the curve peak."""
        raise NotImplementedError  # pragma: no cover


class Pulse(Curve):
    """Parametric pulse with peak load `V` at age `A`."""

    def __init__(self, V: float, A: float):
        self.V = float(V)
        self.A = float(A)

    def __repr__(self):
        return f'Pulse(V={self.V}, A={self.A})'

    def loads(self, ages: np.ndarray) -> np.ndarray:
        x = np.asarray(ages, dtype=np.float64) / self.A
        return self.V * x * x * np.exp(2.0 * (1.0 - x))

    def past_peak(self, recovery_thr: float) -> int:
        return int(math.floor(self.A))


class TabulatedCurve(Curve):
    """Curve sampled at increasing ages, linearly interpolated.

    Attributes:
        ages (np.ndarray): Strictly increasing sample ages, from 0.
        values (np.ndarray): Non-negative loads at `ages`.
    """

    def __init__(self, ages: List[float], values: List[float]):
        self.ages = np.asarray(ages, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)

    def __repr__(self):
        return f'TabulatedCurve({len(self.ages)} rows)'

    def loads(self, ages: np.ndarray) -> np.ndarray:
        ages = np.asarray(ages, dtype=np.float64)
        out = np.interp(ages, self.ages, self.values)
        out[ages > self.ages[-1]] = 0.0
        return out

    def past_peak(self, recovery_thr: float) -> int:
        above = np.nonzero(self.values >= recovery_thr)[0]
        return int(self.ages[above[-1]]) if len(above) else -1

    @staticmethod
    def from_csv(path: str) -> TabulatedCurve:
        """Read a curve file.

        Raises:
            ArtifactError: if the file does not exist.
            ConfigError: if the file is malformed.
        """
        try:
            frame = pd.read_csv(path)
        except FileNotFoundError as err:
            raise ArtifactError(path, 'viral-load curve') from err
        if list(frame.columns) != ['age_step', 'load'] or frame.empty:
            raise ConfigError(path, 'curve file needs columns age_step,load')
        ages = frame['age_step'].to_numpy(dtype=np.float64)
        values = frame['load'].to_numpy(dtype=np.float64)
        if ages[0] != 0 or np.any(np.diff(ages) <= 0):
            raise ConfigError(path, 'age_step must start at 0 and increase')
        if not np.all(np.isfinite(values)) or values.min() < 0:
            raise ConfigError(path, 'load must be finite and non-negative')
        logger.debug(f'loaded curve {path} ({len(ages)} rows)')
        return TabulatedCurve(ages, values)


class CurveSet:
    """One curve per immunity category.

    Attributes:
        curves (Dict[Immunity, Curve]): Curve by category.
    """

    def __init__(self, curves: Dict[Immunity, Curve]):
        missing = [m.label for m in Immunity if m not in curves]
        if missing:
            raise ConfigError('sim.pulses', f'no curve for {missing[0]}')
        self.curves = curves
        self._table: Optional[np.ndarray] = None

    def __getitem__(self, category) -> Curve:
        try:
            return self.curves[Immunity(category)]
        except ValueError as err:
            raise KeyError(f'unknown category {category}') from err

    def viral_load(self, category, age_steps: int) -> float:
        """Load of a category at integer infection age.

        Raises:
            KeyError: unknown category.
            ValueError: negative age.
        """
        if age_steps < 0:
            raise ValueError(f'negative infection age {age_steps}')
        return self[category](age_steps)

    def table(self, max_age: int) -> np.ndarray:
        """Load lookup table of shape `(4, max_age + 1)`.

        Row `m` holds the curve of category `m` at ages `0..max_age`.
        The table is cached and grown when a larger age is requested.
        """
        if self._table is None or self._table.shape[1] <= max_age:
            ages = np.arange(max_age + 1)
            self._table = np.vstack(
                [self.curves[m].loads(ages) for m in Immunity])
        return self._table

    def past_peak(self, recovery_thr: float) -> np.ndarray:
        """Past-peak age bound per category."""
        return np.array([self.curves[m].past_peak(recovery_thr)
                         for m in Immunity], dtype=np.int64)

    @staticmethod
    def from_config(config) -> CurveSet:
        """Build the curves of a `SimConfig`.

        A category with an entry in `curve_files` reads its file;
        otherwise it uses its parametric pulse.
        """
        curves: Dict[Immunity, Curve] = {}
        for m in Immunity:
            path = config.curve_files.get(m.label)
            if path:
                curves[m] = TabulatedCurve.from_csv(path)
            elif m.label in config.pulses:
                curves[m] = Pulse(*config.pulses[m.label])
        return CurveSet(curves)
