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
Classifier features of observation windows.

Layout, in order:

1. five statistics (last, mean, max, total change, mean daily change)
   of each series S, I, new_inf, R, D, I_mob, I_home,
2. optional Koopman family: latent coordinates, forecast infected
   counts, forecast incidence sum and outbreak probability,
3. susceptibility bounds s_lo, s_hi,
4. optional end day.

Every feature belongs to one family, which is how importances are
reported.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import COUNT_COLUMNS

logger = logging.getLogger(__name__)

LAYOUT_VERSION = 'features-1'

SERIES: Tuple[Tuple[str, str], ...] = (
    ('S', 'susceptible'), ('I', 'infected'), ('new_inf', 'incidence'),
    ('R', 'other'), ('D', 'other'), ('I_mob', 'other'), ('I_home', 'other'))
"""Summarized series and their family."""

STATS = ('last', 'mean', 'max', 'change', 'daily_change')

FAMILIES = ('susceptible', 'infected', 'incidence', 'other', 'koopman',
            'susceptibility', 'end_day')


class FeatureLayout:
    """Names and families of the feature vector.

    Attributes:
        names (List[str]): Feature names in vector order.
        families (List[str]): Family of each feature.
        version (str): Layout tag.
    """

    def __init__(self, koopman_shape: Optional[Tuple[int, int]] = None,
                 include_end_day: bool = True):
        """Build a layout.

        Arguments:
            koopman_shape: `(r, h)` of the Koopman model, or `None` to
                leave out the Koopman family.
            include_end_day: Add the end day feature.
        """
        self.version = LAYOUT_VERSION
        self.names: List[str] = []
        self.families: List[str] = []
        for series, family in SERIES:
            for stat in STATS:
                self._add(f'{series}_{stat}', family)
        if koopman_shape:
            r, h = koopman_shape
            for j in range(r):
                self._add(f'koop_z{j}', 'koopman')
            for ell in range(1, h + 1):
                self._add(f'koop_I_{ell}', 'koopman')
            self._add('koop_new_inf_sum', 'koopman')
            self._add('koop_p_outbreak', 'koopman')
        self._add('s_lo', 'susceptibility')
        self._add('s_hi', 'susceptibility')
        if include_end_day:
            self._add('end_day', 'end_day')

    def __len__(self):
        return len(self.names)

    def _add(self, name: str, family: str) -> None:
        self.names.append(name)
        self.families.append(family)

    def family_index(self) -> Dict[str, List[int]]:
        """Feature indices per family, for families present."""
        out: Dict[str, List[int]] = {}
        for i, family in enumerate(self.families):
            out.setdefault(family, []).append(i)
        return out


class FeatureVector:
    """Named feature values of one window.

    With a Koopman model the vector carries `r` latent coordinates,
    `h` forecast infected counts, the forecast incidence sum and the
    outbreak probability. The attack-rate head is only a training
    target and is not a feature.

    Attributes:
        values (np.ndarray): Feature values.
        layout (FeatureLayout): Names and families.
    """

    def __init__(self, values: np.ndarray, layout: FeatureLayout):
        self.values = values
        self.layout = layout

    def __len__(self):
        return len(self.values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.layout.names.index(name)])

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.layout.names, self.values.tolist()))


def series_statistics(values: np.ndarray) -> np.ndarray:
    """Statistics of each series of a stack of windows.

    Arguments:
        values: `(B, k, m)` windows.

    Returns:
        `(B, 7 * 5)` series features in layout order.
    """
    cols = [COUNT_COLUMNS.index(s) for s, _ in SERIES]
    x = np.asarray(values, dtype=np.float64)[:, :, cols]
    k = x.shape[1]
    change = x[:, -1] - x[:, 0]
    stats = np.stack([x[:, -1], x.mean(axis=1), x.max(axis=1), change,
                      change / (k - 1) if k > 1 else np.zeros_like(change)],
                     axis=2)
    return stats.reshape(len(x), -1)


def koopman_features(model, values: np.ndarray) -> np.ndarray:
    """Koopman family of a stack of windows, `(B, r + h + 2)`."""
    z = model.encode(values)
    ahead = model.forecast(values)
    infected = ahead[:, :, COUNT_COLUMNS.index('I')]
    incidence = ahead[:, :, COUNT_COLUMNS.index('new_inf')].sum(axis=1)
    prob = model.predict_heads(z)[1]
    return np.hstack([z, infected, incidence[:, None], prob[:, None]])


def feature_matrix(windows: Sequence, model=None,
                   include_end_day: bool = True
                   ) -> Tuple[np.ndarray, FeatureLayout]:
    """Feature vectors of many windows.

    Arguments:
        windows: Windows of equal length.
        model: Optional `KoopmanModel`.
        include_end_day: Add the end day feature.

    Returns:
        `(B, F)` matrix and its layout.
    """
    shape = (model.r, model.h) if model is not None else None
    layout = FeatureLayout(shape, include_end_day)
    if not windows:
        return np.zeros((0, len(layout))), layout
    values = np.array([w.values for w in windows], dtype=np.float64)
    parts = [series_statistics(values)]
    if model is not None:
        parts.append(koopman_features(model, values))
    parts.append(np.array([[w.s_lo, w.s_hi] for w in windows]))
    if include_end_day:
        parts.append(np.array([[w.end_day] for w in windows], float))
    return np.hstack(parts), layout


def build_features(window, model=None,
                   include_end_day: bool = True) -> FeatureVector:
    """Feature vector of one window; Koopman family only with a model."""
    matrix, layout = feature_matrix([window], model, include_end_day)
    return FeatureVector(matrix[0], layout)
