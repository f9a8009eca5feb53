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
Early-warning pipeline: features, forest training and evaluation.
"""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import ForestParams
from .features import FAMILIES, FeatureLayout, feature_matrix
from .forest import ForestModel, train_forest
from .koopman import last_windows
from .metrics import MetricReport, compute_metrics
from .result import Serializable

logger = logging.getLogger(__name__)


class EvalReport(Serializable):
    """Evaluation of an early-warning forest on held-out windows.

    Attributes:
        overall (MetricReport): Window-level metrics.
        run_level (MetricReport): Metrics of each run's last window.
        by_end_day (List[Dict[str, Any]]): Per end day: windows,
            accuracy, AUC.
        family_importance (Dict[str, float]): Importance summed per
            feature family.
        feature_importance (Dict[str, float]): Importance per feature.
    """

    def __init__(self, overall: Optional[MetricReport] = None,
                 run_level: Optional[MetricReport] = None,
                 by_end_day: Optional[List[Dict[str, Any]]] = None,
                 family_importance: Optional[Dict[str, float]] = None,
                 feature_importance: Optional[Dict[str, float]] = None):
        self.overall = overall or MetricReport()
        self.run_level = run_level or MetricReport()
        self.by_end_day = by_end_day or []
        self.family_importance = family_importance or {}
        self.feature_importance = feature_importance or {}

    @property
    def _attrs(self) -> List[str]:
        return ['by_end_day', 'family_importance', 'feature_importance']

    @property
    def _ser_attrs(self):
        return [('overall', MetricReport), ('run_level', MetricReport)]

    def end_day_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.by_end_day,
                            columns=['end_day', 'windows', 'accuracy', 'auc'])

    def family_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.family_importance.items()),
                            columns=['family', 'importance'])

    @staticmethod
    def from_dict(**kwargs) -> EvalReport:
        """Restore EvalReport object."""
        return Serializable._load(EvalReport(), **kwargs)


def family_importance(forest: ForestModel,
                      layout: FeatureLayout) -> Dict[str, float]:
    """Forest importances summed per family, in layout family order."""
    imp = forest.importances()
    index = layout.family_index()
    return {f: float(imp[index[f]].sum()) for f in FAMILIES if f in index}


def window_features(windows: Sequence, koopman_model=None,
                    params: Optional[ForestParams] = None
                    ) -> Tuple[np.ndarray, FeatureLayout]:
    """Feature matrix of windows under the early-warning settings."""
    params = params or ForestParams()
    model = koopman_model if params.use_koopman else None
    return feature_matrix(windows, model, params.include_end_day)


def train_ew(windows: Sequence, koopman_model=None,
             params: Optional[ForestParams] = None) -> ForestModel:
    """Train the early-warning forest on training windows.

    Raises:
        ValueError: if the windows hold a single class.
    """
    params = params or ForestParams()
    x, layout = window_features(windows, koopman_model, params)
    return train_forest(x, [w.label for w in windows], params,
                        feature_names=layout.names)


def evaluate_ew(forest: ForestModel, koopman_model, windows: Sequence,
                params: Optional[ForestParams] = None) -> EvalReport:
    """Window-level, run-level, per-end-day and importance evaluation.

    Arguments:
        forest: Trained forest.
        koopman_model: Koopman model used for features, or `None`.
        windows: Test windows.
        params: Feature and threshold settings.

    Raises:
        ValueError: if there are no windows or the feature layout does
            not match the forest.

    Returns:
        Evaluation report.
    """
    if not windows:
        raise ValueError('no windows to evaluate')
    params = params or forest.params
    x, layout = window_features(windows, koopman_model, params)
    probs = forest.predict_proba(x)
    labels = np.array([w.label for w in windows])
    ends = np.array([w.end_day for w in windows])
    overall = compute_metrics(labels, probs, params.threshold)

    score = {(w.run_id, w.end_day): p for w, p in zip(windows, probs)}
    runs = last_windows(windows)
    run_level = compute_metrics(
        [w.label for w in runs], [score[(w.run_id, w.end_day)] for w in runs],
        params.threshold)

    by_end_day = []
    for e in sorted(set(ends.tolist())):
        sel = ends == e
        rep = compute_metrics(labels[sel], probs[sel], params.threshold)
        by_end_day.append({'end_day': int(e), 'windows': int(sel.sum()),
                           'accuracy': rep.accuracy, 'auc': rep.auc})

    imp = forest.importances()
    logger.info(f'window-level: {overall}')
    logger.info(f'run-level: {run_level}')
    return EvalReport(
        overall, run_level, by_end_day, family_importance(forest, layout),
        dict(zip(layout.names, imp.tolist())))
