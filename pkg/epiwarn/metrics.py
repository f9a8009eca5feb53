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
Binary classification metrics.

ROC-AUC uses the rank statistic with tie-averaged ranks, which equals
counting score pairs with ties worth one half. Average precision is the
non-interpolated sum of precision times recall increment over the
descending score sweep, where tied scores form one step.
"""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .constants import OPT_FLOAT
from .result import Serializable

logger = logging.getLogger(__name__)


def _ratio(num: int, den: int) -> OPT_FLOAT:
    return num / den if den else None


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> OPT_FLOAT:
    """Area under the ROC curve; `None` unless both classes occur."""
    y = np.asarray(labels, dtype=np.int64)
    pos = int(y.sum())
    neg = len(y) - pos
    if pos == 0 or neg == 0:
        return None
    ranks = rankdata(np.asarray(scores, dtype=np.float64), method='average')
    return float((ranks[y == 1].sum() - pos * (pos + 1) / 2) / (pos * neg))


def average_precision(labels: Sequence[int],
                      scores: Sequence[float]) -> OPT_FLOAT:
    """Average precision; `None` unless both classes occur."""
    y = np.asarray(labels, dtype=np.int64)
    pos = int(y.sum())
    if pos == 0 or pos == len(y):
        return None
    s = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-s, kind='mergesort')
    s, y = s[order], y[order]
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tps = np.cumsum(y)[last]
    precision = tps / (last + 1)
    recall = tps / pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


class MetricReport(Serializable):
    """Threshold and ranking metrics of a scored set.

    Attributes:
        n (int): Evaluated items.
        threshold (float): Positive iff score >= threshold.
        accuracy (float): Fraction classified correctly.
        auc (Optional[float]): ROC-AUC.
        ap (Optional[float]): Average precision.
        tp, fp, tn, fn (int): Confusion counts.
        per_class (Dict[str, Dict[str, Optional[float]]]): Precision and
            recall of the contained and major classes.
    """

    def __init__(self, n: int = 0, threshold: float = 0.5,
                 accuracy: float = 0.0, auc: OPT_FLOAT = None,
                 ap: OPT_FLOAT = None, tp: int = 0, fp: int = 0,
                 tn: int = 0, fn: int = 0,
                 per_class: Optional[Dict[str, Any]] = None):
        self.n = n
        self.threshold = threshold
        self.accuracy = accuracy
        self.auc = auc
        self.ap = ap
        self.tp, self.fp, self.tn, self.fn = tp, fp, tn, fn
        self.per_class = per_class or {}

    def __str__(self):
        fmt = (lambda v: 'n/a' if v is None else f'{v:.4f}')
        return (f'n={self.n} • accuracy {self.accuracy:.4f} • '
                f'AUC {fmt(self.auc)} • AP {fmt(self.ap)}')

    @property
    def _attrs(self) -> List[str]:
        return ['n', 'threshold', 'accuracy', 'auc', 'ap', 'tp', 'fp', 'tn',
                'fn', 'per_class']

    @property
    def confusion(self) -> Dict[str, int]:
        return dict(tp=self.tp, fp=self.fp, tn=self.tn, fn=self.fn)

    @staticmethod
    def from_dict(**kwargs) -> MetricReport:
        """Restore MetricReport object."""
        return Serializable._load(MetricReport(), **kwargs)


def compute_metrics(labels: Sequence[int], scores: Sequence[float],
                    threshold: float = 0.5) -> MetricReport:
    """Accuracy, ROC-AUC, average precision and confusion counts.

    Arguments:
        labels: Binary labels.
        scores: Scores, higher meaning more likely positive.
        threshold: Items with score >= threshold are predicted positive.

    Raises:
        ValueError: empty input, lengths differ, or labels not binary.

    Returns:
        Metric report; AUC and AP are `None` for one-class input.
    """
    y = np.asarray(labels, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if len(y) == 0 or len(y) != len(s):
        raise ValueError(f'need equal non-empty inputs, got {len(y)} '
                         f'labels and {len(s)} scores')
    if not np.isin(y, (0, 1)).all():
        raise ValueError('labels must be 0 or 1')
    pred = (s >= threshold).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    return MetricReport(
        n=len(y), threshold=threshold, accuracy=(tp + tn) / len(y),
        auc=roc_auc(y, s), ap=average_precision(y, s),
        tp=tp, fp=fp, tn=tn, fn=fn,
        per_class={
            'contained': {'precision': _ratio(tn, tn + fn),
                          'recall': _ratio(tn, tn + fp)},
            'major': {'precision': _ratio(tp, tp + fp),
                      'recall': _ratio(tp, tp + fn)}})
