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
Random forest classifier for binary outbreak labels.

Each tree grows on a bootstrap resample of the training rows. At every
node a random subset of features is examined and the split with the
largest decrease in Gini impurity is kept; thresholds are midpoints
between consecutive distinct values and rows with `x <= threshold` go
left. Equal decreases resolve to the lowest feature index, then the
lowest threshold. All randomness of tree `t` comes from
`(seed, t)`, so trees can be grown in any order or in parallel.

Trees are stored as flat node arrays; a leaf has feature `-1`.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .config import ForestParams
from .result import Serializable, Timeable

logger = logging.getLogger(__name__)

FOREST_VERSION = 'forest-1'

LEAF = -1


def gini(counts: Sequence[float]) -> float:
    """Gini impurity of class counts."""
    total = float(sum(counts))
    if total == 0:
        return 0.0
    return 1.0 - sum((c / total) ** 2 for c in counts)


def best_split(x: np.ndarray, y: np.ndarray, features: Sequence[int]
               ) -> Optional[Tuple[int, float, float]]:
    """Best Gini split of the rows `x` over the candidate features.

    Arguments:
        x: `(n, F)` node rows.
        y: `(n,)` binary labels.
        features: Candidate features in ascending order.

    Returns:
        `(feature, threshold, impurity decrease)`, or `None` if every
        candidate feature is constant on the node.
    """
    n, pos = len(y), float(y.sum())
    parent = 2.0 * (pos / n) * (1.0 - pos / n)
    left_n = np.arange(1, n, dtype=np.float64)
    right_n = n - left_n
    best = None
    for f in features:
        order = np.argsort(x[:, f], kind='mergesort')
        xs, ys = x[order, f], y[order]
        left_pos = np.cumsum(ys)[:-1]
        pl = left_pos / left_n
        pr = (pos - left_pos) / right_n
        child = (left_n * 2.0 * pl * (1.0 - pl)
                 + right_n * 2.0 * pr * (1.0 - pr)) / n
        gain = parent - child
        gain[xs[:-1] == xs[1:]] = -np.inf
        if len(gain) == 0:
            continue
        i = int(np.argmax(gain))
        if gain[i] == -np.inf:
            continue
        if best is None or gain[i] > best[2]:
            threshold = (xs[i] + xs[i + 1]) / 2.0
            if threshold >= xs[i + 1]:
                threshold = xs[i]
            best = (int(f), float(threshold), float(gain[i]))
    return best


class Tree(Serializable):
    """Flat binary decision tree.

    Attributes:
        feature (np.ndarray): Split feature per node, `-1` at leaves.
        threshold (np.ndarray): Split threshold per node.
        left (np.ndarray): Left child per node, `-1` at leaves.
        right (np.ndarray): Right child per node, `-1` at leaves.
        counts (np.ndarray): `(nodes, 2)` class counts per node.
        importance (np.ndarray): Raw impurity decrease per feature,
            weighted by the node's share of the tree's samples.
    """

    def __init__(self, n_features: int = 0):
        self.feature = np.zeros(0, dtype=np.int64)
        self.threshold = np.zeros(0)
        self.left = np.zeros(0, dtype=np.int64)
        self.right = np.zeros(0, dtype=np.int64)
        self.counts = np.zeros((0, 2), dtype=np.int64)
        self.importance = np.zeros(n_features)

    def __len__(self):
        return len(self.feature)

    @property
    def _attrs(self) -> List[str]:
        return []

    @property
    def value(self) -> np.ndarray:
        """Positive-class frequency per node."""
        return self.counts[:, 1] / self.counts.sum(axis=1)

    @property
    def depth(self) -> int:
        """Number of edges on the longest root-leaf path."""
        depth = np.zeros(len(self), dtype=np.int64)
        for node in range(len(self)):
            if self.feature[node] != LEAF:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max()) if len(self) else 0

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of `x`."""
        node = np.zeros(len(x), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            at = node[rows]
            go_left = x[rows, self.feature[at]] <= self.threshold[at]
            node[rows] = np.where(go_left, self.left[at], self.right[at])
            active = self.feature[node] != LEAF
        return node

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Leaf positive-class frequency of each row."""
        return self.value[self.apply(np.atleast_2d(x))]

    def to_dict(self) -> Dict[str, Any]:
        return {'feature': self.feature.tolist(),
                'threshold': self.threshold.tolist(),
                'left': self.left.tolist(), 'right': self.right.tolist(),
                'counts': self.counts.tolist(),
                'importance': self.importance.tolist()}

    @staticmethod
    def from_dict(**kwargs) -> Tree:
        """Restore Tree object."""
        tree = Tree()
        tree.feature = np.array(kwargs['feature'], dtype=np.int64)
        tree.threshold = np.array(kwargs['threshold'], dtype=np.float64)
        tree.left = np.array(kwargs['left'], dtype=np.int64)
        tree.right = np.array(kwargs['right'], dtype=np.int64)
        tree.counts = np.array(kwargs['counts'], dtype=np.int64) \
            .reshape(-1, 2)
        tree.importance = np.array(kwargs['importance'], dtype=np.float64)
        return tree


def grow_tree(x: np.ndarray, y: np.ndarray, params: ForestParams,
              seed: int, index: int) -> Tree:
    """Grow tree `index` of a forest on a bootstrap resample.

    Arguments:
        x: `(n, F)` training rows.
        y: `(n,)` binary labels.
        params: Forest settings.
        seed: Forest seed.
        index: Tree index.

    Returns:
        Grown tree.
    """
    rng = np.random.default_rng([seed, index])
    n, n_features = x.shape
    mtry = min(n_features, params.max_features or
               int(math.ceil(math.sqrt(n_features))))
    sample = rng.integers(0, n, size=n)
    feature, threshold, left, right, counts = [], [], [], [], []
    importance = np.zeros(n_features)
    stack = [(sample, 0, -1, False)]

    while stack:
        rows, depth, parent, is_right = stack.pop()
        node = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node
        ys = y[rows]
        pos = int(ys.sum())
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append((len(rows) - pos, pos))
        if pos == 0 or pos == len(rows) or len(rows) < params.min_leaf \
                or (params.max_depth is not None
                    and depth >= params.max_depth):
            continue
        candidates = np.sort(rng.choice(n_features, mtry, replace=False))
        split = best_split(x[rows], ys, candidates)
        if split is None:
            continue
        f, t, gain = split
        feature[node], threshold[node] = f, t
        importance[f] += len(rows) / n * gain
        go_left = x[rows, f] <= t
        stack.append((rows[~go_left], depth + 1, node, True))
        stack.append((rows[go_left], depth + 1, node, False))

    tree = Tree(n_features)
    tree.feature = np.array(feature, dtype=np.int64)
    tree.threshold = np.array(threshold, dtype=np.float64)
    tree.left = np.array(left, dtype=np.int64)
    tree.right = np.array(right, dtype=np.int64)
    tree.counts = np.array(counts, dtype=np.int64).reshape(-1, 2)
    tree.importance = importance
    return tree


class ForestModel(Timeable, Serializable):
    """Trained random forest.

    Attributes:
        trees (List[Tree]): Trees in index order.
        feature_names (List[str]): Names of the input features.
        params (ForestParams): Training settings.
        seed (int): Forest seed.
        version (str): Format tag.
    """

    def __init__(self, trees: Optional[List[Tree]] = None,
                 feature_names: Optional[List[str]] = None,
                 params: Optional[ForestParams] = None, seed: int = 0):
        super().__init__()
        self.version = FOREST_VERSION
        self.trees = trees or []
        self.feature_names = feature_names or []
        self.params = params or ForestParams()
        self.seed = seed

    @property
    def _attrs(self) -> List[str]:
        return ['version', 'feature_names', 'seed']

    @property
    def _ser_attrs(self):
        return [('params', ForestParams)]

    @property
    def _ser_list(self):
        return [('trees', Tree)]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict_proba(self, x: np.ndarray) -> Any:
        """Mean positive-class leaf frequency over trees.

        Arguments:
            x: One feature vector or a `(B, F)` matrix.

        Raises:
            ValueError: if the feature count does not match.

        Returns:
            Probability, or an array of probabilities for a matrix.
        """
        x = np.asarray(x, dtype=np.float64)
        rows = np.atleast_2d(x)
        if rows.shape[1] != self.n_features:
            raise ValueError(f'expected {self.n_features} features, got '
                             f'{rows.shape[1]}')
        probs = np.mean([t.predict(rows) for t in self.trees], axis=0)
        return float(probs[0]) if x.ndim == 1 else probs

    def importances(self) -> np.ndarray:
        """Impurity-decrease importances averaged over trees, summing
        to 1; uniform when no tree splits."""
        raw = np.mean([t.importance for t in self.trees], axis=0)
        total = raw.sum()
        if total <= 0:
            return np.full(self.n_features, 1.0 / self.n_features)
        return raw / total

    @staticmethod
    def from_dict(**kwargs) -> ForestModel:
        """Restore ForestModel object."""
        return Serializable._load(ForestModel(), **kwargs)


def train_forest(x: np.ndarray, y: Sequence[int], params: ForestParams,
                 seed: Optional[int] = None,
                 feature_names: Optional[List[str]] = None) -> ForestModel:
    """Train a random forest.

    Arguments:
        x: `(n, F)` features.
        y: `(n,)` binary labels.
        params: Forest settings.
        seed: Overrides `params.seed`.
        feature_names: Names of the `F` features.

    Raises:
        ValueError: fewer than 2 samples, a single class, or mismatched
            inputs.

    Returns:
        Trained forest.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError(f'need (n, F) features and n labels, got '
                         f'{x.shape} and {y.shape}')
    if len(y) < 2 or len(np.unique(y)) != 2:
        raise ValueError('training needs at least 2 samples of both '
                         'classes')
    seed = params.seed if seed is None else seed
    names = feature_names or [f'x{j}' for j in range(x.shape[1])]
    forest = ForestModel(feature_names=list(names), params=params,
                         seed=seed).on_start()
    forest.trees = Parallel(n_jobs=params.n_jobs)(
        delayed(grow_tree)(x, y, params, seed, t)
        for t in range(params.n_trees))
    forest.on_end()
    logger.info(f'trained {params.n_trees} trees on {len(y)} rows in '
                f'{forest.dur_s}s')
    return forest
