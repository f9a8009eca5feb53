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
Koopman latent dynamics model.

An encoder lifts a window of daily counts to a latent vector $z$, a
linear operator $A$ advances latents one day at a time, and a decoder
maps latents back to the day's counts. Two logistic heads read the
final attack rate and the outbreak probability from a latent.

Shapes, with $k$ window days, $m$ observables, width $w$, latent size
$r$:

| part    | layers                          |
|---------|---------------------------------|
| encoder | $km \\to w \\to w \\to r$, tanh hidden |
| decoder | $r \\to w \\to m$, tanh hidden     |
| heads   | $r \\to 1$, logistic              |

Counts are divided by the population size before entering the model.
Gradients are computed by hand and checked against finite differences
in the tests.
"""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import KoopmanParams
from .constants import COUNT_COLUMNS, DivergenceError
from .metrics import MetricReport, compute_metrics
from .result import Serializable, Timeable

logger = logging.getLogger(__name__)

MODEL_VERSION = 'koopman-1'

TERMS = ('rec', 'lin', 'pred', 'ar', 'cls')
"""Loss terms, in report order."""

PARAMS = ('E1', 'e1', 'E2', 'e2', 'E3', 'e3', 'A', 'D1', 'd1', 'D2', 'd2',
          'wa', 'ba', 'wc', 'bc')
"""Parameter names, in serialization order."""


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class KoopmanModel(Serializable):
    """Encoder, latent operator, decoder and heads.

    Attributes:
        k (int): Window days.
        m (int): Observables per day.
        r (int): Latent dimension.
        h (int): Forecast horizon.
        width (int): Hidden layer width.
        scale (float): Normalization constant (population size).
        weights (Dict[str, float]): Loss weights by term.
        params (Dict[str, np.ndarray]): Parameters by name.
        version (str): Model format tag.
    """

    def __init__(self, k: int = 5, m: int = len(COUNT_COLUMNS), r: int = 6,
                 h: int = 5, width: int = 64, scale: float = 1.0,
                 weights: Optional[Dict[str, float]] = None,
                 params: Optional[Dict[str, np.ndarray]] = None):
        self.version = MODEL_VERSION
        self.k, self.m, self.r, self.h = k, m, r, h
        self.width = width
        self.scale = float(scale)
        self.weights = weights or {t: 1.0 for t in TERMS}
        self.params = params or self.zeros()

    @property
    def _attrs(self) -> List[str]:
        return ['version', 'k', 'm', 'r', 'h', 'width', 'scale', 'weights']

    @property
    def input_dim(self) -> int:
        return self.k * self.m

    @property
    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Parameter shapes by name."""
        n, w, r, m = self.input_dim, self.width, self.r, self.m
        return dict(E1=(w, n), e1=(w,), E2=(w, w), e2=(w,), E3=(r, w),
                    e3=(r,), A=(r, r), D1=(w, r), d1=(w,), D2=(m, w),
                    d2=(m,), wa=(r,), ba=(1,), wc=(r,), bc=(1,))

    def zeros(self) -> Dict[str, np.ndarray]:
        """All-zero parameters."""
        return {name: np.zeros(shape) for name, shape in self.shapes.items()}

    def init(self, seed: int, noise: float = 0.01) -> KoopmanModel:
        """Fan-in scaled uniform weights, zero biases, $A \\approx I$."""
        rng = np.random.default_rng([seed, 0])
        for name, shape in self.shapes.items():
            if name == 'A':
                self.params[name] = np.eye(self.r) + \
                    noise * rng.uniform(-1.0, 1.0, shape)
            elif len(shape) == 2 or name in ('wa', 'wc'):
                bound = 1.0 / np.sqrt(shape[-1])
                self.params[name] = rng.uniform(-bound, bound, shape)
            else:
                self.params[name] = np.zeros(shape)
        return self

    def copy(self) -> KoopmanModel:
        return KoopmanModel(self.k, self.m, self.r, self.h, self.width,
                            self.scale, dict(self.weights),
                            {n: p.copy() for n, p in self.params.items()})

    def normalize(self, counts: np.ndarray) -> np.ndarray:
        return np.asarray(counts, dtype=np.float64) / self.scale

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.scale

    def _inputs(self, windows: np.ndarray) -> np.ndarray:
        """Normalized `(B, km)` inputs from count windows."""
        x = np.asarray(windows, dtype=np.float64)
        if x.shape[-2:] != (self.k, self.m) and x.shape[-1:] != \
                (self.input_dim,):
            raise ValueError(f'expected {self.k}x{self.m} windows, got '
                             f'shape {x.shape}')
        return self.normalize(x.reshape(-1, self.input_dim))

    def _single(self, window) -> bool:
        shape = np.shape(window)
        return len(shape) == 1 or shape == (self.k, self.m)

    def _encode(self, x: np.ndarray) -> Tuple[np.ndarray, tuple]:
        p = self.params
        h1 = np.tanh(x @ p['E1'].T + p['e1'])
        h2 = np.tanh(h1 @ p['E2'].T + p['e2'])
        return h2 @ p['E3'].T + p['e3'], (x, h1, h2)

    def _decode(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        p = self.params
        g = np.tanh(z @ p['D1'].T + p['d1'])
        return g @ p['D2'].T + p['d2'], g

    def _step(self, z: np.ndarray) -> np.ndarray:
        return z @ self.params['A'].T

    def encode(self, window: np.ndarray) -> np.ndarray:
        """Latent of a `(k, m)` count window, or `(B, r)` for a stack.

        Raises:
            ValueError: on shape mismatch.
        """
        z, _ = self._encode(self._inputs(window))
        return z[0] if self._single(window) else z

    def advance(self, z: np.ndarray, steps: int) -> np.ndarray:
        """Apply $A$ to `z` `steps` times."""
        if steps < 0:
            raise ValueError(f'negative step count {steps}')
        z = np.asarray(z, dtype=np.float64)
        for _ in range(steps):
            z = self._step(z)
        return z

    def forecast(self, window: np.ndarray,
                 h: Optional[int] = None) -> np.ndarray:
        """Predicted counts of the `h` days after the window.

        Returns:
            `(h, m)` array, or `(B, h, m)` for a stack of windows.
        """
        h = self.h if h is None else h
        z, _ = self._encode(self._inputs(window))
        out = np.zeros((len(z), h, self.m))
        for ell in range(h):
            z = self._step(z)
            out[:, ell] = self.denormalize(self._decode(z)[0])
        return out[0] if self._single(window) else out

    def predict_heads(self, z: np.ndarray) -> Tuple[Any, Any]:
        """Attack-rate estimate and outbreak probability of latents."""
        p = self.params
        z = np.asarray(z, dtype=np.float64)
        ar = sigmoid(z @ p['wa'] + p['ba'][0])
        prob = sigmoid(z @ p['wc'] + p['bc'][0])
        if np.ndim(z) == 1:
            return float(ar), float(prob)
        return ar, prob

    def outbreak_probability(self, windows: np.ndarray) -> np.ndarray:
        """Outbreak head output for a stack of windows."""
        return self.predict_heads(self.encode(np.asarray(windows)))[1]

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(),
                'params': {n: self.params[n].tolist() for n in PARAMS}}

    @staticmethod
    def from_dict(**kwargs) -> KoopmanModel:
        """Restore KoopmanModel object."""
        model = Serializable._load(KoopmanModel(), **kwargs)
        params = kwargs.get('params') or {}
        for name, shape in model.shapes.items():
            model.params[name] = np.array(params[name], dtype=np.float64) \
                .reshape(shape)
        return model


class Batch:
    """Training targets of a set of windows.

    Attributes:
        x (np.ndarray): `(B, km)` normalized windows.
        x_next (np.ndarray): `(B, km)` windows shifted one day.
        last (np.ndarray): `(B, m)` last window day.
        future (np.ndarray): `(B, h, m)` following days.
        mask (np.ndarray): `(B, h)` weights of forecast targets.
        rho (np.ndarray): `(B,)` final attack rates.
        y (np.ndarray): `(B,)` outbreak labels.
    """

    def __init__(self, x, x_next, last, future, mask, rho, y):
        self.x = x
        self.x_next = x_next
        self.last = last
        self.future = future
        self.mask = mask
        self.rho = rho
        self.y = y

    def __len__(self):
        return len(self.x)

    def take(self, index: np.ndarray) -> Batch:
        """Sub-batch of the given rows."""
        return Batch(*(a[index] for a in (
            self.x, self.x_next, self.last, self.future, self.mask,
            self.rho, self.y)))

    @staticmethod
    def from_windows(model: KoopmanModel, windows: Sequence,
                     mask_padded: bool = False) -> Batch:
        """Targets of windows extracted with at least `model.h` days
        ahead."""
        if not windows:
            raise ValueError('empty batch')
        h, n = model.h, len(windows)
        values = np.array([w.values for w in windows], dtype=np.float64)
        ahead = np.array([w.ahead[:max(h, 1)] for w in windows],
                         dtype=np.float64)
        if ahead.shape[1] < max(h, 1):
            raise ValueError(f'windows carry {ahead.shape[1]} days ahead, '
                             f'model needs {h}')
        padded = np.array([w.padded[:h] for w in windows], dtype=bool) \
            .reshape(n, h)
        nxt = np.concatenate([values[:, 1:], ahead[:, :1]], axis=1)
        return Batch(
            model.normalize(values.reshape(n, -1)),
            model.normalize(nxt.reshape(n, -1)),
            model.normalize(values[:, -1]),
            model.normalize(ahead[:, :h]),
            (~padded if mask_padded else np.ones((n, h), bool))
            .astype(np.float64),
            np.array([w.rho for w in windows], dtype=np.float64),
            np.array([w.label for w in windows], dtype=np.float64))


def loss_and_grad(model: KoopmanModel, batch: Batch, grad: bool = True
                  ) -> Tuple[Dict[str, float], Dict[str, np.ndarray]]:
    """Loss terms, weighted total and parameter gradients.

    Terms:

    - `rec`: mean squared error of the decoded latent vs the last day
    - `lin`: mean over the batch of $\\|\\psi(x') - A \\psi(x)\\|^2$
    - `pred`: mean squared error of $\\Gamma(A^\\ell z)$ vs day
      $\\ell$ ahead, $\\ell = 1..h$, over unmasked targets
    - `ar`: mean squared error of the attack-rate head
    - `cls`: mean binary cross-entropy of the outbreak head

    Returns:
        Terms with `total`, and gradients of `total` (empty when `grad`
        is false).
    """
    p, lam = model.params, model.weights
    B, m, h = len(batch), model.m, model.h
    z, enc = model._encode(batch.x)
    zn, enc_n = model._encode(batch.x_next)

    rec, g_rec = model._decode(z)
    err_rec = rec - batch.last
    diff = zn - model._step(z)

    path, outs = [z], []
    for _ in range(h):
        path.append(model._step(path[-1]))
        outs.append(model._decode(path[-1]))
    count = batch.mask.sum() * m
    err_pred = [(o - batch.future[:, i]) * batch.mask[:, i:i + 1]
                for i, (o, _) in enumerate(outs)]

    s_ar = z @ p['wa'] + p['ba'][0]
    s_cls = z @ p['wc'] + p['bc'][0]
    ar, prob = sigmoid(s_ar), sigmoid(s_cls)

    terms = dict(
        rec=float(np.mean(err_rec ** 2)),
        lin=float(np.sum(diff ** 2) / B),
        pred=float(sum(np.sum(e ** 2) for e in err_pred) / count)
        if count else 0.0,
        ar=float(np.mean((ar - batch.rho) ** 2)),
        cls=float(np.mean(np.logaddexp(0.0, s_cls) - batch.y * s_cls)))
    terms['total'] = sum(lam[t] * terms[t] for t in TERMS)
    if not grad:
        return terms, {}

    g = {name: np.zeros_like(v) for name, v in p.items()}

    def decoder_back(zz, gg, d_out):
        g['D2'] += d_out.T @ gg
        g['d2'] += d_out.sum(axis=0)
        d_pre = (d_out @ p['D2']) * (1.0 - gg ** 2)
        g['D1'] += d_pre.T @ zz
        g['d1'] += d_pre.sum(axis=0)
        return d_pre @ p['D1']

    def encoder_back(cache, dz):
        x, h1, h2 = cache
        g['E3'] += dz.T @ h2
        g['e3'] += dz.sum(axis=0)
        d2 = (dz @ p['E3']) * (1.0 - h2 ** 2)
        g['E2'] += d2.T @ h1
        g['e2'] += d2.sum(axis=0)
        d1 = (d2 @ p['E2']) * (1.0 - h1 ** 2)
        g['E1'] += d1.T @ x
        g['e1'] += d1.sum(axis=0)

    dz = decoder_back(z, g_rec, lam['rec'] * 2.0 * err_rec / (B * m))

    d_diff = lam['lin'] * 2.0 * diff / B
    dzn = d_diff
    dz -= d_diff @ p['A']
    g['A'] -= d_diff.T @ z

    if count:
        back = np.zeros_like(z)
        for i in reversed(range(h)):
            back += decoder_back(path[i + 1], outs[i][1],
                                 lam['pred'] * 2.0 * err_pred[i] / count)
            g['A'] += back.T @ path[i]
            back = back @ p['A']
        dz += back

    d_ar = lam['ar'] * 2.0 * (ar - batch.rho) * ar * (1.0 - ar) / B
    g['wa'] += z.T @ d_ar
    g['ba'] += d_ar.sum()
    dz += np.outer(d_ar, p['wa'])

    d_cls = lam['cls'] * (prob - batch.y) / B
    g['wc'] += z.T @ d_cls
    g['bc'] += d_cls.sum()
    dz += np.outer(d_cls, p['wc'])

    encoder_back(enc, dz)
    encoder_back(enc_n, dzn)
    return terms, g


def compute_loss(model: KoopmanModel, batch: Batch) -> Dict[str, float]:
    """Loss terms and weighted total of a batch."""
    return loss_and_grad(model, batch, grad=False)[0]


def accuracy(model: KoopmanModel, batch: Batch,
             threshold: float = 0.5) -> float:
    """Outbreak-head accuracy on a batch."""
    z, _ = model._encode(batch.x)
    prob = model.predict_heads(z)[1]
    return float(np.mean((prob >= threshold) == (batch.y == 1)))


class Adam:
    """Adaptive moment estimation over a parameter dictionary."""

    def __init__(self, params: Dict[str, np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m1 = {n: np.zeros_like(v) for n, v in params.items()}
        self.m2 = {n: np.zeros_like(v) for n, v in params.items()}

    def update(self, params: Dict[str, np.ndarray],
               grads: Dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name in PARAMS:
            gr = grads[name]
            self.m1[name] = self.beta1 * self.m1[name] + \
                (1 - self.beta1) * gr
            self.m2[name] = self.beta2 * self.m2[name] + \
                (1 - self.beta2) * gr * gr
            params[name] -= self.lr * (self.m1[name] / c1) / \
                (np.sqrt(self.m2[name] / c2) + self.eps)


class TrainReport(Timeable, Serializable):
    """Per-epoch losses and accuracy.

    Epoch 0 evaluates the initialized model; epoch `e` evaluates the
    model after `e` passes over the training windows.

    Attributes:
        train (List[Dict[str, float]]): Training-set values per epoch.
        val (List[Dict[str, float]]): Validation-set values per epoch.
        selected_epoch (int): Epoch of lowest validation total loss.
    """

    def __init__(self, train: Optional[List[Dict[str, float]]] = None,
                 val: Optional[List[Dict[str, float]]] = None,
                 selected_epoch: int = 0):
        super().__init__()
        self.train = train or []
        self.val = val or []
        self.selected_epoch = selected_epoch

    @property
    def _attrs(self) -> List[str]:
        return ['train', 'val', 'selected_epoch']

    @property
    def selected(self) -> Dict[str, float]:
        """Validation values of the selected epoch."""
        return self.val[self.selected_epoch]

    def frame(self) -> pd.DataFrame:
        """Report as a table, one row per epoch."""
        rows = []
        for epoch, (tr, va) in enumerate(zip(self.train, self.val)):
            row = {'epoch': epoch}
            row.update({f'train_{k}': v for k, v in tr.items()})
            row.update({f'val_{k}': v for k, v in va.items()})
            rows.append(row)
        return pd.DataFrame(rows)

    @staticmethod
    def from_dict(**kwargs) -> TrainReport:
        """Restore TrainReport object."""
        return Serializable._load(TrainReport(), **kwargs)


def _evaluate(model: KoopmanModel, batch: Batch) -> Dict[str, float]:
    values = compute_loss(model, batch)
    values['accuracy'] = accuracy(model, batch)
    return values


def train(train_windows: Sequence, val_windows: Sequence,
          params: KoopmanParams, scale: float,
          seed: Optional[int] = None) -> Tuple[KoopmanModel, TrainReport]:
    """Fit a model with mini-batch Adam and keep the best validation epoch.

    Arguments:
        train_windows: Training windows with forecast targets.
        val_windows: Validation windows with forecast targets.
        params: Architecture and optimizer settings.
        scale: Normalization constant (population size).
        seed: Overrides `params.seed`.

    Raises:
        ValueError: if either window set is empty.
        DivergenceError: if a loss becomes non-finite.

    Returns:
        Model of the selected epoch and the full report.
    """
    if not train_windows or not val_windows:
        raise ValueError('training needs non-empty train and validation '
                         'windows')
    seed = params.seed if seed is None else seed
    model = KoopmanModel(params.k, len(COUNT_COLUMNS), params.r, params.h,
                         params.width, scale, params.weights) \
        .init(seed, params.init_noise)
    tr = Batch.from_windows(model, train_windows, params.mask_padded)
    va = Batch.from_windows(model, val_windows, params.mask_padded)
    opt = Adam(model.params, params.lr, params.beta1, params.beta2,
               params.eps)
    shuffle = np.random.default_rng([seed, 1])
    report = TrainReport().on_start()
    best = model.copy()

    for epoch in range(params.epochs + 1):
        if epoch > 0:
            order = shuffle.permutation(len(tr))
            for start in range(0, len(tr), params.batch_size):
                _, grads = loss_and_grad(
                    model, tr.take(order[start:start + params.batch_size]))
                opt.update(model.params, grads)
        report.train.append(_evaluate(model, tr))
        report.val.append(_evaluate(model, va))
        total = report.val[-1]['total']
        if not np.isfinite(total) or not np.isfinite(
                report.train[-1]['total']):
            raise DivergenceError(f'non-finite loss at epoch {epoch}',
                                  report.to_dict())
        if total < report.val[report.selected_epoch]['total']:
            report.selected_epoch = epoch
            best = model.copy()
        logger.info(f'epoch {epoch}: train {report.train[-1]["total"]:.5f}'
                    f' • val {total:.5f}')

    logger.info(f'selected epoch {report.selected_epoch}')
    return best, report.on_end()


def last_windows(windows: Sequence) -> List:
    """Latest window of each run, ordered by run id."""
    last: Dict[int, Any] = {}
    for w in windows:
        if w.run_id not in last or w.end_day > last[w.run_id].end_day:
            last[w.run_id] = w
    return [last[i] for i in sorted(last)]


def evaluate_koopman(model: KoopmanModel, windows: Sequence,
                     threshold: float = 0.5) -> Dict[str, MetricReport]:
    """Outbreak-head metrics per window and per run.

    The run-level score is the probability of the run's last window.

    Returns:
        Reports under `window` and `run`.
    """
    if not windows:
        raise ValueError('no windows to evaluate')
    probs = model.outbreak_probability(np.array([w.values for w in windows]))
    score = {(w.run_id, w.end_day): float(s) for w, s in zip(windows, probs)}
    runs = last_windows(windows)
    return {
        'window': compute_metrics([w.label for w in windows], probs,
                                  threshold),
        'run': compute_metrics([w.label for w in runs],
                               [score[(w.run_id, w.end_day)] for w in runs],
                               threshold)}


def export_latents(model: KoopmanModel, windows: Sequence) -> pd.DataFrame:
    """Latent coordinates of windows with two principal components.

    Principal axes come from the SVD of the centered latents; each axis
    is signed so its largest-magnitude loading is positive.

    Returns:
        Table with run_id, end_day, label, rho, z0..z{r-1}, pc1, pc2.
    """
    z = model.encode(np.array([w.values for w in windows]))
    centered = z - z.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    signs = np.sign(vt[np.arange(len(vt)), np.abs(vt).argmax(axis=1)])
    axes = (vt * signs[:, None])[:2]
    pcs = centered @ axes.T
    pcs = np.hstack([pcs, np.zeros((len(z), 2 - pcs.shape[1]))])
    frame = pd.DataFrame({
        'run_id': [w.run_id for w in windows],
        'end_day': [w.end_day for w in windows],
        'label': [w.label for w in windows],
        'rho': [w.rho for w in windows]})
    for j in range(model.r):
        frame[f'z{j}'] = z[:, j]
    frame['pc1'], frame['pc2'] = pcs[:, 0], pcs[:, 1]
    return frame
