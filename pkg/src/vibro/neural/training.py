"""Mini-batch training with Adam and validation-based model selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..dsp.features import build_features
from ..errors import TrainingError
from .config import LossWeights, ModelConfig, TrainConfig
from .model import LOSS_TERMS, loss_and_grad, predict
from .optim import AdamState, adam_step
from .params import ModelParams, init_params

HISTORY_COLUMNS = ("iteration", "loss", *LOSS_TERMS, "val_loss")


@dataclass
class Split:
    """Clean targets (N, T) with their noisy observations (N, m, T)."""

    clean: np.ndarray
    noisy: np.ndarray

    def __post_init__(self):
        self.clean = np.asarray(self.clean, dtype=float)
        self.noisy = np.asarray(self.noisy, dtype=float)
        if self.clean.ndim != 2 or self.noisy.ndim != 3 or self.noisy.shape[0] != self.clean.shape[0]:
            raise ValueError(f"split shapes clean{self.clean.shape} noisy{self.noisy.shape} disagree")
        if self.noisy.shape[2] != self.clean.shape[1]:
            raise ValueError("noisy and clean series lengths differ")

    def __len__(self):
        return self.clean.shape[0]


@dataclass
class TrainResult:
    params: ModelParams
    history: list[dict] = field(default_factory=list)
    best_iteration: int = 0
    best_val_loss: float = math.inf
    stopped_early: bool = False


def validation_loss(params: ModelParams, config: ModelConfig, features, clean) -> float:
    """Mean per-series MSE of eval-mode predictions; the model-selection criterion."""
    y_hat = predict(params, config, *features)
    return float(np.mean(np.mean((y_hat - clean) ** 2, axis=1)))


def _batches(n: int, size: int, rng: np.random.Generator):
    """Endless stream of index batches; each pass over the data is a fresh permutation."""
    size = min(size, n)
    perm, pos = rng.permutation(n), 0
    while True:
        if pos + size > n:
            perm, pos = rng.permutation(n), 0
        yield np.sort(perm[pos : pos + size])
        pos += size


def learning_rate(config: TrainConfig, it: int) -> float:
    """Step size used at (1-based) iteration ``it``."""
    if config.lr_schedule == "linear":
        return config.learning_rate * (1.0 - (it - 1) / config.max_iterations)
    return config.learning_rate


def train(
    train_split: Split,
    val_split: Split,
    model_config: ModelConfig,
    train_config: TrainConfig,
    weights: LossWeights,
    log: Callable[[dict], None] | None = None,
) -> TrainResult:
    if len(train_split) == 0 or len(val_split) == 0:
        raise ValueError("training and validation splits must be non-empty")
    m, t = model_config.channel_count, model_config.series_length
    if train_split.noisy.shape[1:] != (m, t):
        raise ValueError(f"training data {train_split.noisy.shape[1:]} does not match model ({m}, {t})")

    root = np.random.SeedSequence(train_config.seed)
    init_seq, shuffle_seq, dropout_seq, noise_seq = root.spawn(4)
    params = init_params(model_config, int(init_seq.generate_state(1)[0]))
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)
    noise_rng = np.random.default_rng(noise_seq)

    stored = None if train_config.resample_noise else build_features(train_split.noisy)
    val_features = build_features(val_split.noisy)
    state = AdamState.zeros_like(params)
    result = TrainResult(params=params)
    stale = 0
    batches = _batches(len(train_split), train_config.batch_size, shuffle_rng)
    for it in range(1, train_config.max_iterations + 1):
        idx = next(batches)
        clean = train_split.clean[idx]
        if stored is None:
            lo, hi = train_config.noise_range
            sigma = noise_rng.uniform(lo, hi, size=(len(idx), 1, 1))
            noisy = clean[:, None, :] + sigma * noise_rng.standard_normal((len(idx), m, t))
            lstm_in, cnn_in = build_features(noisy)
        else:
            lstm_in, cnn_in = stored[0][idx], stored[1][idx]
        total, terms, grads, _ = loss_and_grad(
            params, model_config, weights, lstm_in, cnn_in, clean, train=True, rng=dropout_rng
        )
        if not math.isfinite(total):
            bad = [k for k in LOSS_TERMS if not math.isfinite(terms[k])] or ["loss"]
            raise TrainingError(f"non-finite loss at iteration {it} (term {bad[0]})")
        params, state = adam_step(
            params, grads, state, learning_rate(train_config, it), train_config.beta1, train_config.beta2,
            train_config.epsilon,
        )
        row = {"iteration": it, "loss": total, **terms, "val_loss": None}
        if it % train_config.eval_every == 0 or it == train_config.max_iterations:
            val = validation_loss(params, model_config, val_features, val_split.clean)
            if not math.isfinite(val):
                raise TrainingError(f"non-finite validation loss at iteration {it}")
            row["val_loss"] = val
            if val < result.best_val_loss:
                result.best_val_loss, result.best_iteration, result.params = val, it, params
                stale = 0
            else:
                stale += 1
        result.history.append(row)
        if log is not None:
            log(row)
        if train_config.patience is not None and stale >= train_config.patience:
            result.stopped_early = True
            break
    return result


def smoothed(values, window: int = 10) -> np.ndarray:
    """Trailing moving average over complete windows."""
    v = np.asarray(values, dtype=float)
    if v.size < window:
        return np.zeros(0)
    c = np.cumsum(np.concatenate([[0.0], v]))
    return (c[window:] - c[:-window]) / window
