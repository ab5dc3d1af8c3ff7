"""Central finite-difference verification of the hand-derived gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ConvSpec, LossWeights, ModelConfig
from .layers import dense_backward, dense_forward
from .model import loss_and_grad, loss_terms, forward_batch
from .params import ModelParams, init_params


@dataclass
class GradCheckReport:
    block_errors: dict[str, float] = field(default_factory=dict)
    not_applicable: list[str] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max(self.block_errors.values(), default=0.0)

    @property
    def applicable(self) -> bool:
        return len(self.not_applicable) < len(self.block_errors)


def block_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float | None:
    """max|a - n| scaled by the block's largest gradient magnitude; ``None`` if both vanish."""
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)))
    if scale == 0.0:
        return None
    return float(np.max(np.abs(analytic - numeric))) / scale


def _record(report: GradCheckReport, name: str, analytic, numeric):
    err = block_rel_error(analytic, numeric)
    if err is None:
        report.block_errors[name] = 0.0
        report.not_applicable.append(name)
    else:
        report.block_errors[name] = err


def small_config(series_length=12, channel_count=2, hidden=4, tied=True, dropout_rate=0.2) -> ModelConfig:
    return ModelConfig(
        series_length=series_length,
        channel_count=channel_count,
        lstm_hidden_size=hidden,
        cnn_layers=(ConvSpec(3, 3, 2), ConvSpec(4, 3, 2)),
        fc_widths=(10, 8),
        dropout_rate=dropout_rate,
        tied_branches=tied,
    )


def grad_check(config: ModelConfig | None = None, seed: int = 0, weights: LossWeights | None = None,
               h: float = 1e-5, batch: int = 2, params: ModelParams | None = None, train: bool = True) -> GradCheckReport:
    """Analytic vs central-difference gradients of the full loss for every block.

    Training mode is used so the dropout path is exercised; the dropout mask is
    pinned by reseeding the generator for every evaluation.
    """
    config = config or small_config()
    if config.series_length > 16 or config.lstm_hidden_size > 8:
        raise ValueError("grad_check is meant for small configs (T <= 16, hidden <= 8)")
    weights = weights or LossWeights(1e-2, 1e-2, 1e-2, 1e-1)
    rng = np.random.default_rng(seed)
    m, t = config.channel_count, config.series_length
    lstm_in = rng.normal(size=(batch, m, config.lstm_input_size, t))
    cnn_in = rng.normal(size=(batch, m, config.cnn_input_channels, t))
    clean = rng.normal(size=(batch, t))
    if params is None:
        params = init_params(config, seed + 1)
        # larger biases keep the check away from ReLU kinks at zero
        params = params.map(lambda a: a + 0.1 * rng.normal(size=a.shape))
    mask_seed = seed + 2

    def total(p):
        y, cache = forward_batch(p, config, lstm_in, cnn_in, train=train, rng=np.random.default_rng(mask_seed))
        return loss_terms(y, clean, p, cache.intermediates.lstm, weights)[0]

    _, _, grads, _ = loss_and_grad(params, config, weights, lstm_in, cnn_in, clean, train=train,
                                   rng=np.random.default_rng(mask_seed))
    report = GradCheckReport()
    for g, name, arr in params.blocks():
        numeric = np.zeros_like(arr)
        flat = arr.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = total(params)
            flat[i] = old - h
            down = total(params)
            flat[i] = old
            nflat[i] = (up - down) / (2 * h)
        _record(report, f"{g}.{name}", getattr(grads, g)[name], numeric)
    return report


def grad_check_dense(seed: int = 0, widths=(7, 6, 5, 4), batch: int = 3, h: float = 1e-5) -> GradCheckReport:
    """The affine/ReLU head alone, under a mean-squared loss."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(batch, widths[0]))
    target = rng.normal(size=(batch, widths[-1]))
    acts = ["relu"] * (len(widths) - 2) + ["linear"]
    layers = [(rng.normal(size=(a, b)) / np.sqrt(a), 0.1 * rng.normal(size=b)) for a, b in zip(widths, widths[1:])]

    def run(ls):
        z, caches = x, []
        for (W, b), act in zip(ls, acts):
            z, c = dense_forward(z, W, b, act)
            caches.append(c)
        return z, caches

    def value(ls):
        return float(np.mean((run(ls)[0] - target) ** 2))

    y, caches = run(layers)
    d = 2.0 * (y - target) / y.size
    analytic = [None] * len(layers)
    for k in range(len(layers) - 1, -1, -1):
        d, dW, db = dense_backward(d, caches[k], layers[k][0])
        analytic[k] = (dW, db)
    report = GradCheckReport()
    for k, (W, b) in enumerate(layers):
        for label, arr, a in (("W", W, analytic[k][0]), ("b", b, analytic[k][1])):
            numeric = np.zeros_like(arr)
            flat, nflat = arr.reshape(-1), numeric.reshape(-1)
            for i in range(flat.size):
                old = flat[i]
                flat[i] = old + h
                up = value(layers)
                flat[i] = old - h
                down = value(layers)
                flat[i] = old
                nflat[i] = (up - down) / (2 * h)
            _record(report, f"fc{k}.{label}", a, numeric)
    return report
