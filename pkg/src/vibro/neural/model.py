"""Hybrid stacking ensemble: per-signal BiLSTM and CNN branches feeding an FC head.

Batched inputs are ``lstm_in`` (B, m, I, T) and ``cnn_in`` (B, m, C, T).  The
head input for record ``b`` is ``[lstm_1, cnn_1, lstm_2, cnn_2, ...]`` where
``lstm_j`` is the 4H embedding of signal j (mean-pooled per-step outputs, then
the last forward state and the first backward state) and ``cnn_j`` the
flattened final feature map.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..dsp.features import FeatureBundle
from ..errors import TrainingError
from .config import LossWeights, ModelConfig
from .layers import (
    conv1d_same_backward,
    conv1d_same_forward,
    dense_backward,
    dense_forward,
    dropout_mask,
    maxpool1d_backward,
    maxpool1d_forward,
    relu_backward,
    relu_forward,
)
from .lstm import bilstm_backward_batch, bilstm_forward_batch
from .params import GROUPS, ModelParams, branch_channels

LOSS_TERMS = ("data", "reg_lstm", "reg_cnn", "reg_nn", "pair")


@dataclass
class Intermediates:
    lstm: np.ndarray  # (..., m, 4H)
    cnn: np.ndarray  # (..., m, F)


@dataclass
class ForwardCache:
    groups: list
    head: list
    intermediates: Intermediates
    batch: int


def _lstm_embed(seq, h):
    return np.concatenate([seq.mean(axis=0), seq[-1, :, :h], seq[0, :, h:]], axis=1)


def _lstm_embed_backward(d_emb, t_len, h):
    n = d_emb.shape[0]
    d_seq = np.empty((t_len, n, 2 * h))
    d_seq[:] = d_emb[:, : 2 * h] / t_len
    d_seq[-1, :, :h] += d_emb[:, 2 * h : 3 * h]
    d_seq[0, :, h:] += d_emb[:, 3 * h :]
    return d_seq


def _check_inputs(config: ModelConfig, lstm_in, cnn_in):
    m, t = config.channel_count, config.series_length
    if lstm_in.ndim != 4 or lstm_in.shape[1:] != (m, config.lstm_input_size, t):
        raise ValueError(f"lstm input shape {lstm_in.shape} does not fit (B, {m}, {config.lstm_input_size}, {t})")
    if cnn_in.shape != (lstm_in.shape[0], m, config.cnn_input_channels, t):
        raise ValueError(f"cnn input shape {cnn_in.shape} does not fit (B, {m}, {config.cnn_input_channels}, {t})")


def forward_batch(params: ModelParams, config: ModelConfig, lstm_in, cnn_in, train=False, rng=None):
    """Returns ``(y_hat (B, T), cache)``; ``cache.intermediates`` holds the branch embeddings."""
    lstm_in = np.asarray(lstm_in, dtype=float)
    cnn_in = np.asarray(cnn_in, dtype=float)
    _check_inputs(config, lstm_in, cnn_in)
    b_size, m, _, t_len = lstm_in.shape
    h = config.lstm_hidden_size
    rate = config.dropout_rate if train else 0.0
    lstm_emb = np.empty((b_size, m, config.lstm_embedding_size))
    cnn_emb = np.empty((b_size, m, config.cnn_embedding_size))
    group_caches = []
    for prefix, chans in branch_channels(config):
        k = len(chans)
        x = lstm_in[:, chans].reshape(b_size * k, -1, t_len).transpose(2, 0, 1)
        seq, lstm_cache = bilstm_forward_batch(np.ascontiguousarray(x), params.theta_lstm, prefix)
        mask = dropout_mask(seq.shape, rate, rng)
        if mask is not None:
            seq = seq * mask
        lstm_emb[:, chans] = _lstm_embed(seq, h).reshape(b_size, k, -1)

        a = cnn_in[:, chans].reshape(b_size * k, -1, t_len)
        conv_caches = []
        for li in range(len(config.cnn_layers)):
            K, bias = params.theta_cnn[f"{prefix}conv{li}.K"], params.theta_cnn[f"{prefix}conv{li}.b"]
            z, cc = conv1d_same_forward(a, K, bias)
            r, rc = relu_forward(z)
            a, pc = maxpool1d_forward(r, config.cnn_layers[li].pool)
            conv_caches.append((cc, rc, pc))
        cnn_emb[:, chans] = a.reshape(b_size, k, -1)
        group_caches.append((prefix, chans, lstm_cache, mask, conv_caches, a.shape))

    z = np.concatenate([lstm_emb, cnn_emb], axis=2).reshape(b_size, -1)
    head = []
    for li, act in enumerate(("relu", "relu", "linear")):
        z, hc = dense_forward(z, params.theta_nn[f"fc{li}.W"], params.theta_nn[f"fc{li}.b"], act)
        head.append(hc)
    return z, ForwardCache(group_caches, head, Intermediates(lstm_emb, cnn_emb), b_size)


def backward_batch(params: ModelParams, config: ModelConfig, cache: ForwardCache, d_yhat, d_lstm_emb=None) -> ModelParams:
    """Parameter gradients from dL/dŷ and (optionally) a direct dL/d(lstm embedding)."""
    grads = ModelParams()
    d = d_yhat
    for li in (2, 1, 0):
        W = params.theta_nn[f"fc{li}.W"]
        d, dW, db = dense_backward(d, cache.head[li], W, need_dx=True)
        grads.theta_nn[f"fc{li}.W"], grads.theta_nn[f"fc{li}.b"] = dW, db
    grads.theta_nn = {k: grads.theta_nn[k] for k in params.theta_nn}

    b_size = cache.batch
    m = config.channel_count
    e_lstm = config.lstm_embedding_size
    d = d.reshape(b_size, m, -1)
    d_lstm = d[:, :, :e_lstm]
    if d_lstm_emb is not None:
        d_lstm = d_lstm + d_lstm_emb
    d_cnn = d[:, :, e_lstm:]
    h = config.lstm_hidden_size
    t_len = config.series_length
    for prefix, chans, lstm_cache, mask, conv_caches, pooled_shape in cache.groups:
        k = len(chans)
        d_seq = _lstm_embed_backward(d_lstm[:, chans].reshape(b_size * k, -1), t_len, h)
        if mask is not None:
            d_seq *= mask
        grads.theta_lstm.update(bilstm_backward_batch(d_seq, lstm_cache, params.theta_lstm, prefix))

        da = d_cnn[:, chans].reshape(pooled_shape)
        for li in range(len(config.cnn_layers) - 1, -1, -1):
            cc, rc, pc = conv_caches[li]
            dr = maxpool1d_backward(da, pc)
            dz = relu_backward(dr, rc)
            K = params.theta_cnn[f"{prefix}conv{li}.K"]
            da, dK, db = conv1d_same_backward(dz, cc, K, need_dx=li > 0)
            grads.theta_cnn[f"{prefix}conv{li}.K"], grads.theta_cnn[f"{prefix}conv{li}.b"] = dK, db
    grads.theta_lstm = {k: grads.theta_lstm[k] for k in params.theta_lstm}
    grads.theta_cnn = {k: grads.theta_cnn[k] for k in params.theta_cnn}
    return grads


def _stack_bundles(bundles: Sequence[FeatureBundle], config: ModelConfig):
    if len(bundles) != config.channel_count:
        raise ValueError(f"expected {config.channel_count} feature bundles, got {len(bundles)}")
    lstm_in = np.stack([b.lstm_input for b in bundles])[None]
    cnn_in = np.stack([b.cnn_input for b in bundles])[None]
    return lstm_in, cnn_in


def model_forward(bundles: Sequence[FeatureBundle], params: ModelParams, config: ModelConfig, mode="eval", rng=None):
    """Single record: ``(y_hat (T,), Intermediates with (m, 4H) and (m, F))``."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    lstm_in, cnn_in = _stack_bundles(bundles, config)
    y, cache = forward_batch(params, config, lstm_in, cnn_in, train=mode == "train", rng=rng)
    inter = cache.intermediates
    return y[0], Intermediates(inter.lstm[0], inter.cnn[0])


def _group_sq_mean(group: dict) -> tuple[float, int]:
    n = sum(a.size for a in group.values())
    if n == 0:
        return 0.0, 0
    return sum(float(np.sum(a * a)) for a in group.values()) / n, n


def loss_terms(y_hat, clean, params: ModelParams, lstm_emb, weights: LossWeights):
    """Scalar loss and its breakdown.  Batched (B, T) or single (T,) records."""
    if not isinstance(weights, LossWeights):
        weights = LossWeights(**weights)
    y_hat = np.atleast_2d(np.asarray(y_hat, dtype=float))
    clean = np.atleast_2d(np.asarray(clean, dtype=float))
    if y_hat.shape != clean.shape:
        raise ValueError(f"prediction {y_hat.shape} and target {clean.shape} differ")
    emb = np.asarray(lstm_emb, dtype=float)
    if emb.ndim == 2:
        emb = emb[None]
    resid = y_hat - clean
    terms = {"data": float(np.mean(np.mean(resid * resid, axis=1)))}
    lam = (weights.lambda_lstm, weights.lambda_cnn, weights.lambda_nn)
    for name, g, lw in zip(("reg_lstm", "reg_cnn", "reg_nn"), GROUPS, lam):
        terms[name] = lw * _group_sq_mean(getattr(params, g))[0] if lw else 0.0
    pair = 0.0
    m = emb.shape[1]
    if weights.lambda_pair and m > 1:
        for i in range(m):
            for j in range(m):
                if i != j:
                    diff = emb[:, i] - emb[:, j]
                    pair += float(np.mean(diff * diff))
    terms["pair"] = weights.lambda_pair * pair
    return sum(terms[k] for k in LOSS_TERMS), terms


def loss_gradients(y_hat, clean, params: ModelParams, lstm_emb, weights: LossWeights):
    """dL/dŷ, dL/d(lstm embedding), and the regularizer gradients per group."""
    b_size, t_len = y_hat.shape
    d_yhat = 2.0 * (y_hat - clean) / (b_size * t_len)
    d_emb = None
    m = lstm_emb.shape[1]
    if weights.lambda_pair and m > 1:
        e = lstm_emb.shape[2]
        total = lstm_emb.sum(axis=1, keepdims=True)
        d_emb = (4.0 * weights.lambda_pair / (b_size * e)) * (m * lstm_emb - total)
    reg = {}
    for g, lw in zip(GROUPS, (weights.lambda_lstm, weights.lambda_cnn, weights.lambda_nn)):
        group = getattr(params, g)
        n = sum(a.size for a in group.values())
        if lw and n:
            reg[g] = {k: (2.0 * lw / n) * a for k, a in group.items()}
    return d_yhat, d_emb, reg


def loss_and_grad(params: ModelParams, config: ModelConfig, weights: LossWeights, lstm_in, cnn_in, clean, train=True, rng=None):
    y_hat, cache = forward_batch(params, config, lstm_in, cnn_in, train=train, rng=rng)
    clean = np.asarray(clean, dtype=float)
    total, terms = loss_terms(y_hat, clean, params, cache.intermediates.lstm, weights)
    d_yhat, d_emb, reg = loss_gradients(y_hat, clean, params, cache.intermediates.lstm, weights)
    grads = backward_batch(params, config, cache, d_yhat, d_emb)
    for g, extra in reg.items():
        block = getattr(grads, g)
        for k, v in extra.items():
            block[k] = block[k] + v
    return total, terms, grads, y_hat


def predict(params: ModelParams, config: ModelConfig, lstm_in, cnn_in, chunk: int = 64) -> np.ndarray:
    """Eval-mode predictions in fixed-size chunks to bound memory."""
    n = lstm_in.shape[0]
    out = np.empty((n, config.series_length))
    for s in range(0, n, chunk):
        out[s : s + chunk], _ = forward_batch(params, config, lstm_in[s : s + chunk], cnn_in[s : s + chunk])
    if not np.all(np.isfinite(out)):
        raise TrainingError("non-finite model output")
    return out
