"""Forward/backward pairs for the feed-forward building blocks.

Each ``*_forward`` returns ``(output, cache)`` and the matching
``*_backward`` maps an upstream gradient plus that cache to gradients of the
inputs and parameters.  Arrays are float64 throughout.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def dense_forward(x, W, b, activation="linear"):
    """``act(x @ W + b)`` for a batch ``x`` of shape (N, D_in), ``W`` (D_in, D_out)."""
    if x.shape[-1] != W.shape[0] or W.shape[1] != b.shape[0]:
        raise ValueError(f"dense shape mismatch: x{x.shape} W{W.shape} b{b.shape}")
    z = x @ W + b
    if activation == "relu":
        y = np.maximum(z, 0.0)
    elif activation == "linear":
        y = z
    else:
        raise ValueError(f"unknown activation {activation!r}")
    return y, (x, z, activation)


def dense_backward(dy, cache, W, need_dx=True):
    x, z, activation = cache
    dz = dy * (z > 0) if activation == "relu" else dy
    dW = x.T @ dz
    db = dz.sum(axis=0)
    dx = dz @ W.T if need_dx else None
    return dx, dW, db


def relu_forward(x):
    return np.maximum(x, 0.0), x


def relu_backward(dy, x):
    return dy * (x > 0)


def conv1d_same_forward(x, K, b):
    """Zero-padded cross-correlation keeping length: x (N, C_in, T), K (C_out, C_in, k)."""
    n, c_in, t = x.shape
    c_out, kc_in, k = K.shape
    if kc_in != c_in or b.shape != (c_out,):
        raise ValueError(f"conv shape mismatch: x{x.shape} K{K.shape} b{b.shape}")
    if k % 2 == 0:
        raise ValueError("same-padding convolution needs an odd kernel width")
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    cols = sliding_window_view(xp, k, axis=2)  # (N, C_in, T, k)
    cols = cols.transpose(0, 2, 1, 3).reshape(n * t, c_in * k)
    out = cols @ K.reshape(c_out, c_in * k).T + b
    return out.reshape(n, t, c_out).transpose(0, 2, 1), (cols, x.shape)


def conv1d_same_backward(dy, cache, K, need_dx=True):
    cols, (n, c_in, t) = cache
    c_out, _, k = K.shape
    d_out = dy.transpose(0, 2, 1).reshape(n * t, c_out)
    dK = (d_out.T @ cols).reshape(K.shape)
    db = d_out.sum(axis=0)
    if not need_dx:
        return None, dK, db
    pad = k // 2
    dcols = (d_out @ K.reshape(c_out, c_in * k)).reshape(n, t, c_in, k)
    dxp = np.zeros((n, c_in, t + 2 * pad))
    for j in range(k):
        dxp[:, :, j : j + t] += dcols[:, :, :, j].transpose(0, 2, 1)
    return dxp[:, :, pad : pad + t], dK, db


def pooled_length(t: int, width: int) -> int:
    return -(-t // width)


def maxpool1d_forward(x, width: int):
    """Non-overlapping max over windows of ``width``; a short final window is kept."""
    if width < 1:
        raise ValueError("pool width must be >= 1")
    n, c, t = x.shape
    length = pooled_length(t, width)
    if length * width != t:
        x = np.concatenate([x, np.full((n, c, length * width - t), -np.inf)], axis=2)
    blocks = x.reshape(n, c, length, width)
    idx = np.argmax(blocks, axis=-1)  # first index on ties
    out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    return out, (idx, t, width)


def maxpool1d_backward(dy, cache):
    idx, t, width = cache
    n, c, length = dy.shape
    dblocks = np.zeros((n, c, length, width))
    np.put_along_axis(dblocks, idx[..., None], dy[..., None], axis=-1)
    return dblocks.reshape(n, c, length * width)[:, :, :t]


def dropout_mask(shape, rate: float, rng: np.random.Generator | None):
    """Inverted-dropout multiplier, or ``None`` when dropout is inactive."""
    if rate <= 0.0:
        return None
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)
