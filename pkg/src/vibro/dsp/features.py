"""Per-signal feature bundles for the two model branches.

The recurrent branch sees a 2-channel sequence: the raw signal and its
magnitude spectrum resampled onto the same time grid.  The convolutional
branch sees three wavelet-domain channels held back up to full length.
Everything here works on the last axis, so stacks of signals are processed
in one call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fft import fft
from .wavelets import WaveletSpec, dwt

__all__ = [
    "FeatureBundle",
    "WaveletChannel",
    "DEFAULT_WAVELET_CHANNELS",
    "build_feature_bundle",
    "build_features",
    "fft_feature_channel",
    "hold_upsample",
    "wavelet_channels",
]


@dataclass(frozen=True)
class WaveletChannel:
    spec: WaveletSpec
    band: str = "detail"  # "detail" -> finest detail, "approx" -> deepest approximation

    def __post_init__(self):
        if self.band not in ("detail", "approx"):
            raise ValueError(f"band must be 'detail' or 'approx', got {self.band!r}")


DEFAULT_WAVELET_CHANNELS = (
    WaveletChannel(WaveletSpec("db4", 1), "detail"),
    WaveletChannel(WaveletSpec("bior2.2", 1), "detail"),
    WaveletChannel(WaveletSpec("db4", 2), "approx"),
)


@dataclass(frozen=True)
class FeatureBundle:
    lstm_input: np.ndarray  # (2, T)
    cnn_input: np.ndarray  # (3, T)

    @property
    def length(self) -> int:
        return self.lstm_input.shape[-1]


def _resample_linear(y: np.ndarray, n_out: int) -> np.ndarray:
    n_in = y.shape[-1]
    if n_in == 1:
        return np.repeat(y, n_out, axis=-1)
    pos = np.linspace(0.0, n_in - 1, n_out)
    i0 = np.minimum(np.floor(pos).astype(np.int64), n_in - 2)
    frac = pos - i0
    return y[..., i0] * (1.0 - frac) + y[..., i0 + 1] * frac


def fft_feature_channel(x) -> np.ndarray:
    """Magnitude spectrum of bins ``0..T//2`` resampled to ``T`` points, peak 1.

    Uses the exact length-``T`` DFT, so circular shifts of ``x`` leave the
    channel unchanged.  An all-zero input gives an all-zero channel.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 2:
        raise ValueError("fft feature channel needs T >= 2")
    mag = np.abs(fft(x)[..., : n // 2 + 1])
    chan = _resample_linear(mag, n)
    peak = chan.max(axis=-1, keepdims=True)
    safe = np.where(peak > 0.0, peak, 1.0)
    return np.where(peak > 0.0, chan / safe, 0.0)


def hold_upsample(c: np.ndarray, factor: int, n_out: int) -> np.ndarray:
    out = np.repeat(c, factor, axis=-1)
    if out.shape[-1] < n_out:
        # only reachable for very short inputs; extend by holding the last value
        tail = np.repeat(out[..., -1:], n_out - out.shape[-1], axis=-1)
        out = np.concatenate([out, tail], axis=-1)
    return out[..., :n_out]


def wavelet_channels(x, channels=DEFAULT_WAVELET_CHANNELS) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 8:
        raise ValueError("wavelet channels need T >= 8")
    out = []
    for ch in channels:
        coeffs = dwt(x, ch.spec)
        if ch.band == "detail":
            out.append(hold_upsample(coeffs.detail(1), 2, n))
        else:
            out.append(hold_upsample(coeffs.approx, 2**ch.spec.levels, n))
    return np.stack(out, axis=-2)


def build_features(x, channels=DEFAULT_WAVELET_CHANNELS) -> tuple[np.ndarray, np.ndarray]:
    """Batch form: ``x`` of shape (..., T) -> ((..., 2, T), (..., 3, T))."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite values")
    lstm_in = np.stack([x, fft_feature_channel(x)], axis=-2)
    return lstm_in, wavelet_channels(x, channels)


def build_feature_bundle(x, channels=DEFAULT_WAVELET_CHANNELS) -> FeatureBundle:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("build_feature_bundle takes a single 1-D series; use build_features")
    lstm_in, cnn_in = build_features(x, channels)
    return FeatureBundle(lstm_input=lstm_in, cnn_input=cnn_in)
