"""Discrete Fourier transforms built from an iterative radix-2 kernel.

Power-of-two lengths go straight through the radix-2 decimation-in-time
kernel; any other length is handled exactly with Bluestein's chirp-z
re-indexing on top of the same kernel.  All transforms act on the last axis,
so a batch of series can be transformed in one call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Spectrum",
    "dft_forward",
    "dft_inverse",
    "fft",
    "ifft",
    "next_pow2",
]


@dataclass(frozen=True)
class Spectrum:
    bins: np.ndarray
    sample_rate: float = 1.0

    @property
    def n(self) -> int:
        return self.bins.shape[-1]

    def frequencies(self) -> np.ndarray:
        return np.arange(self.n) * self.sample_rate / self.n


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


_bitrev_cache: dict[int, np.ndarray] = {}
_twiddle_cache: dict[int, np.ndarray] = {}


def _bit_reverse(n: int) -> np.ndarray:
    perm = _bitrev_cache.get(n)
    if perm is None:
        bits = n.bit_length() - 1
        idx = np.arange(n)
        perm = np.zeros(n, dtype=np.int64)
        for b in range(bits):
            perm |= ((idx >> b) & 1) << (bits - 1 - b)
        _bitrev_cache[n] = perm
    return perm


def _twiddles(n: int) -> np.ndarray:
    # exp(-2*pi*i*k/n) for k < n/2, computed once per size
    tw = _twiddle_cache.get(n)
    if tw is None:
        k = np.arange(n // 2)
        tw = np.exp(-2j * np.pi * k / n)
        _twiddle_cache[n] = tw
    return tw


def _radix2(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time FFT along the last axis (len power of two)."""
    n = x.shape[-1]
    a = np.asarray(x, dtype=np.complex128)[..., _bit_reverse(n)]
    if n == 1:
        return a.copy()
    tw_full = _twiddles(n)
    lead = a.shape[:-1]
    size = 2
    while size <= n:
        half = size // 2
        # stride into the full table so every stage reuses one set of twiddles
        tw = tw_full[:: n // size][:half]
        blocks = a.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * tw
        a = np.concatenate([even + odd, even - odd], axis=-1).reshape(*lead, n)
        size *= 2
    return a


def _bluestein(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    k = np.arange(n)
    # k^2 mod 2n keeps the chirp phase exact for large k
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    size = next_pow2(2 * n - 1)
    a = np.zeros(x.shape[:-1] + (size,), dtype=np.complex128)
    a[..., :n] = x * chirp
    b = np.zeros(size, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[size - n + 1 :] = np.conj(chirp[1:])[::-1]
    conv = _inverse_pow2(_radix2(a) * _radix2(b))
    return conv[..., :n] * chirp


def _inverse_pow2(X: np.ndarray) -> np.ndarray:
    n = X.shape[-1]
    return np.conj(_radix2(np.conj(X))) / n


def fft(x) -> np.ndarray:
    """Complex DFT ``X[k] = sum_n x[n] exp(-2 pi i k n / N)`` along the last axis."""
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 1:
        raise ValueError("transform length must be >= 1")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    if _is_pow2(n):
        return _radix2(x)
    return _bluestein(np.asarray(x, dtype=np.complex128))


def ifft(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    n = X.shape[-1]
    return np.conj(fft(np.conj(X))) / n


def dft_forward(x, sample_rate: float = 1.0) -> Spectrum:
    return Spectrum(bins=fft(x), sample_rate=sample_rate)


def dft_inverse(spectrum: Spectrum | np.ndarray) -> np.ndarray:
    bins = spectrum.bins if isinstance(spectrum, Spectrum) else spectrum
    return ifft(bins)

