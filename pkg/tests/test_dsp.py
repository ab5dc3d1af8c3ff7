import math
import sys

import hypothesis.extra.numpy as nph
import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from oracles import naive_dft, naive_dft_matrix
import vibro.dsp.fft  # noqa: F401
from vibro.dsp.features import (
    DEFAULT_WAVELET_CHANNELS,
    build_feature_bundle,
    build_features,
    fft_feature_channel,
    wavelet_channels,
)
from vibro.dsp.wavelets import (
    WaveletError,
    WaveletSpec,
    dwt,
    filter_bank,
    idwt,
    known_families,
    max_levels,
)

fftmod = sys.modules["vibro.dsp.fft"]
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def series(min_size=1, max_size=200):
    return nph.arrays(np.float64, st.integers(min_size, max_size), elements=finite)


# --- DFT ---------------------------------------------------------------------


def test_dft_constant_and_impulse():
    np.testing.assert_allclose(fftmod.fft([1.0, 1, 1, 1]), [4, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(fftmod.fft([1.0, 0, 0, 0]), np.ones(4), atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7, 8, 12, 17, 64, 100])
def test_dft_matches_naive_sum(n):
    x = np.random.default_rng(n).normal(size=n)
    np.testing.assert_allclose(fftmod.fft(x), naive_dft(x), atol=1e-9, rtol=0)


def test_dft_length64_roundtrip_and_oracle():
    x = np.random.default_rng(64).normal(size=64)
    spec = fftmod.dft_forward(x, sample_rate=200.0)
    assert spec.n == 64 and spec.frequencies()[1] == pytest.approx(200.0 / 64)
    np.testing.assert_allclose(fftmod.dft_inverse(spec).real, x, atol=1e-9)
    np.testing.assert_allclose(spec.bins, naive_dft(x), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(series(1, 300))
def test_parseval(x):
    X = fftmod.fft(x)
    lhs = np.sum(x * x)
    rhs = np.sum(np.abs(X) ** 2) / len(x)
    assert math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=60, deadline=None)
@given(series(2, 130), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_dft_linearity(x, a, b, seed):
    y = np.random.default_rng(seed).normal(size=len(x))
    lhs = fftmod.fft(a * x + b * y)
    rhs = a * fftmod.fft(x) + b * fftmod.fft(y)
    scale = max(1.0, np.max(np.abs(lhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale


@settings(max_examples=40, deadline=None)
@given(series(1, 257))
def test_inverse_roundtrip(x):
    back = fftmod.ifft(fftmod.fft(x))
    assert np.max(np.abs(back - x)) <= 1e-9 * max(1.0, np.max(np.abs(x)))


def test_batched_transform_matches_rows():
    x = np.random.default_rng(1).normal(size=(3, 4, 50))
    whole = fftmod.fft(x)
    for idx in np.ndindex(3, 4):
        np.testing.assert_array_equal(whole[idx], fftmod.fft(x[idx]))


def test_dft_rejects_nonfinite_and_empty():
    with pytest.raises(ValueError):
        fftmod.fft([1.0, np.nan])
    with pytest.raises(ValueError):
        fftmod.fft(np.zeros(0))


def test_dft_is_pure():
    x = np.random.default_rng(2).normal(size=500)
    a = fftmod.fft(x)
    b = fftmod.fft(x.copy())
    assert a.tobytes() == b.tobytes()


# --- wavelets ----------------------------------------------------------------


def test_haar_constant():
    c = dwt(np.ones(4), WaveletSpec("db1", 1, "periodic"))
    np.testing.assert_allclose(c.approx, [math.sqrt(2), math.sqrt(2)], atol=1e-12)
    np.testing.assert_allclose(c.detail(1), [0, 0], atol=1e-12)


def test_family_aliases():
    assert WaveletSpec("Daubechies-4").family == "db4"
    assert WaveletSpec("Biorthogonal-2.2").family == "bior2.2"
    with pytest.raises(WaveletError):
        WaveletSpec("sym4")
    with pytest.raises(WaveletError):
        WaveletSpec("db4", levels=0)
    with pytest.raises(WaveletError):
        WaveletSpec("db4", boundary_mode="reflect101")


@pytest.mark.parametrize("family", known_families())
def test_filter_bank_conditions(family):
    bank = filter_bank(family)
    assert bank.dec_lo.sum() == pytest.approx(math.sqrt(2), abs=1e-12)
    assert bank.rec_lo.sum() == pytest.approx(math.sqrt(2), abs=1e-12)
    # lowpass rejects Nyquist, highpass rejects DC
    alt = (-1.0) ** np.arange(bank.length)
    assert abs(bank.dec_lo @ alt) < 1e-12
    assert abs(bank.dec_hi.sum()) < 1e-12
    if family.startswith("db"):
        # orthonormal: even shifts of the lowpass are orthogonal
        h = bank.dec_lo
        for s in range(0, len(h), 2):
            dot = h[s:] @ h[: len(h) - s]
            assert dot == pytest.approx(1.0 if s == 0 else 0.0, abs=1e-10)


def test_db4_roundtrip_length256():
    x = np.random.default_rng(256).normal(size=256)
    spec = WaveletSpec("Daubechies-4", 3)
    assert np.max(np.abs(idwt(dwt(x, spec)) - x)) <= 1e-8


def test_db2_kills_linear_ramp():
    x = np.arange(64, dtype=float) * 0.3 + 2.0
    d = dwt(x, WaveletSpec("db2", 1)).detail(1)
    f = filter_bank("db2").length
    assert np.max(np.abs(d[f : len(d) - f])) <= 1e-10


@pytest.mark.parametrize("family", known_families())
@pytest.mark.parametrize("mode", ["symmetric", "periodic", "zero"])
def test_perfect_reconstruction_every_family(family, mode):
    rng = np.random.default_rng(abs(hash((family, mode))) % 2**32)
    tol = 1e-8 if family.startswith("db") else 1e-6
    for n in (33, 128, 500):
        x = rng.normal(size=n)
        for levels in sorted({1, 2, max_levels(n)}):
            spec = WaveletSpec(family, levels, mode)
            if n < filter_bank(family).length:
                continue
            err = np.max(np.abs(idwt(dwt(x, spec)) - x))
            assert err <= tol, (family, mode, n, levels, err)


def test_level_too_deep_and_short_input():
    with pytest.raises(WaveletError):
        dwt(np.zeros(16), WaveletSpec("db1", 5))
    with pytest.raises(WaveletError):
        dwt(np.zeros(6), WaveletSpec("db4", 1))


def test_matches_pywavelets_reference():
    pywt = pytest.importorskip("pywt")
    rng = np.random.default_rng(7)
    x = rng.normal(size=137)
    modes = {"symmetric": "symmetric", "periodic": "periodization", "zero": "zero"}
    for family in ("db1", "db4", "db8", "bior2.2", "bior3.5"):
        for mode in ("symmetric", "zero"):
            ours = dwt(x, WaveletSpec(family, 2, mode))
            ref = pywt.wavedec(x, family, mode=modes[mode], level=2)
            np.testing.assert_allclose(ours.approx, ref[0], atol=1e-10)
            for a, b in zip(ours.details, ref[1:]):
                np.testing.assert_allclose(a, b, atol=1e-10)


# --- features ----------------------------------------------------------------


def test_fft_channel_single_tone():
    t = np.arange(500)
    ch = fft_feature_channel(np.sin(2 * np.pi * 5 * t / 500))
    assert ch.max() == pytest.approx(1.0)
    peak = np.argmax(ch)
    # bin 5 of 251 bins lands near position 5 * 499 / 250 after resampling
    assert abs(peak - 5 * 499 / 250) <= 1
    assert np.sum(ch > 0.5) <= 3


def test_fft_channel_zero():
    np.testing.assert_array_equal(fft_feature_channel(np.zeros(500)), np.zeros(500))


def test_fft_channel_two_tone_ratio():
    n = 513  # odd length: bin k lands exactly on sample 2k after resampling
    t = np.arange(n)
    x = np.sin(2 * np.pi * 20 * t / n) + 0.5 * np.sin(2 * np.pi * 60 * t / n)
    mag = np.abs(naive_dft_matrix(x))[: n // 2 + 1]
    ch = fft_feature_channel(x)
    p1, p2 = ch[:80].max(), ch[80:].max()
    assert ch[40] == p1 and ch[120] == p2
    assert p1 / p2 == pytest.approx(mag[20] / mag[60], rel=0.05)
    assert p1 / p2 == pytest.approx(2.0, rel=0.05)


@settings(max_examples=30, deadline=None)
@given(series(8, 200), st.integers(0, 1000))
def test_fft_channel_circular_shift(x, k):
    a = fft_feature_channel(x)
    b = fft_feature_channel(np.roll(x, k))
    assert np.max(np.abs(a - b)) <= 1e-9


def test_wavelet_channels_shapes_and_zero():
    assert wavelet_channels(np.zeros(500)).shape == (3, 500)
    np.testing.assert_array_equal(wavelet_channels(np.zeros(500)), 0.0)
    with pytest.raises(ValueError):
        wavelet_channels(np.zeros(7))


def test_wavelet_channels_constant():
    ch = wavelet_channels(np.full(200, 2.5))
    approx_spec = DEFAULT_WAVELET_CHANNELS[2].spec
    edge = 2 ** approx_spec.levels * filter_bank(approx_spec).length
    assert np.max(np.abs(ch[:2])) <= 1e-10
    interior = ch[2, edge:-edge]
    np.testing.assert_allclose(interior, interior[0], atol=1e-10)
    assert interior[0] == pytest.approx(2.5 * math.sqrt(2) ** approx_spec.levels)


def test_feature_bundle_contract():
    x = np.random.default_rng(3).normal(size=500)
    b = build_feature_bundle(x)
    assert b.lstm_input.shape == (2, 500) and b.cnn_input.shape == (3, 500)
    np.testing.assert_array_equal(b.lstm_input[0], x)
    z = build_feature_bundle(np.zeros(500))
    assert not z.lstm_input.any() and not z.cnn_input.any()
    with pytest.raises(ValueError):
        build_feature_bundle(np.array([1.0, np.inf] * 10))


def test_batch_features_match_single():
    x = np.random.default_rng(4).normal(size=(3, 2, 64))
    lstm_in, cnn_in = build_features(x)
    for i in range(3):
        for j in range(2):
            b = build_feature_bundle(x[i, j])
            np.testing.assert_allclose(lstm_in[i, j], b.lstm_input, atol=1e-12)
            np.testing.assert_allclose(cnn_in[i, j], b.cnn_input, atol=1e-12)
