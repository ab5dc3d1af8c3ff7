from .features import (
    DEFAULT_WAVELET_CHANNELS,
    FeatureBundle,
    WaveletChannel,
    build_feature_bundle,
    build_features,
    fft_feature_channel,
    wavelet_channels,
)
from .fft import Spectrum, dft_forward, dft_inverse, fft, ifft
from .wavelets import WaveletCoeffs, WaveletError, WaveletSpec, dwt, filter_bank, idwt

__all__ = [
    "DEFAULT_WAVELET_CHANNELS",
    "FeatureBundle",
    "Spectrum",
    "WaveletChannel",
    "WaveletCoeffs",
    "WaveletError",
    "WaveletSpec",
    "build_feature_bundle",
    "build_features",
    "dft_forward",
    "dft_inverse",
    "dwt",
    "fft",
    "fft_feature_channel",
    "filter_bank",
    "idwt",
    "ifft",
    "wavelet_channels",
]
