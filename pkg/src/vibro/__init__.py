"""Synthetic footstep-vibration corpus, classical denoisers and a hybrid neural denoiser."""

__version__ = "0.1.0"
