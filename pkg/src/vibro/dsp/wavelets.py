"""Filter-bank discrete wavelet transform (Daubechies and spline biorthogonal).

Coefficient layout follows the usual convention: one level of analysis
produces ``floor((N + F - 1) / 2)`` approximation and detail coefficients
from a signal of length ``N`` extended by ``F - 1`` samples on both sides,
and synthesis returns exactly ``N`` samples.  Because the analysis sees an
explicitly extended signal, reconstruction is exact for every boundary mode.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, sqrt

import numpy as np

__all__ = [
    "BOUNDARY_MODES",
    "FilterBank",
    "WaveletCoeffs",
    "WaveletSpec",
    "daubechies_lowpass",
    "dwt",
    "dwt_level",
    "filter_bank",
    "idwt",
    "idwt_level",
    "known_families",
]

BOUNDARY_MODES = ("symmetric", "periodic", "zero")
_PAD_MODE = {"symmetric": "symmetric", "periodic": "wrap", "zero": "constant"}

# Spline biorthogonal filters as integer numerators: (dec_lo, dec_den, rec_lo, rec_den),
# each tap equal to sqrt(2) * numerator / denominator.
_BIOR_TABLE = {
    "1.1": ([1, 1], 2, [1, 1], 2),
    "1.3": ([-1, 1, 8, 8, 1, -1], 16, [0, 0, 1, 1, 0, 0], 2),
    "2.2": ([0, -1, 2, 6, 2, -1], 8, [0, 1, 2, 1, 0, 0], 4),
    "2.4": ([0, 3, -6, -16, 38, 90, 38, -16, -6, 3], 128, [0, 0, 0, 1, 2, 1, 0, 0, 0, 0], 4),
    "2.6": (
        [0, -5, 10, 34, -78, -123, 324, 700, 324, -123, -78, 34, 10, -5],
        1024,
        [0, 0, 0, 0, 0, 1, 2, 1, 0, 0, 0, 0, 0, 0],
        4,
    ),
    "3.1": ([-1, 3, 3, -1], 4, [1, 3, 3, 1], 8),
    "3.3": ([3, -9, -7, 45, 45, -7, -9, 3], 64, [0, 0, 1, 3, 3, 1, 0, 0], 8),
    "3.5": (
        [-5, 15, 19, -97, -26, 350, 350, -26, -97, 19, 15, -5],
        512,
        [0, 0, 0, 0, 1, 3, 3, 1, 0, 0, 0, 0],
        8,
    ),
}
_MAX_DB_ORDER = 10


class WaveletError(ValueError):
    pass


def known_families() -> list[str]:
    return [f"db{n}" for n in range(1, _MAX_DB_ORDER + 1)] + [f"bior{k}" for k in _BIOR_TABLE]


def _canonical_family(name: str) -> str:
    s = name.strip().lower().replace(" ", "")
    m = re.fullmatch(r"(?:db|daubechies-?)(\d+)", s)
    if m:
        order = int(m.group(1))
        if 1 <= order <= _MAX_DB_ORDER:
            return f"db{order}"
    m = re.fullmatch(r"(?:bior|biorthogonal-?)(\d\.\d)", s)
    if m and m.group(1) in _BIOR_TABLE:
        return f"bior{m.group(1)}"
    raise WaveletError(f"unknown wavelet family {name!r}; known: {', '.join(known_families())}")


@dataclass(frozen=True)
class WaveletSpec:
    family: str = "db4"
    levels: int = 1
    boundary_mode: str = "symmetric"

    def __post_init__(self):
        object.__setattr__(self, "family", _canonical_family(self.family))
        if int(self.levels) != self.levels or self.levels < 1:
            raise WaveletError(f"levels must be an integer >= 1, got {self.levels!r}")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise WaveletError(
                f"boundary_mode must be one of {BOUNDARY_MODES}, got {self.boundary_mode!r}"
            )

    @property
    def orthogonal(self) -> bool:
        return self.family.startswith("db")


@dataclass(frozen=True)
class FilterBank:
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    @property
    def length(self) -> int:
        return len(self.dec_lo)


def daubechies_lowpass(order: int) -> np.ndarray:
    """Minimum-phase Daubechies scaling filter with ``order`` vanishing moments.

    Spectral factorisation of the half-band polynomial: the roots of
    ``P(y) = sum_k C(order-1+k, k) y^k`` are mapped to the ``z`` plane via
    ``z + 1/z = 2 - 4y`` and the root inside the unit circle is kept.
    The result is normalised to sum to sqrt(2), largest taps first.
    """
    if order < 1:
        raise WaveletError("Daubechies order must be >= 1")
    poly = [comb(order - 1 + k, k) for k in range(order)]
    y_roots = np.roots(poly[::-1]) if order > 1 else np.array([])
    z_roots = []
    for y in y_roots:
        b = 2.0 - 4.0 * y
        disc = np.sqrt(b * b - 4.0 + 0j)
        r1, r2 = (b + disc) / 2.0, (b - disc) / 2.0
        z_roots.append(r1 if abs(r1) < 1.0 else r2)
    roots = np.concatenate([-np.ones(order), np.array(z_roots, dtype=complex)])
    h = np.real(np.poly(roots))
    return h * (sqrt(2.0) / h.sum())


@lru_cache(maxsize=None)
def _filter_bank_cached(family: str) -> FilterBank:
    if family.startswith("db"):
        rec_lo = daubechies_lowpass(int(family[2:]))
        dec_lo = rec_lo[::-1].copy()
    else:
        dnum, dden, rnum, rden = _BIOR_TABLE[family[4:]]
        dec_lo = sqrt(2.0) * np.array(dnum, dtype=float) / dden
        rec_lo = sqrt(2.0) * np.array(rnum, dtype=float) / rden
    k = np.arange(len(dec_lo))
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    rec_hi = sign * dec_lo
    dec_hi = -sign * rec_lo
    for arr in (dec_lo, dec_hi, rec_lo, rec_hi):
        arr.setflags(write=False)
    return FilterBank(dec_lo, dec_hi, rec_lo, rec_hi)


def filter_bank(family: str | WaveletSpec) -> FilterBank:
    name = family.family if isinstance(family, WaveletSpec) else _canonical_family(family)
    return _filter_bank_cached(name)


def _extend(x: np.ndarray, pad: int, mode: str) -> np.ndarray:
    widths = [(0, 0)] * (x.ndim - 1) + [(pad, pad)]
    return np.pad(x, widths, mode=_PAD_MODE[mode])


def dwt_level(x, bank: FilterBank, mode: str = "symmetric") -> tuple[np.ndarray, np.ndarray]:
    """Single analysis step along the last axis: returns (approx, detail)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    f = bank.length
    k_out = (n + f - 1) // 2
    xe = _extend(x, f - 1, mode)
    # coefficient k is the full convolution sampled at odd index 2k+1
    idx = 2 * np.arange(k_out)[:, None] + 1 - np.arange(f)[None, :] + (f - 1)
    windows = xe[..., idx]
    return windows @ bank.dec_lo, windows @ bank.dec_hi


def _upsample_filter(c: np.ndarray, g: np.ndarray, n_out: int) -> np.ndarray:
    f = len(g)
    k = c.shape[-1]
    up = np.zeros(c.shape[:-1] + (2 * k,))
    up[..., ::2] = c
    total = n_out + 2 * f - 2
    padded = np.zeros(c.shape[:-1] + (max(total, 2 * k + f - 1),))
    padded[..., f - 1 : f - 1 + 2 * k] = up
    idx = np.arange(n_out)[:, None] + 2 * f - 3 - np.arange(f)[None, :]
    return padded[..., idx] @ g


def idwt_level(approx, detail, bank: FilterBank, n_out: int) -> np.ndarray:
    approx = np.asarray(approx, dtype=float)
    detail = np.asarray(detail, dtype=float)
    if approx.shape != detail.shape:
        raise WaveletError(f"approx/detail shape mismatch {approx.shape} vs {detail.shape}")
    return _upsample_filter(approx, bank.rec_lo, n_out) + _upsample_filter(
        detail, bank.rec_hi, n_out
    )


@dataclass
class WaveletCoeffs:
    """Coefficient pyramid: deepest approximation plus details, coarsest first."""

    approx: np.ndarray
    details: list[np.ndarray]
    lengths: list[int]  # signal length entering each level, finest first
    spec: WaveletSpec = field(default_factory=WaveletSpec)

    def detail(self, level: int) -> np.ndarray:
        """Detail coefficients at ``level`` (1 = finest)."""
        return self.details[len(self.details) - level]


def max_levels(n: int) -> int:
    return int(np.floor(np.log2(n))) if n >= 1 else 0


def dwt(x, spec: WaveletSpec) -> WaveletCoeffs:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    bank = filter_bank(spec)
    if n < bank.length:
        raise WaveletError(f"series length {n} shorter than {spec.family} filter ({bank.length})")
    if spec.levels > max_levels(n):
        raise WaveletError(
            f"{spec.levels} levels too deep for length {n} (max {max_levels(n)})"
        )
    details = []
    lengths = []
    approx = x
    for _ in range(spec.levels):
        lengths.append(approx.shape[-1])
        approx, d = dwt_level(approx, bank, spec.boundary_mode)
        details.append(d)
    return WaveletCoeffs(approx=approx, details=details[::-1], lengths=lengths, spec=spec)


def idwt(coeffs: WaveletCoeffs, spec: WaveletSpec | None = None) -> np.ndarray:
    spec = spec or coeffs.spec
    bank = filter_bank(spec)
    approx = coeffs.approx
    for detail, n_out in zip(coeffs.details, reversed(coeffs.lengths)):
        approx = idwt_level(approx, detail, bank, n_out)
    return approx
