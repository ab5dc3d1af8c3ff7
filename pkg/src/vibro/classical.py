"""Classical 1-D denoisers used as benchmark baselines.

All functions act on the last axis, so a stack of records ``(N, T)`` is
denoised in one call with per-row results identical to row-by-row calls.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dsp.wavelets import WaveletSpec, dwt, idwt

METHODS = ("savgol", "wiener", "tv", "wavelet_shrinkage")


# ---------------------------------------------------------------------------
# Savitzky-Golay


def _check_window(window: int, name="window"):
    if int(window) != window or window < 1 or window % 2 == 0:
        raise ValueError(f"{name} must be an odd positive integer, got {window!r}")


def savgol_matrices(window: int, polyorder: int):
    """Least-squares fit operators for a centred window.

    Returns ``(fit, vander)`` where ``fit @ x_window`` gives polynomial
    coefficients in powers of the offset from the window centre.
    """
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    vander = offsets[:, None] ** np.arange(polyorder + 1)[None, :]
    fit = np.linalg.pinv(vander)
    return fit, vander


def savgol_kernel(window: int, polyorder: int) -> np.ndarray:
    """Weights applied to ``x[n-h..n+h]`` to give the smoothed centre value."""
    fit, _ = savgol_matrices(window, polyorder)
    return fit[0]


def savgol_denoise(x, window: int = 11, polyorder: int = 3) -> np.ndarray:
    _check_window(window)
    if not 0 <= polyorder < window:
        raise ValueError(f"polyorder must satisfy 0 <= polyorder < window, got {polyorder}")
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < window:
        raise ValueError(f"series length {n} shorter than window {window}")
    half = window // 2
    fit, _ = savgol_matrices(window, polyorder)
    y = np.empty_like(x)
    y[..., half : n - half] = sliding_window_view(x, window, axis=-1) @ fit[0]
    if half:
        # edges: evaluate the polynomial fitted to the nearest full window
        powers = np.arange(polyorder + 1)
        left_t = np.arange(-half, 0, dtype=float)
        right_t = np.arange(1, half + 1, dtype=float)
        left = (left_t[:, None] ** powers) @ fit
        right = (right_t[:, None] ** powers) @ fit
        y[..., :half] = x[..., :window] @ left.T
        y[..., n - half :] = x[..., n - window :] @ right.T
    return y


# ---------------------------------------------------------------------------
# Wiener


def _local_moments(x: np.ndarray, window: int):
    half = window // 2
    pad = [(0, 0)] * (x.ndim - 1) + [(half, half)]
    xp = np.pad(x, pad, mode="symmetric")
    win = sliding_window_view(xp, window, axis=-1)
    mean = win.mean(axis=-1)
    var = np.maximum((win * win).mean(axis=-1) - mean * mean, 0.0)
    return mean, var


def wiener_denoise(x, window: int = 11, noise_var: float | None = None) -> np.ndarray:
    """Adaptive local-statistics Wiener filter.

    ``y = mu + max(s2 - nu2, 0) / max(s2, nu2) * (x - mu)`` with local mean
    ``mu`` and variance ``s2`` over the window; ``nu2`` defaults to the mean
    local variance of each series.
    """
    _check_window(window)
    if window < 3:
        raise ValueError("wiener window must be >= 3")
    x = np.asarray(x, dtype=float)
    mean, var = _local_moments(x, window)
    if noise_var is None:
        nu2 = var.mean(axis=-1, keepdims=True)
    else:
        if noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        nu2 = np.full(x.shape[:-1] + (1,), float(noise_var))
    denom = np.maximum(var, nu2)
    safe = np.where(denom > 0, denom, 1.0)
    gain = np.where(denom > 0, np.maximum(var - nu2, 0.0) / safe, 1.0)
    # written as x - (1 - gain)(x - mu) so unit gain returns x exactly
    return x - (1.0 - gain) * (x - mean)


# ---------------------------------------------------------------------------
# total variation


def tv_objective(y, x, weight: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return 0.5 * np.sum((y - x) ** 2, axis=-1) + weight * np.sum(np.abs(np.diff(y, axis=-1)), axis=-1)


def total_variation(y) -> np.ndarray:
    return np.sum(np.abs(np.diff(np.asarray(y, dtype=float), axis=-1)), axis=-1)


class TVResult(NamedTuple):
    y: np.ndarray
    converged: np.ndarray  # bool per series
    iterations: np.ndarray  # per series
    objective: list  # objective per iteration when tracked, else []


def _dt(p: np.ndarray) -> np.ndarray:
    """Adjoint of the forward difference: (D^T p)[n] = p[n-1] - p[n]."""
    out = np.zeros(p.shape[:-1] + (p.shape[-1] + 1,))
    out[..., :-1] -= p
    out[..., 1:] += p
    return out


def tv_solve(
    x,
    weight: float,
    max_iter: int = 2000,
    tol: float = 1e-6,
    step: float = 0.25,
    track_objective: bool = False,
) -> TVResult:
    """Minimise ``0.5||y - x||^2 + weight * sum|y[n+1] - y[n]|`` by dual projection.

    The dual variable ``p`` (one per difference, ``|p| <= 1``) takes
    accelerated projected-gradient steps on ``0.5||x - weight D^T p||^2``;
    the primal candidate is ``y = x - weight D^T p``.  The primal iterate
    kept is the best candidate seen so far (starting from ``x``), so the
    objective never increases.  ``step`` must not exceed 1/4 = 1/||D||^2.
    Series stop individually once ``weight * max|p_new - p|`` drops below ``tol``.
    """
    if weight < 0:
        raise ValueError("TV weight must be >= 0")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not 0 < step <= 0.25:
        raise ValueError("step must lie in (0, 0.25]")
    x = np.asarray(x, dtype=float)
    lead = x.shape[:-1]
    if weight == 0 or x.shape[-1] < 2:
        return TVResult(x.copy(), np.ones(lead, bool), np.zeros(lead, int), [])
    flat = x.reshape(-1, x.shape[-1])
    rows = flat.shape[0]
    best = flat.copy()
    best_obj = tv_objective(best, flat, weight)
    converged = np.zeros(rows, dtype=bool)
    iters = np.zeros(rows, dtype=int)
    history = []
    scale = step / weight
    t = 1.0
    # working set: rows still iterating, compacted whenever some finish
    live = np.arange(rows)
    xa = flat.copy()
    pa = np.zeros((rows, flat.shape[1] - 1))
    ra = pa.copy()
    ya = best.copy()
    oa = best_obj.copy()
    for it in range(1, max_iter + 1):
        p_new = ra + scale * np.diff(xa - weight * _dt(ra), axis=-1)
        np.clip(p_new, -1.0, 1.0, out=p_new)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        step_p = p_new - pa
        ra = p_new + ((t - 1.0) / t_new) * step_p
        t = t_new
        pa = p_new
        # dual change in signal units, so the stopping rule does not depend on the weight
        delta = weight * np.max(np.abs(step_p), axis=-1)
        cand = xa - weight * _dt(p_new)
        obj = tv_objective(cand, xa, weight)
        better = obj < oa
        ya[better] = cand[better]
        oa[better] = obj[better]
        if track_objective:
            best[live] = ya
            best_obj[live] = oa
            history.append(best_obj.reshape(lead).copy())
        done = delta < tol
        if done.any() or it == max_iter:
            fin = live if it == max_iter else live[done]
            sel = slice(None) if it == max_iter else done
            best[fin] = ya[sel]
            best_obj[fin] = oa[sel]
            iters[fin] = it
            converged[live[done]] = True
            keep = ~done
            live, xa, pa, ra, ya, oa = live[keep], xa[keep], pa[keep], ra[keep], ya[keep], oa[keep]
            if live.size == 0:
                break
    return TVResult(best.reshape(x.shape), converged.reshape(lead), iters.reshape(lead), history)


def tv_denoise(x, weight: float = 0.2, max_iter: int = 2000, tol: float = 1e-6) -> np.ndarray:
    return tv_solve(x, weight, max_iter=max_iter, tol=tol).y


# ---------------------------------------------------------------------------
# wavelet shrinkage

_MAD_SCALE = 0.6745


def soft_threshold(c: np.ndarray, t) -> np.ndarray:
    return np.sign(c) * np.maximum(np.abs(c) - t, 0.0)


def hard_threshold(c: np.ndarray, t) -> np.ndarray:
    return np.where(np.abs(c) > t, c, 0.0)


def universal_threshold(finest_detail: np.ndarray, n: int) -> np.ndarray:
    sigma = np.median(np.abs(finest_detail), axis=-1, keepdims=True) / _MAD_SCALE
    return sigma * math.sqrt(2.0 * math.log(n))


def wavelet_shrinkage_denoise(
    x,
    spec: WaveletSpec | None = None,
    rule: str = "soft",
    threshold: str | float = "universal",
) -> np.ndarray:
    spec = spec or WaveletSpec("db4", 3)
    if rule not in ("soft", "hard"):
        raise ValueError(f"rule must be 'soft' or 'hard', got {rule!r}")
    x = np.asarray(x, dtype=float)
    coeffs = dwt(x, spec)
    if threshold == "universal":
        t = universal_threshold(coeffs.detail(1), x.shape[-1])
    else:
        t = float(threshold)
        if t < 0:
            raise ValueError("threshold must be >= 0")
    if isinstance(t, float) and t == 0:
        return idwt(coeffs)
    shrink = soft_threshold if rule == "soft" else hard_threshold
    coeffs.details = [shrink(d, t) for d in coeffs.details]
    return idwt(coeffs)


# ---------------------------------------------------------------------------
# configuration and dispatch


@dataclass(frozen=True)
class BaselineConfig:
    method: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown baseline {self.method!r}; valid: {', '.join(METHODS)}")
        p = self.params
        if self.method == "savgol":
            w, po = p.get("window", 11), p.get("polyorder", 3)
            _check_window(w)
            if not 0 <= po < w:
                raise ValueError("savgol needs 0 <= polyorder < window")
        elif self.method == "wiener":
            _check_window(p.get("window", 11))
        elif self.method == "tv":
            if p.get("weight", 0.2) < 0:
                raise ValueError("TV weight must be >= 0")
            if p.get("max_iter", 2000) < 1:
                raise ValueError("iterations must be >= 1")

    def label(self) -> str:
        return self.method + "(" + ",".join(f"{k}={v}" for k, v in sorted(self.params.items())) + ")"


def apply_baseline(x, config: BaselineConfig) -> np.ndarray:
    p = dict(config.params)
    if config.method == "savgol":
        return savgol_denoise(x, p.get("window", 11), p.get("polyorder", 3))
    if config.method == "wiener":
        return wiener_denoise(x, p.get("window", 11), p.get("noise_var"))
    if config.method == "tv":
        return tv_denoise(x, p.get("weight", 0.2), p.get("max_iter", 2000), p.get("tol", 1e-6))
    spec = WaveletSpec(p.get("wavelet", "db4"), p.get("levels", 3), p.get("boundary_mode", "symmetric"))
    return wavelet_shrinkage_denoise(x, spec, p.get("rule", "soft"), p.get("threshold", "universal"))


DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "savgol": {"window": [5, 9, 13, 17, 21, 25, 31, 41, 51, 61], "polyorder": [2, 3, 4]},
    "wiener": {"window": [3, 5, 7, 11, 15, 21, 31]},
    "tv": {"weight": [0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0]},
    "wavelet_shrinkage": {
        "wavelet": ["db4", "db8", "bior2.2", "bior3.5"],
        "levels": [3, 5],
        "rule": ["soft", "hard"],
    },
}


def expand_grid(method: str, grid: dict[str, list] | None = None) -> list[BaselineConfig]:
    grid = DEFAULT_GRIDS[method] if grid is None else grid
    keys = sorted(grid)
    out = []
    for values in itertools.product(*(grid[k] for k in keys)):
        params = dict(zip(keys, values))
        try:
            out.append(BaselineConfig(method, params))
        except ValueError:
            continue  # e.g. polyorder >= window
    return out
