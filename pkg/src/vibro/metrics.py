"""Reconstruction-quality metrics and report aggregation.

PSNR uses the clean record's own peak, ``MAX = max|y|``.  A zero residual
yields the ``PERFECT`` sentinel (an infinite dB value); reports never write it
as a float and record how many records hit it instead.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import VibroError

PERFECT = math.inf
PERFECT_LABEL = "perfect"

REPORT_COLUMNS = (
    "method",
    "sigma_eps",
    "psnr_mean",
    "psnr_std",
    "snr_mean",
    "snr_std",
    "wmape_mean",
    "wmape_std",
    "n",
)
EXTRA_COLUMNS = ("n_perfect", "err_min", "err_q1", "err_median", "err_q3", "err_max")


class UndefinedMetricError(VibroError, ValueError):
    pass


def _pair(y_hat, y):
    y_hat = np.asarray(y_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    if y_hat.shape != y.shape:
        raise ValueError(f"shape mismatch {y_hat.shape} vs {y.shape}")
    if y.size == 0:
        raise ValueError("metrics need at least one sample")
    return y_hat, y


def is_perfect(value: float) -> bool:
    return value == PERFECT


def psnr(y_hat, y) -> float:
    y_hat, y = _pair(y_hat, y)
    mse = np.mean((y_hat - y) ** 2)
    if mse == 0:
        return PERFECT
    peak = np.max(np.abs(y))
    if peak == 0:
        raise UndefinedMetricError("PSNR undefined for an all-zero clean reference")
    return float(10.0 * np.log10(peak * peak / mse))


def snr(y_hat, y) -> float:
    y_hat, y = _pair(y_hat, y)
    power = np.sum(y * y)
    if power == 0:
        raise UndefinedMetricError("SNR undefined for zero clean-signal power")
    resid = np.sum((y_hat - y) ** 2)
    if resid == 0:
        return PERFECT
    return float(10.0 * np.log10(power / resid))


def wmape(y_hat, y) -> float:
    y_hat, y = _pair(y_hat, y)
    weight = np.sum(np.abs(y))
    if weight == 0:
        raise UndefinedMetricError("WMAPE undefined for an all-zero clean signal")
    return float(100.0 * np.sum(np.abs(y_hat - y)) / weight)


class ErrorStats(NamedTuple):
    min: float
    q1: float
    median: float
    q3: float
    max: float


def error_stats(y_hat, y) -> ErrorStats:
    y_hat, y = _pair(y_hat, y)
    err = (y_hat - y).ravel()
    # type-7 (linear interpolation) quantiles
    q = np.quantile(err, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return ErrorStats(*(float(v) for v in q))


def record_metrics(y_hat, y) -> dict:
    return {"psnr": psnr(y_hat, y), "snr": snr(y_hat, y), "wmape": wmape(y_hat, y)}


def _mean_std(values: np.ndarray) -> tuple[float | str, float | str, int]:
    finite = values[np.isfinite(values)]
    n_perfect = int(np.sum(values == PERFECT))
    if finite.size == 0:
        return PERFECT_LABEL, PERFECT_LABEL, n_perfect
    return float(np.mean(finite)), float(np.std(finite)), n_perfect


@dataclass
class MethodSummary:
    method: str
    sigma_eps: float
    psnr_mean: float | str
    psnr_std: float | str
    snr_mean: float | str
    snr_std: float | str
    wmape_mean: float
    wmape_std: float
    n: int
    n_perfect: int = 0
    err_min: float = 0.0
    err_q1: float = 0.0
    err_median: float = 0.0
    err_q3: float = 0.0
    err_max: float = 0.0


def summarize(method: str, sigma_eps: float, y_hat: np.ndarray, y: np.ndarray) -> MethodSummary:
    """Aggregate per-record metrics of a stack ``(N, T)`` in record order."""
    y_hat = np.atleast_2d(np.asarray(y_hat, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    per = [record_metrics(a, b) for a, b in zip(y_hat, y)]
    ps = np.array([p["psnr"] for p in per])
    sn = np.array([p["snr"] for p in per])
    wm = np.array([p["wmape"] for p in per])
    pm, pstd, n_perf = _mean_std(ps)
    sm, sstd, _ = _mean_std(sn)
    stats = error_stats(y_hat, y)
    return MethodSummary(
        method=method,
        sigma_eps=float(sigma_eps),
        psnr_mean=pm,
        psnr_std=pstd,
        snr_mean=sm,
        snr_std=sstd,
        wmape_mean=float(np.mean(wm)),
        wmape_std=float(np.std(wm)),
        n=len(per),
        n_perfect=n_perf,
        err_min=stats.min,
        err_q1=stats.q1,
        err_median=stats.median,
        err_q3=stats.q3,
        err_max=stats.max,
    )


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if is_perfect(v):
        return PERFECT_LABEL
    return f"{float(v):.10g}"


@dataclass
class EvalReport:
    rows: list[MethodSummary] = field(default_factory=list)

    def add(self, row: MethodSummary) -> None:
        self.rows.append(row)

    def get(self, method: str, sigma_eps: float) -> MethodSummary:
        for r in self.rows:
            if r.method == method and math.isclose(r.sigma_eps, sigma_eps, abs_tol=1e-12):
                return r
        raise KeyError((method, sigma_eps))

    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.rows))

    def noise_levels(self) -> list[float]:
        return list(dict.fromkeys(r.sigma_eps for r in self.rows))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = REPORT_COLUMNS + EXTRA_COLUMNS
        w.writerow(cols)
        for r in self.rows:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for r in self.rows:
            d = asdict(r)
            rows.append({k: (PERFECT_LABEL if isinstance(v, float) and is_perfect(v) else v) for k, v in d.items()})
        return json.dumps({"columns": list(REPORT_COLUMNS + EXTRA_COLUMNS), "rows": rows}, indent=2) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "EvalReport":
        def num(s):
            if s == PERFECT_LABEL:
                return s
            return float(s)

        rows = []
        for d in csv.DictReader(io.StringIO(text)):
            rows.append(
                MethodSummary(
                    method=d["method"],
                    sigma_eps=float(d["sigma_eps"]),
                    psnr_mean=num(d["psnr_mean"]),
                    psnr_std=num(d["psnr_std"]),
                    snr_mean=num(d["snr_mean"]),
                    snr_std=num(d["snr_std"]),
                    wmape_mean=float(d["wmape_mean"]),
                    wmape_std=float(d["wmape_std"]),
                    n=int(d["n"]),
                    **{k: (int(d[k]) if k == "n_perfect" else float(d[k])) for k in EXTRA_COLUMNS if k in d},
                )
            )
        return cls(rows)


def scatter_rows(method: str, sigma_eps: float, noisy: np.ndarray, denoised: np.ndarray, clean: np.ndarray) -> Iterable[list]:
    """Per-record (noisy metric, denoised metric) pairs for scatter plots."""
    for i, (x, d, y) in enumerate(zip(noisy, denoised, clean)):
        yield [
            method,
            _fmt(sigma_eps),
            i,
            _fmt(psnr(x, y)),
            _fmt(psnr(d, y)),
            _fmt(wmape(x, y)),
            _fmt(wmape(d, y)),
        ]


SCATTER_COLUMNS = ("method", "sigma_eps", "record", "noisy_psnr", "denoised_psnr", "noisy_wmape", "denoised_wmape")
