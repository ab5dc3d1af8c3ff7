"""generate -> train -> denoise/compare, each step writing files into a run directory."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .._parallel import ordered_map
from ..classical import METHODS, BaselineConfig, apply_baseline, expand_grid
from ..dsp.features import build_features
from ..errors import ConfigError
from ..metrics import SCATTER_COLUMNS, EvalReport, psnr, scatter_rows, summarize
from ..neural.checkpoint import load_checkpoint, save_checkpoint
from ..neural.model import predict
from ..neural.training import HISTORY_COLUMNS, Split, train
from ..synth import (
    DatasetArrays,
    DatasetManifest,
    SignalRecord,
    generate_dataset,
    load_arrays,
    manifest_path,
    noise_for_level,
    write_payload,
)
from .config import ENSEMBLE, METHOD_TAGS, ExperimentConfig

DATASET_FILE = "dataset.bin"
CHECKPOINT_FILE = "model.ckpt"

Log = Callable[[str], None]


def _quiet(_msg: str) -> None:
    pass


def split_indices(n: int, ratios=(0.6, 0.2, 0.2), seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded permutation cut into train/val/test; each part sorted by record index."""
    if n < 3:
        raise ValueError("need at least 3 records to split three ways")
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5B11])).permutation(n)
    n_train = int(round(n * ratios[0]))
    n_val = int(round(n * ratios[1]))
    n_train = min(max(n_train, 1), n - 2)
    n_val = min(max(n_val, 1), n - n_train - 1)
    parts = perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]
    return tuple(np.sort(p) for p in parts)


def dataset_file(config: ExperimentConfig, out_dir) -> Path:
    return Path(config.dataset_path) if config.dataset_path else Path(out_dir) / DATASET_FILE


def run_generate(config: ExperimentConfig, out_dir, log: Log = _quiet) -> DatasetManifest:
    path = Path(out_dir) / DATASET_FILE
    manifest = generate_dataset(config.dataset, path)
    n, t = manifest.shape
    log(f"generated {n} x {t} records, m={manifest.channel_count}, sha256={manifest.payload_sha256}")
    return manifest


def _check_shapes(config: ExperimentConfig, data: DatasetArrays) -> None:
    _, m, t = data.noisy.shape
    if (m, t) != (config.model.channel_count, config.model.series_length):
        raise ConfigError("dataset", f"dataset holds m={m}, T={t}; model expects "
                          f"m={config.model.channel_count}, T={config.model.series_length}")


def _history_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_COLUMNS)
    for r in rows:
        w.writerow(["" if r[c] is None else (r[c] if c == "iteration" else repr(float(r[c]))) for c in HISTORY_COLUMNS])
    return buf.getvalue()


@dataclass
class TrainOutcome:
    checkpoint: Path
    checkpoint_sha256: str
    selected: int
    val_losses: list[float]


def run_train(config: ExperimentConfig, dataset, out_dir, log: Log = _quiet) -> TrainOutcome:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = load_arrays(dataset)
    _check_shapes(config, data)
    tr, va, _ = split_indices(len(data.clean), config.split_ratios, config.seed)
    train_split = Split(data.clean[tr], data.noisy[tr])
    val_split = Split(data.clean[va], data.noisy[va])
    candidates = []
    best = None
    for k, weights in enumerate(config.weight_candidates):
        log(f"training candidate {k}: {weights.to_dict()}")
        res = train(train_split, val_split, config.model, config.train, weights)
        (out / f"history_{k}.csv").write_text(_history_csv(res.history))
        candidates.append({
            "index": k,
            "loss_weights": weights.to_dict(),
            "val_loss": res.best_val_loss,
            "best_iteration": res.best_iteration,
            "stopped_early": res.stopped_early,
        })
        log(f"  candidate {k}: val_loss={res.best_val_loss:.6g} at iteration {res.best_iteration}")
        if best is None or res.best_val_loss < best[1].best_val_loss:
            best = (k, res)
    k, res = best
    sha = save_checkpoint(
        out / CHECKPOINT_FILE, res.params, config.model, config.seed, res.best_iteration,
        {"val_loss": res.best_val_loss, "loss_weights": config.weight_candidates[k].to_dict()},
    )
    selection = {"selected": k, "criterion": "validation mean squared error", "candidates": candidates,
                 "checkpoint_sha256": sha}
    (out / "selection.json").write_text(json.dumps(selection, indent=2) + "\n")
    log(f"selected candidate {k}; checkpoint sha256={sha}")
    return TrainOutcome(out / CHECKPOINT_FILE, sha, k, [c["val_loss"] for c in candidates])


def _denoise_stack(noisy: np.ndarray, method: str, params: dict | None, model=None) -> np.ndarray:
    """``noisy`` (N, m, T) -> (N, T).  Baselines see the first channel only."""
    if method == ENSEMBLE:
        model_params, model_config = model
        return predict(model_params, model_config, *build_features(noisy))
    if method not in METHODS:
        raise ConfigError("method", f"unknown method {method!r}; valid: {', '.join(METHOD_TAGS)}")
    cfg = BaselineConfig(method, params or {})
    chunks = [noisy[i : i + 64, 0] for i in range(0, len(noisy), 64)]
    return np.concatenate(list(ordered_map(lambda x: apply_baseline(x, cfg), chunks)))


def run_denoise(config: ExperimentConfig, dataset, method: str, out_path, checkpoint=None,
                params: dict | None = None, log: Log = _quiet) -> str:
    """Write the dataset layout again with each clean slot replaced by the estimate."""
    if method not in METHOD_TAGS:
        raise ConfigError("method", f"unknown method {method!r}; valid: {', '.join(METHOD_TAGS)}")
    data = load_arrays(dataset)
    _check_shapes(config, data)
    model = None
    if method == ENSEMBLE:
        if checkpoint is None:
            raise ConfigError("checkpoint", "the ensemble needs --checkpoint")
        mp, mc, _ = load_checkpoint(checkpoint, config.model)
        model = (mp, mc)
    estimate = _denoise_stack(data.noisy, method, params, model)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    records = (
        SignalRecord(clean=y.astype(np.float32), noisy=x.astype(np.float32), sigma_eps=float(s), seed=int(sd))
        for y, x, s, sd in zip(estimate, data.noisy, data.sigma, data.seeds)
    )
    n, m, t = data.noisy.shape
    sha = write_payload(out_path, records, n, t, m)
    manifest = replace(data.manifest, payload_sha256=sha)
    manifest_path(out_path).write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    log(f"{method}: wrote {n} denoised records to {out_path}")
    return sha


def _noisy_at(seeds, clean, sigma: float, m: int) -> np.ndarray:
    return np.stack([noise_for_level(int(s), c, sigma, m) for s, c in zip(seeds, clean)])


def _mean_psnr(y_hat, y) -> float:
    vals = [psnr(a, b) for a, b in zip(y_hat, y)]
    return float(np.mean(vals))


def tune_baseline(method: str, grid: dict, noisy: np.ndarray, clean: np.ndarray) -> tuple[dict, float]:
    """Grid point with the highest mean validation PSNR; ties keep the earlier point."""
    best_params, best_score = None, -math.inf
    for cfg in expand_grid(method, grid):
        score = _mean_psnr(_denoise_stack(noisy, method, cfg.params), clean)
        if score > best_score:
            best_params, best_score = cfg.params, score
    return best_params, best_score


def run_compare(config: ExperimentConfig, dataset, checkpoint, out_dir, log: Log = _quiet) -> EvalReport:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = load_arrays(dataset)
    _check_shapes(config, data)
    mp, mc, _ = load_checkpoint(checkpoint, config.model)
    _, va, te = split_indices(len(data.clean), config.split_ratios, config.seed)
    if config.tuning_records is not None:
        va = va[: config.tuning_records]
    m = config.model.channel_count
    report = EvalReport()
    tuning = []
    scatter = io.StringIO()
    sw = csv.writer(scatter, lineterminator="\n")
    sw.writerow(SCATTER_COLUMNS)
    for sigma in config.noise_grid:
        val_noisy = _noisy_at(data.seeds[va], data.clean[va], sigma, m)
        test_clean = data.clean[te]
        test_noisy = _noisy_at(data.seeds[te], test_clean, sigma, m)
        chosen = {}
        for method in METHODS:
            params, score = tune_baseline(method, config.baseline_grids[method], val_noisy, data.clean[va])
            chosen[method] = params
            tuning.append({"sigma_eps": sigma, "method": method, "params": params,
                           "val_psnr_mean": score if math.isfinite(score) else "perfect"})
        for method in METHOD_TAGS:
            y_hat = _denoise_stack(test_noisy, method, chosen.get(method), (mp, mc))
            row = summarize(method, sigma, y_hat, test_clean)
            report.add(row)
            sw.writerows(scatter_rows(method, sigma, test_noisy[:, 0], y_hat, test_clean))
            log(f"sigma={sigma:g} {method}: psnr={row.psnr_mean} wmape={row.wmape_mean:.4g}")
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.json").write_text(report.to_json())
    (out / "scatter.csv").write_text(scatter.getvalue())
    (out / "tuning.json").write_text(json.dumps(tuning, indent=2) + "\n")
    return report


def run_all(config: ExperimentConfig, out_dir, log: Log = _quiet) -> EvalReport:
    out = Path(out_dir)
    if not config.dataset_path:
        run_generate(config, out, log)
    ds = dataset_file(config, out)
    outcome = run_train(config, ds, out, log)
    return run_compare(config, ds, outcome.checkpoint, out, log)
