"""Experiment configuration: one JSON document drives every CLI command."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema

from ..classical import DEFAULT_GRIDS, METHODS, expand_grid
from ..errors import ConfigError
from ..neural.config import LossWeights, ModelConfig, TrainConfig
from ..synth import DatasetConfig

ENSEMBLE = "ensemble"
METHOD_TAGS = (ENSEMBLE, *METHODS)

DEFAULT_NOISE_GRID = tuple(round(0.025 * k, 3) for k in range(9))

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_OBJ = {"type": "object"}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "dataset": _OBJ,
        "dataset_path": {"type": ["string", "null"]},
        "split_ratios": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
        "noise_grid": {"type": "array", "items": _NUM, "minItems": 1},
        "model": _OBJ,
        "train": _OBJ,
        "loss_weight_grid": {"type": "array", "items": _OBJ},
        "baseline_grids": {
            "type": "object",
            "additionalProperties": False,
            "properties": {m: {"type": "object"} for m in METHODS},
        },
        "tuning_records": {"type": ["integer", "null"], "minimum": 1},
        "output_dir": {"type": "string"},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    dataset_path: str | None = None
    split_ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    noise_grid: tuple[float, ...] = DEFAULT_NOISE_GRID
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss_weight_grid: tuple[LossWeights, ...] = ()
    baseline_grids: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_GRIDS.items()})
    # cap on validation records used to tune the classical baselines (None = all)
    tuning_records: int | None = None
    output_dir: str = "runs/desk"

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.split_ratios)
        object.__setattr__(self, "split_ratios", ratios)
        if any(r <= 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
            raise ConfigError("split_ratios", f"must be three positive numbers summing to 1, got {list(ratios)}")
        grid = tuple(float(s) for s in self.noise_grid)
        object.__setattr__(self, "noise_grid", grid)
        if not grid or any(not 0.0 <= s <= 1.0 for s in grid):
            raise ConfigError("noise_grid", "levels must lie in [0, 1]")
        if len(set(grid)) != len(grid):
            raise ConfigError("noise_grid", "levels must be distinct")
        object.__setattr__(self, "loss_weight_grid", tuple(self.loss_weight_grid))
        if self.model.series_length != self.dataset.series_length:
            raise ConfigError("model.series_length", "must equal dataset.series_length")
        if self.model.channel_count != self.dataset.channel_count:
            raise ConfigError("model.channel_count", "must equal dataset.channel_count")
        if self.tuning_records is not None and self.tuning_records < 1:
            raise ConfigError("tuning_records", "must be >= 1 or null")
        for method, grid in self.baseline_grids.items():
            if method not in METHODS:
                raise ConfigError(f"baseline_grids.{method}", f"unknown method; valid: {', '.join(METHODS)}")
            try:
                candidates = expand_grid(method, grid)
            except ConfigError as exc:
                raise ConfigError(f"baseline_grids.{method}.{exc.field}", str(exc)) from exc
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"baseline_grids.{method}", str(exc)) from exc
            if not candidates:
                raise ConfigError(f"baseline_grids.{method}", "grid is empty")

    @property
    def weight_candidates(self) -> tuple[LossWeights, ...]:
        return self.loss_weight_grid or (LossWeights(),)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed, dataset=replace(self.dataset, seed=seed), train=replace(self.train, seed=seed))

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "dataset": self.dataset.to_dict(),
            "dataset_path": self.dataset_path,
            "split_ratios": list(self.split_ratios),
            "noise_grid": list(self.noise_grid),
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "loss_weight_grid": [w.to_dict() for w in self.loss_weight_grid],
            "baseline_grids": self.baseline_grids,
            "tuning_records": self.tuning_records,
            "output_dir": self.output_dir,
        }
        d["dataset"].pop("seed")
        d["train"].pop("seed")
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        validator = jsonschema.Draft202012Validator(SCHEMA)
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            err = errors[0]
            where = ".".join(str(p) for p in err.absolute_path) or "<root>"
            raise ConfigError(where, err.message)
        data = dict(data)
        seed = int(data.pop("seed", 0))
        for section in ("dataset", "train"):
            if "seed" in data.get(section, {}):
                raise ConfigError(f"{section}.seed", "set the top-level seed instead")
        try:
            dataset = DatasetConfig.from_dict({**data.pop("dataset", {}), "seed": seed})
            model_d = dict(data.pop("model", {}))
            model_d.setdefault("series_length", dataset.series_length)
            model_d.setdefault("channel_count", dataset.channel_count)
            model = ModelConfig.from_dict(model_d)
            train = TrainConfig.from_dict({**data.pop("train", {}), "seed": seed})
            weights = tuple(LossWeights.from_dict(w) for w in data.pop("loss_weight_grid", []))
        except TypeError as exc:
            raise ConfigError("<config>", str(exc)) from exc
        grids = {k: dict(v) for k, v in DEFAULT_GRIDS.items()}
        grids.update(data.pop("baseline_grids", {}))
        return cls(seed=seed, dataset=dataset, model=model, train=train, loss_weight_grid=weights,
                   baseline_grids=grids, **data)


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    return ExperimentConfig.from_dict(data)
