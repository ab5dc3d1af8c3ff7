"""Parameter container, seeded initialization and the fixed block order."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig

GROUPS = ("theta_lstm", "theta_cnn", "theta_nn")


def branch_prefixes(config: ModelConfig) -> list[str]:
    if config.tied_branches:
        return [""]
    return [f"ch{j}." for j in range(config.channel_count)]


def branch_channels(config: ModelConfig) -> list[tuple[str, list[int]]]:
    """(parameter prefix, signal indices it serves) for each branch instance."""
    m = config.channel_count
    if config.tied_branches:
        return [("", list(range(m)))]
    return [(f"ch{j}.", [j]) for j in range(m)]


def param_shapes(config: ModelConfig) -> dict[str, dict[str, tuple[int, ...]]]:
    """Ordered block shapes per group.  This order is the checkpoint layout."""
    h, i = config.lstm_hidden_size, config.lstm_input_size
    lstm: dict[str, tuple[int, ...]] = {}
    cnn: dict[str, tuple[int, ...]] = {}
    for p in branch_prefixes(config):
        for d in ("fwd", "bwd"):
            lstm[f"{p}{d}.W"] = (i, 4 * h)
            lstm[f"{p}{d}.U"] = (h, 4 * h)
            lstm[f"{p}{d}.b"] = (4 * h,)
        c_in = config.cnn_input_channels
        for k, layer in enumerate(config.cnn_layers):
            cnn[f"{p}conv{k}.K"] = (layer.channels, c_in, layer.kernel)
            cnn[f"{p}conv{k}.b"] = (layer.channels,)
            c_in = layer.channels
    widths = [config.head_input_size, *config.fc_widths, config.series_length]
    nn = {}
    for k in range(3):
        nn[f"fc{k}.W"] = (widths[k], widths[k + 1])
        nn[f"fc{k}.b"] = (widths[k + 1],)
    return {"theta_lstm": lstm, "theta_cnn": cnn, "theta_nn": nn}


def param_count(config: ModelConfig) -> int:
    return sum(int(np.prod(s)) for g in param_shapes(config).values() for s in g.values())


def _fan_in(name: str, shape: tuple[int, ...]) -> int:
    if name.endswith(".K"):
        return shape[1] * shape[2]
    return shape[0]


@dataclass
class ModelParams:
    theta_lstm: dict[str, np.ndarray] = field(default_factory=dict)
    theta_cnn: dict[str, np.ndarray] = field(default_factory=dict)
    theta_nn: dict[str, np.ndarray] = field(default_factory=dict)

    def groups(self):
        return [(g, getattr(self, g)) for g in GROUPS]

    def blocks(self):
        """(group, name, array) in checkpoint order."""
        for g, d in self.groups():
            for name, arr in d.items():
                yield g, name, arr

    def count(self) -> int:
        return sum(a.size for _, _, a in self.blocks())

    def copy(self) -> "ModelParams":
        return ModelParams(*({k: v.copy() for k, v in d.items()} for _, d in self.groups()))

    def map(self, fn) -> "ModelParams":
        return ModelParams(*({k: fn(v) for k, v in d.items()} for _, d in self.groups()))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for _, _, a in self.blocks()]) if self.count() else np.zeros(0)

    def check(self, config: ModelConfig) -> None:
        expected = param_shapes(config)
        for g, d in self.groups():
            if list(d) != list(expected[g]):
                raise ValueError(f"{g} blocks {list(d)} do not match config {list(expected[g])}")
            for name, arr in d.items():
                if arr.shape != expected[g][name]:
                    raise ValueError(f"{g}.{name} has shape {arr.shape}, config wants {expected[g][name]}")


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """Weights uniform on ±1/sqrt(fan_in); biases zero."""
    rng = np.random.default_rng(seed)
    out = {}
    for g, shapes in param_shapes(config).items():
        d = {}
        for name, shape in shapes.items():
            if name.endswith(".b"):
                d[name] = np.zeros(shape)
            else:
                bound = 1.0 / np.sqrt(_fan_in(name, shape))
                d[name] = rng.uniform(-bound, bound, size=shape)
        out[g] = d
    return ModelParams(**out)


def zero_params(config: ModelConfig) -> ModelParams:
    return ModelParams(**{g: {k: np.zeros(s) for k, s in shapes.items()} for g, shapes in param_shapes(config).items()})
