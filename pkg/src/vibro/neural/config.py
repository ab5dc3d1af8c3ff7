from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..errors import ConfigError
from .layers import pooled_length


@dataclass(frozen=True)
class ConvSpec:
    channels: int
    kernel: int = 5
    pool: int = 2

    def __post_init__(self):
        if self.channels < 1:
            raise ConfigError("cnn_layers.channels", "must be >= 1")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ConfigError("cnn_layers.kernel", f"must be a positive odd width, got {self.kernel}")
        if self.pool < 1:
            raise ConfigError("cnn_layers.pool", "must be >= 1")


def _from_dict(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"{where}.{sorted(extra)[0]}", "unknown field")
    return data


@dataclass(frozen=True)
class ModelConfig:
    series_length: int = 500
    channel_count: int = 2
    lstm_hidden_size: int = 32
    lstm_input_size: int = 2
    cnn_input_channels: int = 3
    cnn_layers: tuple[ConvSpec, ...] = (ConvSpec(8, 5, 2), ConvSpec(16, 5, 2))
    fc_widths: tuple[int, int] = (256, 128)
    dropout_rate: float = 0.2
    tied_branches: bool = True

    def __post_init__(self):
        object.__setattr__(
            self, "cnn_layers", tuple(c if isinstance(c, ConvSpec) else ConvSpec(**c) for c in self.cnn_layers)
        )
        object.__setattr__(self, "fc_widths", tuple(int(w) for w in self.fc_widths))
        for name in ("series_length", "channel_count", "lstm_hidden_size", "lstm_input_size", "cnn_input_channels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"model.{name}", "must be >= 1")
        if len(self.fc_widths) != 2 or min(self.fc_widths) < 1:
            raise ConfigError("model.fc_widths", "needs exactly two positive hidden widths")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("model.dropout_rate", "must lie in [0, 1)")

    @property
    def lstm_embedding_size(self) -> int:
        return 4 * self.lstm_hidden_size

    @property
    def cnn_embedding_size(self) -> int:
        if not self.cnn_layers:
            return self.cnn_input_channels * self.series_length
        t = self.series_length
        for layer in self.cnn_layers:
            t = pooled_length(t, layer.pool)
        return self.cnn_layers[-1].channels * t

    @property
    def head_input_size(self) -> int:
        return self.channel_count * (self.lstm_embedding_size + self.cnn_embedding_size)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cnn_layers"] = [asdict(c) for c in self.cnn_layers]
        d["fc_widths"] = list(self.fc_widths)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        _from_dict(cls, data, "model")
        return cls(**data)


@dataclass(frozen=True)
class LossWeights:
    lambda_lstm: float = 0.0
    lambda_cnn: float = 0.0
    lambda_nn: float = 0.0
    lambda_pair: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v >= 0.0:
                raise ConfigError(f"loss_weights.{f.name}", f"must be non-negative, got {v}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LossWeights":
        _from_dict(cls, data, "loss_weights")
        return cls(**data)


LR_SCHEDULES = ("constant", "linear")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    max_iterations: int = 500
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    patience: int | None = None
    eval_every: int = 1
    # draw a fresh noise level and noise realization per batch instead of the stored noisy channels
    resample_noise: bool = False
    noise_range: tuple[float, float] = (0.0, 0.2)
    # "constant", or "linear" decay of the step size to zero at max_iterations
    lr_schedule: str = "constant"

    def __post_init__(self):
        object.__setattr__(self, "noise_range", tuple(float(v) for v in self.noise_range))
        if self.batch_size < 1:
            raise ConfigError("train.batch_size", "must be >= 1")
        if self.max_iterations < 1:
            raise ConfigError("train.max_iterations", "must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("train.learning_rate", "must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("train.beta1", "moment decay rates must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ConfigError("train.epsilon", "must be positive")
        if self.patience is not None and self.patience < 1:
            raise ConfigError("train.patience", "must be >= 1 or null")
        if self.eval_every < 1:
            raise ConfigError("train.eval_every", "must be >= 1")
        if self.lr_schedule not in LR_SCHEDULES:
            raise ConfigError("train.lr_schedule", f"must be one of {', '.join(LR_SCHEDULES)}")
        lo, hi = self.noise_range
        if not 0.0 <= lo <= hi:
            raise ConfigError("train.noise_range", "needs 0 <= low <= high")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise_range"] = list(self.noise_range)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        _from_dict(cls, data, "train")
        return cls(**data)


DEFAULT_MODEL = ModelConfig()
DEFAULT_TRAIN = TrainConfig()
DEFAULT_WEIGHTS = LossWeights()
