"""Checkpoint file: magic, JSON header, little-endian float64 payload.

Layout::

    b"VIBM" | u32 version | u64 header length | UTF-8 JSON header | f64 payload

The payload concatenates every parameter block in ``params.blocks()`` order
(LSTM group, then CNN, then head; within a group in ``param_shapes`` order),
each flattened row-major.  The header repeats the block names and shapes so a
reader can verify the layout without the code.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .config import ModelConfig
from .params import GROUPS, ModelParams, param_shapes

MAGIC = b"VIBM"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")


def _layout(config: ModelConfig) -> list[list]:
    return [[g, name, list(shape)] for g, shapes in param_shapes(config).items() for name, shape in shapes.items()]


def checkpoint_bytes(params: ModelParams, config: ModelConfig, seed: int, iteration: int, metrics: dict | None = None) -> bytes:
    params.check(config)
    header = {
        "model_config": config.to_dict(),
        "seed": int(seed),
        "iteration": int(iteration),
        "metrics": metrics or {},
        "blocks": _layout(config),
        "parameter_count": params.count(),
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = params.flat().astype("<f8").tobytes()
    return _PREFIX.pack(MAGIC, VERSION, len(raw)) + raw + payload


def save_checkpoint(path, params: ModelParams, config: ModelConfig, seed: int, iteration: int, metrics=None) -> str:
    data = checkpoint_bytes(params, config, seed, iteration, metrics)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path, expected_config: ModelConfig | None = None) -> tuple[ModelParams, ModelConfig, dict]:
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError("file too short for a checkpoint")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    start = _PREFIX.size
    if len(data) < start + hlen:
        raise CheckpointError("truncated header")
    try:
        header = json.loads(data[start : start + hlen].decode("utf-8"))
        config = ModelConfig.from_dict(header["model_config"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"unreadable header: {exc}") from exc
    if expected_config is not None and config != expected_config:
        raise CheckpointError("checkpoint model config does not match the requested config")
    if header.get("blocks") != _layout(config):
        raise CheckpointError("block layout in header does not match its model config")
    shapes = param_shapes(config)
    expected = sum(int(np.prod(s)) for g in shapes.values() for s in g.values())
    n_bytes = len(data) - start - hlen
    if n_bytes != 8 * expected:
        raise CheckpointError(f"payload holds {n_bytes} bytes, config needs {8 * expected}")
    payload = np.frombuffer(data, dtype="<f8", offset=start + hlen)
    params, pos = ModelParams(), 0
    for g in GROUPS:
        block = getattr(params, g)
        for name, shape in shapes[g].items():
            n = int(np.prod(shape))
            block[name] = payload[pos : pos + n].astype(np.float64).reshape(shape)
            pos += n
    return params, config, header
