"""Synthetic footstep-induced plate vibration signals.

Each point sensor on a thin isotropic plate sees a superposition of modal
responses.  Projecting the plate equation onto a mode with wavenumber ``k``
gives a damped oscillator

    rho_h * q'' + K * q' + (D k^4 + T k^2) * q = impulse load,

so a record is built by sampling a few plate scenarios, integrating their
modal oscillators with fixed-step RK4 (impulses enter as instantaneous
velocity jumps), summing, normalising to unit peak and adding Gaussian
sensor noise per channel.

Binary layout of a dataset payload (little-endian)::

    b"VIBD" | version u32 | record_count u64 | T u32 | m u32
    per record: seed u64 | sigma_eps f32 | clean f32[T] | noisy f32[m*T]

A JSON manifest with the same stem sits next to the payload.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from ._parallel import ordered_map
from .errors import (
    BadMagicError,
    ConfigError,
    CountMismatchError,
    DegenerateDistributionError,
    IntegrationError,
    InvalidScenarioError,
    TruncatedPayloadError,
    VersionMismatchError,
)

MAGIC = b"VIBD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQII")
_MAX_REJECTIONS = 1000
_CHUNK = 64


# ---------------------------------------------------------------------------
# scenario sampling


@dataclass(frozen=True)
class ScenarioDistribution:
    mu_D: float = 300.0
    sigma_D: float = 30.0
    mu_T: float = 100.0
    sigma_T: float = 10.0
    mu_rho_h: float = 50.0
    sigma_rho_h: float = 5.0
    a_U: float = 10.0
    b_U: float = 60.0
    scenario_count_range: tuple[int, int] = (1, 3)
    impulse_count_range: tuple[int, int] = (1, 3)
    impulse_amplitude_range: tuple[float, float] = (0.5, 1.5)
    impulse_window: float = 2.0  # impulses land in [0, impulse_window) seconds
    plate_span: float = 0.85
    mode_count: int = 4
    modal_gain_decay: float = 1.0  # participation of mode n is n ** -decay

    def __post_init__(self):
        object.__setattr__(self, "scenario_count_range", tuple(self.scenario_count_range))
        object.__setattr__(self, "impulse_count_range", tuple(self.impulse_count_range))
        object.__setattr__(self, "impulse_amplitude_range", tuple(self.impulse_amplitude_range))
        for name in ("sigma_D", "sigma_T", "sigma_rho_h"):
            if getattr(self, name) < 0:
                raise ConfigError(f"distribution.{name}", "must be >= 0")
        if self.a_U > self.b_U:
            raise ConfigError("distribution.a_U", f"a_U={self.a_U} exceeds b_U={self.b_U}")
        if self.a_U < 0:
            raise ConfigError("distribution.a_U", "damping bounds must be >= 0")
        for name in ("scenario_count_range", "impulse_count_range"):
            lo, hi = getattr(self, name)
            if int(lo) != lo or int(hi) != hi or lo < 1 or hi < lo:
                raise ConfigError(f"distribution.{name}", f"need integers 1 <= lo <= hi, got {(lo, hi)}")
        lo, hi = self.impulse_amplitude_range
        if lo <= 0 or hi < lo:
            raise ConfigError("distribution.impulse_amplitude_range", "need 0 < lo <= hi")
        if self.impulse_window <= 0:
            raise ConfigError("distribution.impulse_window", "must be > 0")
        if self.plate_span <= 0:
            raise ConfigError("distribution.plate_span", "must be > 0")
        if int(self.mode_count) != self.mode_count or self.mode_count < 1:
            raise ConfigError("distribution.mode_count", "must be an integer >= 1")


@dataclass(frozen=True)
class PlateScenario:
    flexural_rigidity: float
    membrane_tension: float
    areal_density: float
    damping: float
    impulse_times: tuple[float, ...]
    impulse_amplitudes: tuple[float, ...]
    mode_count: int
    modal_wavenumbers: tuple[float, ...]
    modal_gains: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.modal_gains:
            object.__setattr__(self, "modal_gains", (1.0,) * self.mode_count)
        if self.flexural_rigidity <= 0:
            raise InvalidScenarioError("flexural rigidity D must be > 0")
        if self.areal_density <= 0:
            raise InvalidScenarioError("areal density rho_h must be > 0")
        if self.damping < 0 or self.membrane_tension < 0:
            raise InvalidScenarioError("damping K and tension T must be >= 0")
        if self.mode_count < 1 or len(self.modal_wavenumbers) != self.mode_count:
            raise InvalidScenarioError("mode_count must be >= 1 and match the wavenumber list")
        if len(self.modal_gains) != self.mode_count:
            raise InvalidScenarioError("one modal gain per mode required")
        if len(self.impulse_times) != len(self.impulse_amplitudes):
            raise InvalidScenarioError("impulse times and amplitudes differ in length")
        times = np.asarray(self.impulse_times, dtype=float)
        if times.size and (times[0] < 0 or np.any(np.diff(times) <= 0)):
            raise InvalidScenarioError("impulse times must be >= 0 and strictly increasing")

    def digest_fields(self) -> tuple:
        return dataclasses.astuple(self)


def _positive_normal(rng: np.random.Generator, mu: float, sigma: float, name: str, allow_zero=False):
    for _ in range(_MAX_REJECTIONS):
        v = float(rng.normal(mu, sigma)) if sigma > 0 else float(mu)
        if v > 0 or (allow_zero and v == 0):
            return v
        if sigma == 0:
            break
    raise DegenerateDistributionError(
        f"could not draw a positive {name} from N({mu}, {sigma}) in {_MAX_REJECTIONS} attempts"
    )


def sample_scenario(dist: ScenarioDistribution, rng: np.random.Generator) -> PlateScenario:
    D = _positive_normal(rng, dist.mu_D, dist.sigma_D, "D")
    T = _positive_normal(rng, dist.mu_T, dist.sigma_T, "T", allow_zero=True)
    rho_h = _positive_normal(rng, dist.mu_rho_h, dist.sigma_rho_h, "rho_h")
    K = float(rng.uniform(dist.a_U, dist.b_U)) if dist.b_U > dist.a_U else float(dist.a_U)
    lo, hi = dist.impulse_count_range
    n_imp = int(rng.integers(lo, hi + 1))
    times = np.sort(rng.uniform(0.0, dist.impulse_window, size=n_imp))
    amps = rng.uniform(*dist.impulse_amplitude_range, size=n_imp)
    n = np.arange(1, dist.mode_count + 1)
    return PlateScenario(
        flexural_rigidity=D,
        membrane_tension=T,
        areal_density=rho_h,
        damping=K,
        impulse_times=tuple(float(t) for t in times),
        impulse_amplitudes=tuple(float(a) for a in amps),
        mode_count=dist.mode_count,
        modal_wavenumbers=tuple(float(k) for k in n * math.pi / dist.plate_span),
        modal_gains=tuple(float(g) for g in n ** -float(dist.modal_gain_decay)),
    )


class Mode(NamedTuple):
    omega: float  # rad/s
    damping: float  # 1/s, coefficient of q' in q'' + c q' + omega^2 q
    gain: float


def modal_reduction(s: PlateScenario) -> list[Mode]:
    modes = []
    for k, gain in zip(s.modal_wavenumbers, s.modal_gains):
        stiffness = (s.flexural_rigidity * k**4 + s.membrane_tension * k**2) / s.areal_density
        if not stiffness > 0:
            raise InvalidScenarioError(f"non-positive modal stiffness {stiffness} at k={k}")
        modes.append(Mode(math.sqrt(stiffness), s.damping / s.areal_density, float(gain)))
    return modes


# ---------------------------------------------------------------------------
# integration


def _rk4_batch(omega, damping, jump_steps, jump_values, n_samples, substeps, h):
    """Integrate independent oscillators; returns q, v sampled every ``substeps``.

    ``jump_steps``/``jump_values`` list velocity jumps as (fine step, mode, value).
    """
    n_modes = omega.shape[0]
    w2 = omega * omega
    c = damping
    q = np.zeros(n_modes)
    v = np.zeros(n_modes)
    q_out = np.empty((n_samples, n_modes))
    v_out = np.empty((n_samples, n_modes))
    jumps: dict[int, list[tuple[int, float]]] = {}
    for step, mode, val in zip(*jump_steps, jump_values):
        jumps.setdefault(int(step), []).append((int(mode), float(val)))
    half = 0.5 * h
    sixth = h / 6.0
    n_fine = n_samples * substeps
    for s in range(n_fine):
        hits = jumps.get(s)
        if hits:
            for mode, val in hits:
                v[mode] += val
        if s % substeps == 0:
            q_out[s // substeps] = q
            v_out[s // substeps] = v
        a1 = -c * v - w2 * q
        q2 = q + half * v
        v2 = v + half * a1
        a2 = -c * v2 - w2 * q2
        q3 = q + half * v2
        v3 = v + half * a2
        a3 = -c * v3 - w2 * q3
        q4 = q + h * v3
        v4 = v + h * a3
        a4 = -c * v4 - w2 * q4
        q = q + sixth * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return q_out, v_out


def _check_finite(q_out, omega, labels=None):
    bad = ~np.all(np.isfinite(q_out), axis=0)
    if np.any(bad):
        i = int(np.argmax(bad))
        label = labels[i] if labels is not None else f"mode {i}"
        raise IntegrationError(
            f"non-finite response in {label} (omega={omega[i]:.6g} rad/s); step too large?"
        )


def _impulse_table(groups, n_samples, dt, substeps):
    """Flatten (modes, impulses) groups into per-mode arrays and jump lists."""
    h = dt / substeps
    n_fine = n_samples * substeps
    omega, damping, steps, modes_idx, values = [], [], [], [], []
    for modes, impulses in groups:
        base = len(omega)
        for j, m in enumerate(modes):
            omega.append(m.omega)
            damping.append(m.damping)
            for t, amp in impulses:
                step = int(round(t / h))
                if t < 0 or step >= n_fine:
                    raise ValueError(f"impulse time {t} outside [0, {n_samples * dt})")
                steps.append(step)
                modes_idx.append(base + j)
                values.append(amp * m.gain)
    return (
        np.asarray(omega, dtype=float),
        np.asarray(damping, dtype=float),
        (np.asarray(steps, dtype=np.int64), np.asarray(modes_idx, dtype=np.int64)),
        np.asarray(values, dtype=float),
    )


class ModalTrajectory(NamedTuple):
    q: np.ndarray  # (T, n_modes)
    v: np.ndarray


def simulate_modes(modes: Sequence[Mode], impulses, n_samples: int, dt: float, substeps: int = 4):
    """Per-mode displacement/velocity at the sample instants (no summation)."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not modes:
        raise ValueError("at least one mode is required")
    omega, damping, steps, values = _impulse_table([(modes, impulses)], n_samples, dt, substeps)
    with np.errstate(over="ignore", invalid="ignore"):
        q, v = _rk4_batch(omega, damping, steps, values, n_samples, substeps, dt / substeps)
    _check_finite(q, omega)
    return ModalTrajectory(q, v)


def _normalise(w: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(w))
    return w / peak if peak > 0 else w


def integrate_response(
    modes: Sequence[Mode],
    impulses,
    n_samples: int,
    dt: float,
    substeps: int = 4,
    normalize: bool = True,
) -> np.ndarray:
    """Displacement series ``sum_n q_n(t)`` of length ``n_samples``.

    ``impulses`` is a sequence of ``(time, amplitude)``; each mode receives a
    velocity jump of ``amplitude * gain`` at the fine RK4 step nearest ``time``.
    RK4 runs with step ``dt / substeps`` and is decimated to spacing ``dt``.
    """
    traj = simulate_modes(modes, impulses, n_samples, dt, substeps)
    w = traj.q.sum(axis=1)
    return _normalise(w) if normalize else w


def scenario_impulses(s: PlateScenario) -> list[tuple[float, float]]:
    # modal force per unit areal mass
    return [(t, a / s.areal_density) for t, a in zip(s.impulse_times, s.impulse_amplitudes)]


def superpose(scenarios: Sequence[PlateScenario], n_samples, dt, substeps=4, normalize=True):
    """Clean signal of a set of scenarios observed by one sensor."""
    return _superpose_many([scenarios], n_samples, dt, substeps, normalize)[0]


def _superpose_many(records, n_samples, dt, substeps, normalize):
    groups, owners = [], []
    for r, scenarios in enumerate(records):
        for s in scenarios:
            modes = modal_reduction(s)
            groups.append((modes, scenario_impulses(s)))
            owners.extend([r] * len(modes))
    omega, damping, steps, values = _impulse_table(groups, n_samples, dt, substeps)
    with np.errstate(over="ignore", invalid="ignore"):
        q, _ = _rk4_batch(omega, damping, steps, values, n_samples, substeps, dt / substeps)
    labels = [f"record {r} mode {i}" for i, r in enumerate(owners)]
    _check_finite(q, omega, labels)
    owners = np.asarray(owners)
    out = []
    for r in range(len(records)):
        w = q[:, owners == r].sum(axis=1)
        out.append(_normalise(w) if normalize else w)
    return out


def inject_noise(clean, sigma_eps: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` channels of ``clean + N(0, sigma_eps^2)``, i.i.d. across samples and channels."""
    if sigma_eps < 0:
        raise ValueError("sigma_eps must be >= 0")
    if m < 1:
        raise ValueError("channel count m must be >= 1")
    clean = np.asarray(clean)
    if sigma_eps == 0:
        return np.repeat(clean[None, :], m, axis=0)
    return clean[None, :] + rng.normal(0.0, sigma_eps, size=(m, clean.shape[-1]))


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class DatasetConfig:
    record_count: int = 2000
    series_length: int = 500
    channel_count: int = 2
    sigma_eps_range: tuple[float, float] = (0.0, 0.2)
    seed: int = 0
    sample_rate: float = 200.0
    rk4_substeps: int = 4
    distribution: ScenarioDistribution = field(default_factory=ScenarioDistribution)

    def __post_init__(self):
        object.__setattr__(self, "sigma_eps_range", tuple(float(s) for s in self.sigma_eps_range))
        if isinstance(self.distribution, dict):
            object.__setattr__(self, "distribution", ScenarioDistribution(**self.distribution))
        _require_int(self.record_count, "dataset.record_count", 1)
        _require_int(self.series_length, "dataset.series_length", 8)
        _require_int(self.channel_count, "dataset.channel_count", 1)
        _require_int(self.rk4_substeps, "dataset.rk4_substeps", 1)
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("dataset.seed", "must be an unsigned 64-bit integer")
        lo, hi = self.sigma_eps_range
        if lo < 0 or hi < lo:
            raise ConfigError("dataset.sigma_eps_range", f"need 0 <= lo <= hi, got {(lo, hi)}")
        if self.sample_rate <= 0:
            raise ConfigError("dataset.sample_rate", "must be > 0")
        if self.distribution.impulse_window > self.duration:
            raise ConfigError(
                "distribution.impulse_window",
                f"{self.distribution.impulse_window} s exceeds window length {self.duration} s",
            )

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return self.series_length / self.sample_rate

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sigma_eps_range"] = list(self.sigma_eps_range)
        for key in ("scenario_count_range", "impulse_count_range", "impulse_amplitude_range"):
            d["distribution"][key] = list(d["distribution"][key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"dataset.{sorted(extra)[0]}", "unknown field")
        dist = d.pop("distribution", {}) or {}
        known_dist = {f.name for f in dataclasses.fields(ScenarioDistribution)}
        extra = set(dist) - known_dist
        if extra:
            raise ConfigError(f"distribution.{sorted(extra)[0]}", "unknown field")
        return cls(distribution=ScenarioDistribution(**dist), **d)


def _require_int(value, name, minimum):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ConfigError(name, f"must be an integer >= {minimum}, got {value!r}")


@dataclass
class SignalRecord:
    clean: np.ndarray  # (T,) float32
    noisy: np.ndarray  # (m, T) float32
    sigma_eps: float
    seed: int
    scenario_digest: str = ""

    @property
    def channel_count(self) -> int:
        return self.noisy.shape[0]


@dataclass(frozen=True)
class DatasetManifest:
    record_count: int
    series_length: int
    channel_count: int
    sigma_eps_range: tuple[float, float]
    global_seed: int
    format_version: int
    config: dict
    payload_sha256: str = ""

    @property
    def shape(self) -> tuple[int, int]:
        return (self.record_count, self.series_length)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sigma_eps_range"] = list(self.sigma_eps_range)
        d["shape"] = list(self.shape)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        d = {k: v for k, v in d.items() if k != "shape"}
        d["sigma_eps_range"] = tuple(d["sigma_eps_range"])
        return cls(**d)


def record_seed(global_seed: int, index: int) -> int:
    state = np.random.SeedSequence([int(global_seed), int(index)]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def scenarios_for_seed(seed: int, dist: ScenarioDistribution) -> list[PlateScenario]:
    rng = _stream(seed, 0)
    lo, hi = dist.scenario_count_range
    count = int(rng.integers(lo, hi + 1))
    return [sample_scenario(dist, rng) for _ in range(count)]


def scenario_digest(scenarios: Sequence[PlateScenario]) -> str:
    h = hashlib.sha256()
    for s in scenarios:
        h.update(repr(s.digest_fields()).encode())
    return h.hexdigest()[:16]


def noise_for_level(seed: int, clean, sigma_eps: float, m: int) -> np.ndarray:
    """Fresh noisy channels at a chosen level, reproducible per (record seed, level)."""
    rng = _stream(seed, 2, int(round(sigma_eps * 1e6)))
    return inject_noise(np.asarray(clean, dtype=float), sigma_eps, m, rng)


def _generate_chunk(config: DatasetConfig, indices: range) -> list[SignalRecord]:
    seeds = [record_seed(config.seed, i) for i in indices]
    scen = [scenarios_for_seed(s, config.distribution) for s in seeds]
    cleans = _superpose_many(scen, config.series_length, config.dt, config.rk4_substeps, True)
    lo, hi = config.sigma_eps_range
    out = []
    for seed, scenarios, clean in zip(seeds, scen, cleans):
        rng = _stream(seed, 1)
        sigma = float(np.float32(rng.uniform(lo, hi) if hi > lo else lo))
        clean32 = clean.astype(np.float32)
        noisy = inject_noise(clean32.astype(np.float64), sigma, config.channel_count, rng)
        out.append(
            SignalRecord(
                clean=clean32,
                noisy=noisy.astype(np.float32),
                sigma_eps=sigma,
                seed=seed,
                scenario_digest=scenario_digest(scenarios),
            )
        )
    return out


def generate_records(config: DatasetConfig, workers=None) -> Iterator[SignalRecord]:
    """Records in index order; chunked so each worker integrates many modes at once."""
    chunks = [
        range(i, min(i + _CHUNK, config.record_count)) for i in range(0, config.record_count, _CHUNK)
    ]
    for recs in ordered_map(lambda idx: _generate_chunk(config, idx), chunks, workers):
        yield from recs


def record_dtype(T: int, m: int) -> np.dtype:
    return np.dtype([("seed", "<u8"), ("sigma", "<f4"), ("clean", "<f4", (T,)), ("noisy", "<f4", (m, T))])


def build_manifest(config: DatasetConfig, payload_sha256: str = "") -> DatasetManifest:
    return DatasetManifest(
        record_count=config.record_count,
        series_length=config.series_length,
        channel_count=config.channel_count,
        sigma_eps_range=config.sigma_eps_range,
        global_seed=config.seed,
        format_version=FORMAT_VERSION,
        config=config.to_dict(),
        payload_sha256=payload_sha256,
    )


def manifest_path(payload: str | Path) -> Path:
    return Path(payload).with_suffix(".json")


def write_payload(path, records: Iterator[SignalRecord], count: int, T: int, m: int) -> str:
    """Stream records to ``path``; returns the payload's sha256."""
    dtype = record_dtype(T, m)
    digest = hashlib.sha256()
    written = 0
    with open(path, "wb") as fh:
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, count, T, m)
        fh.write(header)
        digest.update(header)
        buf = np.zeros(1, dtype=dtype)
        for rec in records:
            buf["seed"] = rec.seed
            buf["sigma"] = rec.sigma_eps
            buf["clean"] = rec.clean
            buf["noisy"] = rec.noisy
            raw = buf.tobytes()
            fh.write(raw)
            digest.update(raw)
            written += 1
    if written != count:
        raise CountMismatchError(f"wrote {written} records, header promises {count}")
    return digest.hexdigest()


def generate_dataset(config: DatasetConfig, path, workers=None) -> DatasetManifest:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sha = write_payload(
        path,
        generate_records(config, workers),
        config.record_count,
        config.series_length,
        config.channel_count,
    )
    manifest = build_manifest(config, sha)
    manifest_path(path).write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    return manifest


def _open_checked(path) -> tuple[Path, DatasetManifest, int, int, int]:
    path = Path(path)
    if path.is_dir():
        path = path / "dataset.bin"
    manifest = DatasetManifest.from_dict(json.loads(manifest_path(path).read_text()))
    size = path.stat().st_size
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: header truncated ({len(head)} bytes)")
    magic, version, count, T, m = _HEADER.unpack(head)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: payload format version {version}, reader supports {FORMAT_VERSION}"
        )
    if manifest.format_version != version:
        raise VersionMismatchError(
            f"{path}: manifest version {manifest.format_version} != payload version {version}"
        )
    if (manifest.record_count, manifest.series_length, manifest.channel_count) != (count, T, m):
        raise CountMismatchError(
            f"{path}: manifest says {manifest.record_count}x{manifest.series_length}x"
            f"{manifest.channel_count}, payload header says {count}x{T}x{m}"
        )
    expected = _HEADER.size + count * record_dtype(T, m).itemsize
    if size < expected:
        raise TruncatedPayloadError(f"{path}: {size} bytes, expected {expected}")
    if size > expected:
        raise CountMismatchError(f"{path}: {size - expected} trailing bytes beyond {count} records")
    return path, manifest, count, T, m


def _digest_fn(manifest: DatasetManifest):
    try:
        cfg = DatasetConfig.from_dict(manifest.config)
    except (TypeError, ConfigError):
        return lambda seed: ""
    return lambda seed: scenario_digest(scenarios_for_seed(seed, cfg.distribution))


def load_dataset(path) -> Iterator[SignalRecord]:
    """Stream records one at a time; all structural checks run before the first yield."""
    path, manifest, count, T, m = _open_checked(path)
    dtype = record_dtype(T, m)
    digest_of = _digest_fn(manifest)
    with open(path, "rb") as fh:
        fh.seek(_HEADER.size)
        for _ in range(count):
            row = np.frombuffer(fh.read(dtype.itemsize), dtype=dtype)[0]
            seed = int(row["seed"])
            yield SignalRecord(
                clean=np.array(row["clean"]),
                noisy=np.array(row["noisy"]),
                sigma_eps=float(row["sigma"]),
                seed=seed,
                scenario_digest=digest_of(seed),
            )


class DatasetArrays(NamedTuple):
    clean: np.ndarray  # (N, T) float64
    noisy: np.ndarray  # (N, m, T) float64
    sigma: np.ndarray
    seeds: np.ndarray
    manifest: DatasetManifest


def load_arrays(path) -> DatasetArrays:
    """Whole-dataset load into stacked float64 arrays (for the harness)."""
    path, manifest, count, T, m = _open_checked(path)
    rows = np.fromfile(path, dtype=record_dtype(T, m), offset=_HEADER.size, count=count)
    return DatasetArrays(
        clean=rows["clean"].astype(np.float64),
        noisy=rows["noisy"].astype(np.float64),
        sigma=rows["sigma"].astype(np.float64),
        seeds=rows["seed"].astype(np.uint64),
        manifest=manifest,
    )
