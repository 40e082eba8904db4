"""
Experiment configuration: one JSON file, parsed strictly into frozen dataclasses.

Every field has a default, so `{}` is a valid config. Unknown keys and wrongly typed values
raise ConfigError naming the dotted key.
"""
import dataclasses
import hashlib
import json
import os
import typing
from dataclasses import dataclass, field

import numpy as np

from errors import ConfigError, DataIOError
from model.rram import (
    CAPACITANCE_F, HRS_MEDIAN_OHM, HRS_SIGMA_LOG, LRS_MAX_OHM, LRS_MIN_OHM, N_LEVELS, SIGMA_FRAC,
    HrsDistribution, LrsLevelTable, default_lrs_table,
)

SOURCES = ("synthetic", "csv")
LOSSES = ("peak-membrane-bce",)
OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class LevelSpec:
    mu_ohm: float
    sigma_ohm: float = 0.0


@dataclass(frozen=True)
class HrsSection:
    median_ohm: float = HRS_MEDIAN_OHM
    sigma_log: float = HRS_SIGMA_LOG
    label: str = ""


@dataclass(frozen=True)
class LrsSection:
    levels: typing.Tuple[LevelSpec, ...] = ()
    min_ohm: float = LRS_MIN_OHM
    max_ohm: float = LRS_MAX_OHM
    n_levels: int = N_LEVELS
    sigma_frac: float = SIGMA_FRAC
    hrs_off_level: bool = True


@dataclass(frozen=True)
class DeviceSection:
    hrs: HrsSection = field(default_factory=HrsSection)
    lrs: LrsSection = field(default_factory=LrsSection)
    capacitance_f: float = CAPACITANCE_F

    def hrs_distribution(self, median_ohm=None) -> HrsDistribution:
        median = self.hrs.median_ohm if median_ohm is None else median_ohm
        return HrsDistribution(median, self.hrs.sigma_log, self.hrs.label)

    def lrs_table(self) -> LrsLevelTable:
        lrs = self.lrs
        if not lrs.levels:
            # n_levels counts weight states, the HRS off level included
            n_lrs = lrs.n_levels - (1 if lrs.hrs_off_level else 0)
            return default_lrs_table(lrs.min_ohm, lrs.max_ohm, n_lrs, lrs.sigma_frac)
        return LrsLevelTable(tuple((lv.mu_ohm, lv.sigma_ohm) for lv in lrs.levels), lrs.min_ohm, lrs.max_ohm)


@dataclass(frozen=True)
class SynthSection:
    sample_rate_hz: float = 1000.0
    beat_period_s: float = 0.7
    first_wave_s: float = 0.2
    onset_jitter_s: float = 0.01
    first_amp_mv: float = 1.0
    first_width_s: float = 0.006
    second_amp_mv: float = 0.6
    second_width_s: float = 0.008
    normal_gap_s: float = 0.01
    anomaly_shift_s: float = 0.08
    amp_jitter: float = 0.1
    noise_mv: float = 0.01


@dataclass(frozen=True)
class EncodingSection:
    source: str = "synthetic"
    recording_path: str = ""
    annotation_path: str = ""
    n_beats: int = 500
    class_mix: float = 0.5
    threshold_mv: float = 0.1
    window_s: float = 0.7
    test_fraction: float = 0.2
    electrodes: int = 1
    synth: SynthSection = field(default_factory=SynthSection)


@dataclass(frozen=True)
class NetworkSection:
    n_branches: int = 2
    synapses_per_branch: int = 64
    channels: int = 2
    branch_hrs_median_ohm: typing.Tuple[float, ...] = ()
    branch_tau_s: typing.Tuple[float, ...] = (0.02, 0.1)
    tau_mem_s: float = 0.02
    v_threshold: float = 1.0
    v_reset: float = 0.0
    dt_s: float = 0.001


@dataclass(frozen=True)
class TrainingSection:
    n_pre: int = 50
    n_training: int = 100
    learning_rate: float = 0.05
    batch_size: int = 16
    surrogate_slope: float = 10.0
    loss: str = "peak-membrane-bce"
    optimizer: str = "sgd"
    decision_threshold: int = 1
    select_threshold: bool = True
    threshold_candidates: typing.Tuple[int, ...] = (1, 2, 3, 4, 5)
    val_fraction: float = 0.0
    w_init_frac: float = 0.1
    w_max: float = 5.0


def _default_grid():
    return tuple(float(x) for x in np.logspace(10, 12, 7))


@dataclass(frozen=True)
class SweepSection:
    hrs_median_ohm: typing.Tuple[float, ...] = field(default_factory=_default_grid)
    repetitions: int = 3
    workers: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    device: DeviceSection = field(default_factory=DeviceSection)
    encoding: EncodingSection = field(default_factory=EncodingSection)
    network: NetworkSection = field(default_factory=NetworkSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output_dir: str = "./persistent"
    seed: int = 0

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _coerce(value, tp, key):
    origin = typing.get_origin(tp)
    if dataclasses.is_dataclass(tp):
        return _from_dict(tp, value, key)
    if origin is tuple:
        item_tp = typing.get_args(tp)[0]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {type(value).__name__}")
        return tuple(_coerce(v, item_tp, f"{key}[{i}]") for i, v in enumerate(value))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{key}: unsupported config type {tp}")


def _from_dict(cls, data, prefix=""):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or '<root>'}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = f"{prefix}." if prefix else ""
        raise ConfigError(f"unknown config key(s): {', '.join(where + k for k in unknown)}")
    kwargs = {}
    for name, value in data.items():
        key = f"{prefix}.{name}" if prefix else name
        kwargs[name] = _coerce(value, hints[name], key)
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{prefix or '<root>'}: {e}")


def _validate(cfg: ExperimentConfig):
    enc, net, tr = cfg.encoding, cfg.network, cfg.training
    if enc.source not in SOURCES:
        raise ConfigError(f"encoding.source must be one of {SOURCES}, got '{enc.source}'")
    if tr.loss not in LOSSES:
        raise ConfigError(f"training.loss must be one of {LOSSES}, got '{tr.loss}'")
    if tr.optimizer not in OPTIMIZERS:
        raise ConfigError(f"training.optimizer must be one of {OPTIMIZERS}, got '{tr.optimizer}'")
    if tr.n_pre < 0 or tr.n_training < 0:
        raise ConfigError("training epochs must be >= 0")
    if tr.learning_rate < 0 or tr.batch_size < 1:
        raise ConfigError("training.learning_rate must be >= 0 and batch_size >= 1")
    if tr.decision_threshold < 1 or any(c < 1 for c in tr.threshold_candidates):
        raise ConfigError("decision thresholds must be >= 1")
    if not (0.0 <= tr.val_fraction < 1.0):
        raise ConfigError("training.val_fraction must be in [0, 1)")
    if len(net.branch_tau_s) != net.n_branches:
        raise ConfigError(f"network.branch_tau_s needs {net.n_branches} entries, got {len(net.branch_tau_s)}")
    if net.branch_hrs_median_ohm and len(net.branch_hrs_median_ohm) != net.n_branches:
        raise ConfigError(f"network.branch_hrs_median_ohm needs {net.n_branches} entries or none")
    if net.channels != 2 * enc.electrodes:
        raise ConfigError(f"network.channels ({net.channels}) must be 2 x encoding.electrodes ({enc.electrodes})")
    if not (0.0 <= enc.class_mix <= 1.0) or not (0.0 <= enc.test_fraction < 1.0):
        raise ConfigError("encoding.class_mix must be in [0, 1] and test_fraction in [0, 1)")
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {cfg.seed}")
    lrs = cfg.device.lrs
    if not lrs.levels and lrs.n_levels < 2 + int(lrs.hrs_off_level):
        raise ConfigError(f"device.lrs.n_levels must leave at least two LRS levels, got {lrs.n_levels}")
    if cfg.sweep.repetitions < 1 or cfg.sweep.workers < 1:
        raise ConfigError("sweep.repetitions and sweep.workers must be >= 1")
    if not cfg.sweep.hrs_median_ohm or any(not (m > 0) for m in cfg.sweep.hrs_median_ohm):
        raise ConfigError("sweep.hrs_median_ohm must list at least one positive resistance")
    return cfg


def parse_config(data: dict) -> ExperimentConfig:
    return _validate(_from_dict(ExperimentConfig, data))


def load_config(path=None) -> ExperimentConfig:
    if not path:
        return parse_config({})
    if not os.path.exists(path):
        raise DataIOError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})")
    return parse_config(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_config(cfg) + "\n")


def config_hash(cfg: ExperimentConfig) -> str:
    # output location does not change results
    data = cfg.to_dict()
    data.pop("output_dir")
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha1(canonical.encode()).hexdigest()


def load_device_config(path) -> DeviceSection:
    if not os.path.exists(path):
        raise DataIOError(f"device config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})")
    return _from_dict(DeviceSection, data, "device")
