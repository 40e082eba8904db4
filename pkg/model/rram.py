"""
Statistical RRAM device models.

Delay devices sit in the high-resistive state (HRS), whose resistance follows a wide
log-normal law; paired with a capacitor they form an RC delay element. Weight devices are
programmed into one of a few low-resistive-state (LRS) levels, each read back as a Gaussian
draw around the programmed mean.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from errors import DomainError, LevelIndexError

LRS_MIN_OHM = 7e3
LRS_MAX_OHM = 50e3
N_LEVELS = 8
SIGMA_FRAC = 0.03
HRS_MEDIAN_OHM = 400e9
HRS_SIGMA_LOG = 0.5
CAPACITANCE_F = 100e-15

STREAMS = {"device": 0, "init": 1, "data": 2, "shuffle": 3}


class SeededRng:
    """Reproducible random stream identified by (seed, stream)."""

    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= int(seed) < 2**64) or not (0 <= int(stream) < 2**64):
            raise DomainError(f"seed/stream must be unsigned 64-bit integers, got {seed}/{stream}")
        self.seed, self.stream = int(seed), int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def permutation(self, n):
        return self.generator.permutation(n)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def stream_rng(seed: int, name: str) -> SeededRng:
    if name not in STREAMS:
        raise DomainError(f"unknown rng stream '{name}' (known: {sorted(STREAMS)})")
    return SeededRng(seed, STREAMS[name])


@dataclass(frozen=True)
class HrsDistribution:
    median_ohm: float = HRS_MEDIAN_OHM
    sigma_log: float = HRS_SIGMA_LOG
    label: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.median_ohm) and self.median_ohm > 0):
            raise DomainError(f"HRS median must be > 0, got {self.median_ohm}")
        if not (math.isfinite(self.sigma_log) and self.sigma_log >= 0):
            raise DomainError(f"HRS sigma_log must be >= 0, got {self.sigma_log}")

    @property
    def mean_ohm(self) -> float:
        return self.median_ohm * math.exp(self.sigma_log ** 2 / 2)


@dataclass(frozen=True)
class LrsLevelTable:
    levels: tuple = ()
    lrs_min: float = LRS_MIN_OHM
    lrs_max: float = LRS_MAX_OHM

    def __post_init__(self):
        levels = tuple((float(mu), float(sigma)) for mu, sigma in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise DomainError("LRS level table is empty")
        if not (0 < self.lrs_min < self.lrs_max):
            raise DomainError(f"LRS window must satisfy 0 < min < max, got [{self.lrs_min}, {self.lrs_max}]")
        prev = -math.inf
        for k, (mu, sigma) in enumerate(levels):
            if not (self.lrs_min <= mu <= self.lrs_max):
                raise DomainError(f"level {k}: mu {mu} outside [{self.lrs_min}, {self.lrs_max}]")
            if mu <= prev:
                raise DomainError(f"level {k}: mu must be strictly increasing")
            if sigma < 0:
                raise DomainError(f"level {k}: sigma must be >= 0")
            prev = mu

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def mu_ohm(self) -> np.ndarray:
        return np.array([mu for mu, _ in self.levels])

    @property
    def sigma_ohm(self) -> np.ndarray:
        return np.array([sigma for _, sigma in self.levels])

    @property
    def conductance_s(self) -> np.ndarray:
        return 1.0 / self.mu_ohm


def default_lrs_table(lrs_min=LRS_MIN_OHM, lrs_max=LRS_MAX_OHM, n_levels=N_LEVELS, sigma_frac=SIGMA_FRAC):
    """Levels equally spaced in conductance between 1/lrs_max and 1/lrs_min."""
    if n_levels < 2:
        raise DomainError(f"need at least 2 levels, got {n_levels}")
    g = np.linspace(1.0 / lrs_max, 1.0 / lrs_min, n_levels)
    mu = np.sort(1.0 / g)
    # pin the endpoints, 1/(1/x) is not always x
    mu[0], mu[-1] = lrs_min, lrs_max
    return LrsLevelTable(tuple((m, sigma_frac * m) for m in mu), lrs_min, lrs_max)


@dataclass(frozen=True)
class DelayElement:
    resistance_ohm: float
    capacitance_f: float
    delay_s: float = field(default=None)

    def __post_init__(self):
        delay = delay_from_rc(self.resistance_ohm, self.capacitance_f)
        if self.delay_s is None:
            object.__setattr__(self, "delay_s", delay)
        elif self.delay_s != delay:
            raise DomainError(f"delay_s {self.delay_s} != R*C {delay}")

    @classmethod
    def from_sample(cls, dist: HrsDistribution, capacitance_f: float, rng: SeededRng):
        return cls(sample_hrs(dist, rng), capacitance_f)


def sample_hrs(dist: HrsDistribution, rng: SeededRng, size=None):
    # median * exp(sigma*z) keeps sigma=0 draws bit-exact at the median
    z = rng.standard_normal(size)
    return dist.median_ohm * np.exp(dist.sigma_log * z)


def delay_from_rc(resistance, capacitance) -> float:
    if not (np.isfinite(resistance) and resistance > 0):
        raise DomainError(f"resistance must be > 0, got {resistance}")
    if not (np.isfinite(capacitance) and capacitance > 0):
        raise DomainError(f"capacitance must be > 0, got {capacitance}")
    return float(resistance) * float(capacitance)


def program_lrs(table: LrsLevelTable, level_index: int, rng: SeededRng) -> float:
    if not (0 <= int(level_index) < table.n_levels):
        raise LevelIndexError(f"level index {level_index} outside [0, {table.n_levels})")
    mu, sigma = table.levels[int(level_index)]
    r = mu + sigma * float(rng.standard_normal())
    return float(min(max(r, table.lrs_min), table.lrs_max))


def nearest_index(values, x):
    """argmin_k |values[k] - x|, exact ties resolved to the lower index. x may be an array."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DomainError("cannot search an empty level set")
    x = np.asarray(x, dtype=float)
    dist = np.abs(values.reshape((1,) * x.ndim + (-1,)) - x[..., None])
    # np.argmin returns the first minimum
    idx = np.argmin(dist, axis=-1)
    return int(idx) if idx.ndim == 0 else idx


def nearest_level(table: LrsLevelTable, hidden_weight_as_resistance):
    return nearest_index(table.mu_ohm, hidden_weight_as_resistance)


def footprint_bits(n_synapses: int, n_levels: int) -> int:
    if n_synapses < 1:
        raise DomainError(f"n_synapses must be >= 1, got {n_synapses}")
    if n_levels < 2:
        raise DomainError(f"n_levels must be >= 2, got {n_levels}")
    return int(n_synapses) * (int(n_levels) - 1).bit_length()
