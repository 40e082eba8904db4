import math
from dataclasses import dataclass

import numpy as np

from errors import DomainError

LABELS = ("normal", "anomalous")
LABEL_CODE = {"normal": 0, "anomalous": 1}
DEFAULT_THRESHOLD_MV = 0.1
DEFAULT_DT_S = 1e-3
DEFAULT_WINDOW_S = 0.7
LEVEL_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class AnalogTrace:
    """Uniformly sampled multichannel voltage trace, samples shaped [channel, sample] in mV."""
    sample_period_s: float
    samples: np.ndarray

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "samples", samples)
        if not (self.sample_period_s > 0):
            raise DomainError(f"sample period must be > 0, got {self.sample_period_s}")

    @property
    def channel_count(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples * self.sample_period_s

    def __eq__(self, other):
        return (isinstance(other, AnalogTrace) and self.sample_period_s == other.sample_period_s
                and np.array_equal(self.samples, other.samples))


@dataclass(frozen=True, eq=False)
class SpikeRaster:
    """Binary spike trains shaped [channel, step] at a fixed step dt_s."""
    dt_s: float
    spikes: np.ndarray

    def __post_init__(self):
        spikes = np.atleast_2d(np.asarray(self.spikes, dtype=np.uint8))
        object.__setattr__(self, "spikes", spikes)
        if not (self.dt_s > 0):
            raise DomainError(f"dt must be > 0, got {self.dt_s}")
        if spikes.size and spikes.max() > 1:
            raise DomainError("spike raster entries must be 0 or 1")

    @property
    def channels(self) -> int:
        return self.spikes.shape[0]

    @property
    def duration_steps(self) -> int:
        return self.spikes.shape[1]

    def __eq__(self, other):
        return isinstance(other, SpikeRaster) and self.dt_s == other.dt_s and np.array_equal(self.spikes, other.spikes)


@dataclass(frozen=True, eq=False)
class LabeledWindow:
    raster: SpikeRaster
    label: str
    window_id: int = 0
    center_s: float = 0.0

    def __post_init__(self):
        if self.label not in LABEL_CODE:
            raise DomainError(f"unknown label '{self.label}'")
        if self.raster.duration_steps == 0:
            raise DomainError("labeled window must not be empty")

    @property
    def target(self) -> int:
        return LABEL_CODE[self.label]


def step_of(time_s: float, dt_s: float) -> int:
    # guards against i*period/dt landing a hair under an integer
    return int(math.floor(time_s / dt_s + 1e-9))


def delta_modulate(trace: AnalogTrace, threshold_mv: float = DEFAULT_THRESHOLD_MV,
                   dt_s: float = DEFAULT_DT_S) -> SpikeRaster:
    """
    UP/DOWN delta modulation. Input channel c maps to output channels 2c (UP) and 2c+1 (DOWN).

    The reconstruction level starts at the first sample and moves by one threshold per emitted
    event, so level == first + threshold * (UP - DOWN) at all times. At most one spike per output
    channel and bin: an event that finds its bin already taken is dropped and the level lags,
    catching up over the following bins.
    """
    if not (threshold_mv > 0):
        raise DomainError(f"delta-modulation threshold must be > 0, got {threshold_mv}")
    if dt_s < trace.sample_period_s * (1 - 1e-9):
        raise DomainError(f"dt ({dt_s}) must be >= sample period ({trace.sample_period_s})")

    n = trace.n_samples
    steps = step_of((n - 1) * trace.sample_period_s, dt_s) + 1 if n else 0
    out = np.zeros((2 * trace.channel_count, steps), dtype=np.uint8)
    bins = [step_of(i * trace.sample_period_s, dt_s) for i in range(n)]
    # level is first + net * threshold, never an accumulated sum
    reach = threshold_mv * (1 - LEVEL_RTOL)

    for c in range(trace.channel_count):
        x = trace.samples[c]
        if n == 0:
            continue
        net = 0
        up, down = out[2 * c], out[2 * c + 1]
        for i in range(1, n):
            b = bins[i]
            level = x[0] + net * threshold_mv
            if x[i] - level >= reach and not up[b]:
                up[b] = 1
                net += 1
            elif level - x[i] >= reach and not down[b]:
                down[b] = 1
                net -= 1
    return SpikeRaster(dt_s, out)


def reconstruct(raster: SpikeRaster, first_mv: float, threshold_mv: float, channel: int = 0) -> np.ndarray:
    """Replay the UP/DOWN events of one input channel into a level trace, one value per bin."""
    up = raster.spikes[2 * channel].astype(float)
    down = raster.spikes[2 * channel + 1].astype(float)
    return first_mv + threshold_mv * np.cumsum(up - down)


def segment_beats(raster: SpikeRaster, annotations, window_s: float = DEFAULT_WINDOW_S):
    """One window of window_s centred on each annotation; windows cut by the recording edges are dropped."""
    window_steps = int(round(window_s / raster.dt_s))
    if window_steps < 1:
        raise DomainError(f"window ({window_s} s) shorter than one step")
    half = window_steps // 2
    duration_s = raster.duration_steps * raster.dt_s
    windows = []
    for k, (time_s, label) in enumerate(annotations):
        if not (0.0 <= time_s <= duration_s):
            raise DomainError(f"annotation {k} at {time_s} s outside recording (0..{duration_s} s)")
        start = int(round(time_s / raster.dt_s)) - half
        end = start + window_steps
        if start < 0 or end > raster.duration_steps:
            continue
        sub = SpikeRaster(raster.dt_s, raster.spikes[:, start:end].copy())
        windows.append(LabeledWindow(sub, label, window_id=k, center_s=float(time_s)))
    return windows
