"""
Dendritic network: synapses with an RC delay line and a weight, grouped into branches that
leak-integrate their input current with a branch time constant, all summed into one LIF soma.

Two simulators share the same equations:
  * step/run    clocked reference with per-synapse ring buffers (numpy, one window)
  * DendriticNet batched torch module used for training and evaluation: both leaks are applied
                as causal kernels and soma resets come from a gradient-free pass over the inflow
"""
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from errors import ConfigError, DomainError
from model.rram import DelayElement, HrsDistribution, SeededRng, sample_hrs
from model.surrogate import spike_fn

DTYPE = torch.float64
DEFAULT_BRANCH_TAU_S = (0.02, 0.1)


@dataclass(frozen=True)
class SynapseConfig:
    branch_index: int
    source_channel: int
    delay_steps: int
    weight: float = 0.0
    delay: Optional[DelayElement] = None

    def __post_init__(self):
        if self.delay_steps < 0:
            raise DomainError(f"delay_steps must be >= 0, got {self.delay_steps}")
        if not (self.weight >= 0):
            raise DomainError(f"synaptic weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class BranchConfig:
    tau_s: float
    synapses: Tuple[SynapseConfig, ...] = ()
    hrs: Optional[HrsDistribution] = None


@dataclass(frozen=True)
class SomaConfig:
    tau_mem_s: float = 0.02
    v_threshold: float = 1.0
    v_reset: float = 0.0

    def __post_init__(self):
        if not (self.tau_mem_s > 0):
            raise DomainError(f"tau_mem_s must be > 0, got {self.tau_mem_s}")
        if not (self.v_threshold > self.v_reset):
            raise DomainError("v_threshold must exceed v_reset")


@dataclass(frozen=True)
class NetworkConfig:
    branches: Tuple[BranchConfig, ...]
    soma: SomaConfig = field(default_factory=SomaConfig)
    channels: int = 2
    dt_s: float = 1e-3
    capacitance_f: float = 100e-15

    def __post_init__(self):
        if not (self.dt_s > 0):
            raise ConfigError(f"dt_s must be > 0, got {self.dt_s}")
        for i, br in enumerate(self.branches):
            if not (br.tau_s > 0):
                raise ConfigError(f"branch {i}: tau_s must be > 0")
            for syn in br.synapses:
                if syn.branch_index != i:
                    raise ConfigError(f"branch {i} holds a synapse tagged for branch {syn.branch_index}")
                if not (0 <= syn.source_channel < self.channels):
                    raise ConfigError(f"branch {i}: source channel {syn.source_channel} outside [0, {self.channels})")

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @cached_property
    def synapses(self) -> Tuple[SynapseConfig, ...]:
        return tuple(s for br in self.branches for s in br.synapses)

    @property
    def n_synapses(self) -> int:
        return len(self.synapses)

    @cached_property
    def delay_steps(self) -> np.ndarray:
        return np.array([s.delay_steps for s in self.synapses], dtype=np.int64)

    @cached_property
    def source_channel(self) -> np.ndarray:
        return np.array([s.source_channel for s in self.synapses], dtype=np.int64)

    @cached_property
    def branch_index(self) -> np.ndarray:
        return np.array([s.branch_index for s in self.synapses], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.synapses], dtype=float)

    @cached_property
    def delay_s(self) -> np.ndarray:
        return np.array([s.delay.delay_s if s.delay else s.delay_steps * self.dt_s for s in self.synapses])

    @cached_property
    def delay_resistance_ohm(self) -> np.ndarray:
        return np.array([s.delay.resistance_ohm if s.delay else np.nan for s in self.synapses])

    @cached_property
    def branch_decay(self) -> np.ndarray:
        return np.exp(-self.dt_s / np.array([br.tau_s for br in self.branches]))

    @cached_property
    def soma_decay(self) -> float:
        return float(np.exp(-self.dt_s / self.soma.tau_mem_s))

    def with_weights(self, weights) -> "NetworkConfig":
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.n_synapses,):
            raise ConfigError(f"expected {self.n_synapses} weights, got shape {weights.shape}")
        it = iter(weights.tolist())
        branches = tuple(replace(br, synapses=tuple(replace(s, weight=next(it)) for s in br.synapses))
                         for br in self.branches)
        return replace(self, branches=branches)

    def delay_stats(self) -> dict:
        ms = self.delay_s * 1e3
        return {"min_ms": float(ms.min()), "mean_ms": float(ms.mean()), "max_ms": float(ms.max())}


@dataclass
class NetworkState:
    branch_currents: np.ndarray
    membrane_v: float
    delay_buffers: np.ndarray
    step_index: int = 0
    membrane_v_pre: float = 0.0


@dataclass
class ForwardTrace:
    branch_currents: np.ndarray
    membrane_v: np.ndarray
    spikes: np.ndarray

    def __len__(self):
        return len(self.spikes)


def init_network(n_branches, synapses_per_branch, channels, hrs, capacitance_f, dt_s, rng: SeededRng,
                 tau_s: Sequence[float] = DEFAULT_BRANCH_TAU_S, soma: SomaConfig = None,
                 init_rng: SeededRng = None, w_init_max: float = 0.5) -> NetworkConfig:
    """
    Sample every delay device once from its branch's HRS law (hrs may be one distribution or one
    per branch), assign source channels round-robin and draw initial weights uniformly on
    [0, w_init_max] from init_rng (zeros without it).
    """
    if min(n_branches, synapses_per_branch, channels) < 1:
        raise ConfigError("branch, synapse and channel counts must all be >= 1")
    if synapses_per_branch % channels:
        raise ConfigError(f"{synapses_per_branch} synapses per branch do not fan out evenly over {channels} channels")
    hrs_list = list(hrs) if isinstance(hrs, (list, tuple)) else [hrs] * n_branches
    if len(hrs_list) != n_branches or len(tau_s) != n_branches:
        raise ConfigError(f"need one HRS law and one tau per branch ({n_branches})")

    n_syn = n_branches * synapses_per_branch
    weights = init_rng.uniform(0.0, w_init_max, size=n_syn) if init_rng is not None else np.zeros(n_syn)
    branches = []
    for i in range(n_branches):
        resistances = sample_hrs(hrs_list[i], rng, size=synapses_per_branch)
        synapses = []
        for j, r in enumerate(resistances):
            delay = DelayElement(float(r), capacitance_f)
            synapses.append(SynapseConfig(
                branch_index=i,
                source_channel=j % channels,
                delay_steps=int(round(delay.delay_s / dt_s)),
                weight=float(weights[i * synapses_per_branch + j]),
                delay=delay,
            ))
        branches.append(BranchConfig(float(tau_s[i]), tuple(synapses), hrs_list[i]))
    return NetworkConfig(tuple(branches), soma or SomaConfig(), channels, dt_s, capacitance_f)


def reset_state(config: NetworkConfig) -> NetworkState:
    depth = int(config.delay_steps.max()) + 1 if config.n_synapses else 1
    return NetworkState(
        branch_currents=np.zeros(config.n_branches),
        membrane_v=0.0,
        delay_buffers=np.zeros((config.n_synapses, depth)),
    )


def step(config: NetworkConfig, state: NetworkState, input_spikes):
    """Advance one bin in place; returns (state, soma_spike)."""
    x = np.asarray(input_spikes, dtype=float)
    t = state.step_index
    rows = np.arange(config.n_synapses)
    # synapse j only uses the first delay_steps+1 slots of its row
    depth = config.delay_steps + 1
    state.delay_buffers[rows, t % depth] = x[config.source_channel]
    delayed = state.delay_buffers[rows, (t + 1) % depth]

    inflow = np.bincount(config.branch_index, weights=config.weights * delayed, minlength=config.n_branches)
    state.branch_currents = state.branch_currents * config.branch_decay + inflow
    v = state.membrane_v * config.soma_decay + state.branch_currents.sum() * config.dt_s
    state.membrane_v_pre = v
    spike = int(v >= config.soma.v_threshold)
    state.membrane_v = config.soma.v_reset if spike else v
    state.step_index = t + 1
    return state, spike


def _raster_array(config: NetworkConfig, raster):
    spikes = raster.spikes if hasattr(raster, "spikes") else np.asarray(raster)
    if spikes.ndim != 2 or spikes.shape[0] != config.channels:
        raise ConfigError(f"raster has {spikes.shape[0] if spikes.ndim == 2 else '?'} channels, network expects {config.channels}")
    dt = getattr(raster, "dt_s", config.dt_s)
    if abs(dt - config.dt_s) > 1e-12:
        raise ConfigError(f"raster dt {dt} differs from network dt {config.dt_s}")
    return spikes


def run(config: NetworkConfig, raster, record: bool = False):
    spikes = _raster_array(config, raster)
    state = reset_state(config)
    steps = spikes.shape[1]
    if record:
        currents, volts, out = np.zeros((steps, config.n_branches)), np.zeros(steps), np.zeros(steps, dtype=np.uint8)
    count = 0
    for t in range(steps):
        state, s = step(config, state, spikes[:, t])
        count += s
        if record:
            currents[t], volts[t], out[t] = state.branch_currents, state.membrane_v_pre, s
    return count, (ForwardTrace(currents, volts, out) if record else None)


def classify(spike_count: int, decision_threshold: int = 1) -> str:
    if decision_threshold < 1:
        raise DomainError(f"decision threshold must be >= 1, got {decision_threshold}")
    return "anomalous" if spike_count >= decision_threshold else "normal"


def reset_times(inflow: np.ndarray, beta: float, theta: float, v_reset: float):
    """
    Soma recursion without gradients over inflow [batch, step]. Returns, per bin, the index of the
    latest reset strictly before it (-1 if none) and the 0/1 spike raster.
    """
    batch, steps = inflow.shape
    last = np.full((batch, steps), -1, dtype=np.int64)
    fired = np.zeros((batch, steps), dtype=np.uint8)
    v = np.zeros(batch)
    prev = np.full(batch, -1, dtype=np.int64)
    for t in range(steps):
        last[:, t] = prev
        v = beta * v + inflow[:, t]
        hit = v >= theta
        fired[:, t] = hit
        v = np.where(hit, v_reset, v)
        prev = np.where(hit, t, prev)
    return last, fired


@dataclass
class SimOutput:
    v_peak: torch.Tensor
    spike_counts: torch.Tensor
    membrane_v: Optional[torch.Tensor] = None
    branch_currents: Optional[torch.Tensor] = None


class DendriticNet(nn.Module):
    """Batched simulator over rasters shaped [batch, channel, step]; weights are passed per call."""

    def __init__(self, config: NetworkConfig, surrogate_slope: float = 10.0):
        super().__init__()
        self.config = config
        self.surrogate_slope = surrogate_slope
        self.register_buffer("delay_steps", torch.as_tensor(config.delay_steps, dtype=torch.long))
        self.register_buffer("source_channel", torch.as_tensor(config.source_channel, dtype=torch.long))
        self.register_buffer("branch_index", torch.as_tensor(config.branch_index, dtype=torch.long))
        self.register_buffer("tau_s", torch.tensor([br.tau_s for br in config.branches], dtype=DTYPE))
        self._kernels = {}

    def branch_kernel(self, steps: int) -> torch.Tensor:
        """K[i, s, t] = exp(-(t - s) dt / tau_i) for t >= s, else 0."""
        if steps not in self._kernels:
            lag = torch.arange(steps, dtype=DTYPE)[None, :] - torch.arange(steps, dtype=DTYPE)[:, None]
            k = torch.exp(-lag.clamp(min=0)[None] * self.config.dt_s / self.tau_s[:, None, None])
            self._kernels[steps] = k * (lag >= 0)
        return self._kernels[steps]

    def soma_kernel(self, steps: int) -> torch.Tensor:
        """S[s, t] = beta^(t - s) for t >= s, else 0."""
        key = ("soma", steps)
        if key not in self._kernels:
            lag = torch.arange(steps, dtype=DTYPE)[None, :] - torch.arange(steps, dtype=DTYPE)[:, None]
            self._kernels[key] = self.config.soma_decay ** lag.clamp(min=0) * (lag >= 0)
        return self._kernels[key]

    def forward(self, x: torch.Tensor, weights: torch.Tensor, record: bool = False) -> SimOutput:
        cfg = self.config
        batch, channels, steps = x.shape
        if channels != cfg.channels:
            raise ConfigError(f"raster has {channels} channels, network expects {cfg.channels}")
        x = x.to(DTYPE)
        max_d = int(self.delay_steps.max()) if cfg.n_synapses else 0

        # delay lines: synapse j at step t reads its channel at t - d_j (zeros before the window)
        padded = F.pad(x, (max_d, 0))
        lag_idx = torch.arange(steps)[None, :] + max_d - self.delay_steps[:, None]
        delayed = padded[:, self.source_channel[:, None], lag_idx]
        drive = torch.zeros(batch, cfg.n_branches, steps, dtype=DTYPE).index_add(
            1, self.branch_index, delayed * weights[None, :, None])
        currents = torch.einsum("bis,ist->bit", drive, self.branch_kernel(steps))
        inflow = currents.sum(1) * cfg.dt_s

        theta, v_reset = cfg.soma.v_threshold, cfg.soma.v_reset
        if steps:
            # membrane without resets, then each reset subtracts its carried charge decayed since
            free = inflow @ self.soma_kernel(steps)
            last, fired = reset_times(inflow.detach().numpy(), cfg.soma_decay, theta, v_reset)
            idx = torch.as_tensor(np.maximum(last, 0))
            since = (torch.arange(steps)[None, :] - idx).to(DTYPE)
            carried = (free.gather(1, idx) - v_reset) * cfg.soma_decay ** since
            membrane = torch.where(torch.as_tensor(last >= 0), free - carried, free)
            v_peak = membrane.max(1).values
            # spike values from the reset pass, gradient from the surrogate
            surrogate = spike_fn(membrane - theta, self.surrogate_slope).sum(1)
            counts = torch.as_tensor(fired.sum(1), dtype=DTYPE) + (surrogate - surrogate.detach())
        else:
            membrane = torch.zeros(batch, 0, dtype=DTYPE)
            v_peak = torch.zeros(batch, dtype=DTYPE)
            counts = torch.zeros(batch, dtype=DTYPE)
        return SimOutput(v_peak, counts, membrane if record else None, currents if record else None)


def simulate(config: NetworkConfig, rasters, weights=None, batch_size: int = 64, slope: float = 10.0):
    """Spike counts and peak membrane for a stack of rasters [n, channel, step], no gradients."""
    rasters = np.asarray(rasters)
    w = torch.as_tensor(config.weights if weights is None else np.asarray(weights, dtype=float), dtype=DTYPE)
    net = DendriticNet(config, slope)
    counts, peaks = [], []
    with torch.no_grad():
        for start in range(0, len(rasters), batch_size):
            out = net(torch.as_tensor(rasters[start:start + batch_size], dtype=DTYPE), w)
            counts.append(out.spike_counts.numpy())
            peaks.append(out.v_peak.numpy())
    if not counts:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(counts).astype(np.int64), np.concatenate(peaks)
