"""
RRAM-aware training of the dendritic network.

  1. full-precision pre-training of the hidden weights W (surrogate-gradient BPTT)
  2. scale factor s_w mapping the LRS conductance grid onto the weight range of W
  3. programming every weight device at its nearest level (Gaussian programming noise)
  4. quantized training: forward with the programmed weights, gradients into W, and at each
     epoch end reprogram only the devices whose nearest level moved
"""
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader, TensorDataset

from config import ExperimentConfig, TrainingSection, config_hash
from data.dataset import WindowSet, content_hash
from errors import DomainError, EvaluationError, NumericalError, ScaleError
from model.dendritic_net import DTYPE, DendriticNet, NetworkConfig, SomaConfig, init_network, simulate
from model.rram import (
    HrsDistribution, LrsLevelTable, SeededRng, footprint_bits, nearest_index, program_lrs, sample_hrs, stream_rng,
)
from predict import balanced_accuracy, evaluate, readout, select_decision_threshold


def network_from_config(cfg: ExperimentConfig, seed: int, device_rng: SeededRng = None) -> NetworkConfig:
    net, dev, tr = cfg.network, cfg.device, cfg.training
    medians = net.branch_hrs_median_ohm or (dev.hrs.median_ohm,) * net.n_branches
    return init_network(
        net.n_branches, net.synapses_per_branch, net.channels,
        [dev.hrs_distribution(m) for m in medians],
        dev.capacitance_f, net.dt_s,
        device_rng or stream_rng(seed, "device"),
        tau_s=net.branch_tau_s,
        soma=SomaConfig(net.tau_mem_s, net.v_threshold, net.v_reset),
        init_rng=stream_rng(seed, "init"),
        w_init_max=tr.w_init_frac * tr.w_max,
    )


def peak_loss(v_peak, target, v_threshold, slope):
    return F.binary_cross_entropy_with_logits(slope * (v_peak - v_threshold), target)


def loss_and_grad(config: NetworkConfig, window, weights, slope: float = 10.0):
    """Loss and dL/dW for one LabeledWindow."""
    w = torch.tensor(np.asarray(weights, dtype=float), dtype=DTYPE, requires_grad=True)
    if bool((w < 0).any()):
        raise DomainError("effective weights must be nonnegative")
    x = torch.as_tensor(window.raster.spikes[None], dtype=DTYPE)
    out = DendriticNet(config, slope)(x, w)
    loss = peak_loss(out.v_peak, torch.tensor([float(window.target)], dtype=DTYPE), config.soma.v_threshold, slope)
    if not torch.isfinite(loss):
        raise NumericalError(f"non-finite loss on window {window.window_id}")
    loss.backward()
    return float(loss.item()), w.grad.numpy().copy()


def make_optimizer(tcfg: TrainingSection, params):
    if tcfg.optimizer == "adam":
        return torch.optim.Adam(params, lr=tcfg.learning_rate)
    return torch.optim.SGD(params, lr=tcfg.learning_rate)


def _tensors(dataset: WindowSet):
    return (torch.as_tensor(dataset.rasters, dtype=DTYPE),
            torch.as_tensor(dataset.labels, dtype=DTYPE))


def _run_epoch(net, X, y, W, optimizer, tcfg, shuffle_rng, w_max, forward_weights, phase, epoch, grad_accum=None):
    order = shuffle_rng.permutation(len(y))
    loader = DataLoader(TensorDataset(X, y), batch_size=tcfg.batch_size, sampler=order.tolist())
    theta = net.config.soma.v_threshold
    total = 0.0
    labels, predicted = [], []
    for step_i, (xb, yb) in enumerate(loader):
        optimizer.zero_grad()
        out = net(xb, forward_weights(W))
        loss = peak_loss(out.v_peak, yb, theta, tcfg.surrogate_slope)
        if not torch.isfinite(loss):
            raise NumericalError(f"{phase} epoch {epoch} step {step_i}: non-finite loss")
        loss.backward()
        if grad_accum is not None:
            grad_accum += W.grad.numpy()
        optimizer.step()
        with torch.no_grad():
            W.clamp_(0.0, w_max)
        total += float(loss.item()) * len(yb)
        labels.append(yb.numpy().astype(np.int64))
        predicted.append(readout(out.spike_counts.detach().numpy(), tcfg.decision_threshold))
    # accuracy of the forward passes the epoch trained on, no extra simulation
    return total / len(y), balanced_accuracy(np.concatenate(labels), np.concatenate(predicted))


def _epoch_row(metrics, phase, epoch, loss, accuracy, reprogram_count):
    row = {"phase": phase, "epoch": epoch, "loss": loss, "accuracy": accuracy, "reprogram_count": reprogram_count}
    if metrics is not None:
        metrics.append(row)
    print(f"[{phase}] epoch {epoch} loss={loss:.5f} acc={accuracy:.4f} reprogrammed={reprogram_count}")
    sys.stdout.flush()
    return row


def pretrain(config: NetworkConfig, dataset: WindowSet, tcfg: TrainingSection, shuffle_rng: SeededRng,
             weights=None, metrics=None) -> np.ndarray:
    """n_pre epochs of minibatch descent on full-precision W, clipped to [0, w_max] after every step."""
    W0 = np.array(config.weights if weights is None else weights, dtype=float)
    if tcfg.n_pre == 0:
        return W0
    if len(dataset) == 0:
        raise EvaluationError("cannot pre-train on an empty dataset")
    W = torch.tensor(W0, dtype=DTYPE, requires_grad=True)
    net = DendriticNet(config, tcfg.surrogate_slope)
    X, y = _tensors(dataset)
    optimizer = make_optimizer(tcfg, [W])
    for epoch in range(tcfg.n_pre):
        loss, acc = _run_epoch(net, X, y, W, optimizer, tcfg, shuffle_rng, tcfg.w_max, lambda w: w, "pretrain", epoch)
        _epoch_row(metrics, "pretrain", epoch, loss, acc, 0)
    return W.detach().numpy().copy()


def compute_scale(W_trained, table: LrsLevelTable) -> float:
    """s_w = g_max / max(W): the top conductance level lands on the largest trained weight."""
    w_top = float(np.max(W_trained)) if np.size(W_trained) else 0.0
    if not (np.isfinite(w_top) and w_top > 0):
        raise ScaleError(f"cannot scale onto LRS levels: max trained weight is {w_top}")
    return float(table.conductance_s.max() / w_top)


@dataclass(frozen=True)
class WeightGrid:
    """LRS levels (plus the optional HRS off state, last index) expressed as weights through s_w."""
    table: LrsLevelTable
    s_w: float
    off_state: Optional[HrsDistribution] = None

    @property
    def n_states(self) -> int:
        return self.table.n_levels + (1 if self.off_state else 0)

    @property
    def level_ohm(self) -> np.ndarray:
        mu = self.table.mu_ohm
        return np.append(mu, self.off_state.median_ohm) if self.off_state else mu

    @property
    def level_weights(self) -> np.ndarray:
        return self.to_weight(self.level_ohm)

    @property
    def w_max(self) -> float:
        return float(self.level_weights.max())

    def to_weight(self, ohm):
        return (1.0 / np.asarray(ohm, dtype=float)) / self.s_w

    def nearest(self, W) -> np.ndarray:
        return np.atleast_1d(nearest_index(self.level_weights, np.asarray(W, dtype=float)))

    def program(self, level_index: int, rng: SeededRng) -> float:
        if self.off_state and level_index == self.table.n_levels:
            return float(sample_hrs(self.off_state, rng))
        return program_lrs(self.table, level_index, rng)


@dataclass
class HiddenWeights:
    W: np.ndarray
    level_index: np.ndarray
    programmed_ohm: np.ndarray
    grad_accum: np.ndarray = None

    def __post_init__(self):
        if self.grad_accum is None:
            self.grad_accum = np.zeros_like(self.W)

    def effective(self, grid: WeightGrid) -> np.ndarray:
        return grid.to_weight(self.programmed_ohm)


def quantize_all(W, s_w: float, table: LrsLevelTable, rng: SeededRng, off_state: HrsDistribution = None) -> HiddenWeights:
    grid = WeightGrid(table, s_w, off_state)
    W = np.array(W, dtype=float)
    level_index = grid.nearest(W)
    # programming order is synapse order so the device stream is reproducible
    programmed = np.array([grid.program(int(k), rng) for k in level_index], dtype=float)
    return HiddenWeights(W, level_index.astype(np.int64), programmed)


def reprogram(state: HiddenWeights, grid: WeightGrid, rng: SeededRng) -> int:
    """Redraw the devices whose nearest level changed; returns how many were reprogrammed."""
    target = grid.nearest(state.W)
    changed = np.flatnonzero(target != state.level_index)
    for j in changed:
        state.level_index[j] = target[j]
        state.programmed_ohm[j] = grid.program(int(target[j]), rng)
    return int(changed.size)


def train_quantized(config: NetworkConfig, dataset: WindowSet, state: HiddenWeights, grid: WeightGrid,
                    tcfg: TrainingSection, shuffle_rng: SeededRng, device_rng: SeededRng, metrics=None):
    rows = []
    if tcfg.n_training == 0:
        return state, rows
    if len(dataset) == 0:
        raise EvaluationError("cannot train on an empty dataset")
    W = torch.tensor(state.W, dtype=DTYPE, requires_grad=True)
    effective = torch.as_tensor(state.effective(grid), dtype=DTYPE)

    def straight_through(w):
        # value of the programmed devices, gradient of the hidden weights
        return w + (effective - w).detach()

    net = DendriticNet(config, tcfg.surrogate_slope)
    X, y = _tensors(dataset)
    optimizer = make_optimizer(tcfg, [W])
    for epoch in range(tcfg.n_training):
        loss, acc = _run_epoch(net, X, y, W, optimizer, tcfg, shuffle_rng, grid.w_max, straight_through,
                          "quantized", epoch, grad_accum=state.grad_accum)
        state.W = W.detach().numpy().copy()
        count = reprogram(state, grid, device_rng)
        effective = torch.as_tensor(state.effective(grid), dtype=DTYPE)
        rows.append(_epoch_row(metrics, "quantized", epoch, loss, acc, count))
    return state, rows


@dataclass
class TrainResult:
    network: NetworkConfig
    state: HiddenWeights
    grid: WeightGrid
    W_pre: np.ndarray
    decision_threshold: int
    metrics: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def effective_weights(self) -> np.ndarray:
        return self.state.effective(self.grid)


def _calibrated_threshold(config, weights, calib_set, tcfg):
    if not tcfg.select_threshold:
        return tcfg.decision_threshold
    counts, _ = simulate(config, calib_set.rasters, weights, slope=tcfg.surrogate_slope)
    threshold, _ = select_decision_threshold(counts, calib_set.labels, tcfg.threshold_candidates)
    return threshold


def run_training(cfg: ExperimentConfig, dataset: WindowSet, seed: int = None) -> TrainResult:
    """pretrain -> compute_scale -> quantize_all -> train_quantized, then calibrate and evaluate."""
    seed = cfg.seed if seed is None else seed
    tr = cfg.training
    device_rng = stream_rng(seed, "device")
    shuffle_rng = stream_rng(seed, "shuffle")

    net = network_from_config(cfg, seed, device_rng)
    stats = net.delay_stats()
    print(f"[train] {net.n_branches}x{cfg.network.synapses_per_branch} synapses, delay "
          f"min/mean/max {stats['min_ms']:.2f}/{stats['mean_ms']:.2f}/{stats['max_ms']:.2f} ms")
    sys.stdout.flush()

    train_split, test_split = dataset.train(), dataset.test()
    fit_set, calib_set = train_split.split_calibration(tr.val_fraction, shuffle_rng)

    metrics = []
    W_pre = pretrain(net, fit_set, tr, shuffle_rng, metrics=metrics)

    table = cfg.device.lrs_table()
    off_state = cfg.device.hrs_distribution() if cfg.device.lrs.hrs_off_level else None
    s_w = compute_scale(W_pre, table)
    grid = WeightGrid(table, s_w, off_state)
    state = quantize_all(W_pre, s_w, table, device_rng, off_state)
    print(f"[quantize] s_w={s_w:.6g} levels={grid.n_states} w_max={grid.w_max:.6g}")
    state, _ = train_quantized(net, fit_set, state, grid, tr, shuffle_rng, device_rng, metrics)

    w_eff = state.effective(grid)
    threshold = _calibrated_threshold(net, w_eff, calib_set, tr)
    fp_threshold = _calibrated_threshold(net, W_pre, calib_set, tr)

    eval_split = "test" if len(test_split) else "train"
    eval_set = test_split if len(test_split) else train_split
    fp = evaluate(net, W_pre, eval_set, fp_threshold, tr.surrogate_slope)
    quant = evaluate(net, w_eff, eval_set, threshold, tr.surrogate_slope)
    print(f"[train] {eval_split} balanced accuracy: full-precision {fp.accuracy:.4f}, quantized {quant.accuracy:.4f}")
    sys.stdout.flush()

    summary = {
        "config_hash": config_hash(cfg),
        "dataset_hash": content_hash(dataset),
        "seed": int(seed),
        "eval_split": eval_split,
        "fp_accuracy": fp.accuracy,
        "fp_decision_threshold": int(fp_threshold),
        "quantized_accuracy": quant.accuracy,
        "decision_threshold": int(threshold),
        "confusion": quant.to_dict()["confusion"],
        "s_w": s_w,
        "n_levels": grid.n_states,
        "footprint_bits": footprint_bits(net.n_synapses, grid.n_states),
        "delay_ms": stats,
        "reprogram_events": int(sum(r["reprogram_count"] for r in metrics)),
    }
    return TrainResult(net, state, grid, W_pre, int(threshold), metrics, summary)
