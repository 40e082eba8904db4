import json
import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from config import parse_config  # noqa: E402
from data.dataset import WindowSet  # noqa: E402
from model.dendritic_net import BranchConfig, NetworkConfig, SomaConfig, SynapseConfig  # noqa: E402

TINY = {
    "encoding": {"n_beats": 20},
    "network": {"synapses_per_branch": 8},
    "training": {"n_pre": 1, "n_training": 1},
    "sweep": {"hrs_median_ohm": [1e11, 4e11], "repetitions": 1},
}


def build_network(synapses, tau_s=(0.02,), channels=2, soma=None, dt_s=1e-3):
    """synapses: (branch, channel, delay_steps, weight) tuples."""
    per_branch = [[] for _ in tau_s]
    for b, c, d, w in synapses:
        per_branch[b].append(SynapseConfig(b, c, d, w))
    branches = tuple(BranchConfig(t, tuple(s)) for t, s in zip(tau_s, per_branch))
    return NetworkConfig(branches, soma or SomaConfig(), channels, dt_s)


def random_network(seed=0, n_branches=2, per_branch=8, channels=2, max_delay=50, soma=None):
    rng = np.random.default_rng(seed)
    syn = [(b, j % channels, int(rng.integers(0, max_delay + 1)), float(rng.uniform(0, 1)))
           for b in range(n_branches) for j in range(per_branch)]
    return build_network(syn, tau_s=(0.02, 0.1)[:n_branches] if n_branches <= 2 else (0.05,) * n_branches,
                         channels=channels, soma=soma)


def random_rasters(n, channels=2, steps=200, rate=0.05, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.uniform(size=(n, channels, steps)) < rate).astype(np.uint8)


def make_window_set(rasters, labels, is_test=None, dt_s=1e-3):
    rasters = np.asarray(rasters, dtype=np.uint8)
    n = len(rasters)
    return WindowSet(dt_s, rasters, np.asarray(labels, dtype=np.int64), np.arange(n, dtype=np.int64),
                     np.zeros(n), np.zeros(n, dtype=bool) if is_test is None else np.asarray(is_test, dtype=bool))


@pytest.fixture
def tiny_config():
    return parse_config(json.loads(json.dumps(TINY)))


@pytest.fixture
def tiny_config_path(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(TINY))
    return str(path)
