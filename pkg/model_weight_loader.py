"""
model.json: the programmed state of a trained network (delays, levels, programmed resistances).

Written with sorted keys and repr floats so identical runs give byte-identical files.
"""
import json
import os
from dataclasses import dataclass

import numpy as np

from errors import DataIOError, ParseError
from model.dendritic_net import BranchConfig, NetworkConfig, SomaConfig, SynapseConfig
from model.rram import DelayElement, HrsDistribution

MODEL_VERSION = 1
MODEL_FILE = "model.json"
REQUIRED = ("version", "dt_s", "channels", "soma", "branches", "synapses", "capacitance_f", "s_w",
            "level_index", "programmed_ohm", "hidden_weights", "n_levels", "decision_threshold")


def build_model_record(result, cfg_hash: str) -> dict:
    """Serializable form of a train.TrainResult."""
    net, state, grid = result.network, result.state, result.grid
    return {
        "version": MODEL_VERSION,
        "config_hash": cfg_hash,
        "dt_s": net.dt_s,
        "channels": net.channels,
        "soma": {"tau_mem_s": net.soma.tau_mem_s, "v_threshold": net.soma.v_threshold, "v_reset": net.soma.v_reset},
        "branches": [
            {"tau_s": br.tau_s,
             "hrs_median_ohm": br.hrs.median_ohm if br.hrs else None,
             "hrs_sigma_log": br.hrs.sigma_log if br.hrs else None}
            for br in net.branches
        ],
        "synapses": {
            "branch_index": net.branch_index.tolist(),
            "source_channel": net.source_channel.tolist(),
            "delay_steps": net.delay_steps.tolist(),
            "delay_resistance_ohm": net.delay_resistance_ohm.tolist(),
        },
        "capacitance_f": net.capacitance_f,
        "s_w": grid.s_w,
        "level_index": state.level_index.tolist(),
        "programmed_ohm": state.programmed_ohm.tolist(),
        "hidden_weights": state.W.tolist(),
        "n_levels": grid.n_states,
        "hrs_off_level": grid.off_state is not None,
        "decision_threshold": int(result.decision_threshold),
        "accuracy": result.summary.get("quantized_accuracy"),
    }


def save_model(record: dict, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"[save] {path}")


def load_model_record(path) -> dict:
    if not os.path.exists(path):
        raise DataIOError(f"model file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            record = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"corrupt model file ({e})", path)
    if not isinstance(record, dict) or not record:
        raise ParseError("empty model file", path)
    missing = [k for k in REQUIRED if k not in record]
    if missing:
        raise ParseError(f"model file lacks {', '.join(missing)}", path)
    if record["version"] != MODEL_VERSION:
        raise ParseError(f"unsupported model version {record['version']}", path)
    n = len(record["level_index"])
    syn = record["synapses"]
    lengths = {len(syn.get(k, ())) for k in ("branch_index", "source_channel", "delay_steps", "delay_resistance_ohm")}
    if lengths != {n} or len(record["programmed_ohm"]) != n or len(record["hidden_weights"]) != n:
        raise ParseError("per-synapse arrays disagree in length", path)
    return record


@dataclass
class LoadedModel:
    record: dict
    network: NetworkConfig

    @property
    def effective_weights(self) -> np.ndarray:
        return self.network.weights

    @property
    def decision_threshold(self) -> int:
        return int(self.record["decision_threshold"])


def effective_weights_of(record) -> np.ndarray:
    return (1.0 / np.asarray(record["programmed_ohm"], dtype=float)) / float(record["s_w"])


def load_model(path) -> LoadedModel:
    record = load_model_record(path)
    try:
        weights = effective_weights_of(record)
        syn = record["synapses"]
        cap = float(record["capacitance_f"])
        per_branch = [[] for _ in record["branches"]]
        for j, b in enumerate(syn["branch_index"]):
            r = syn["delay_resistance_ohm"][j]
            per_branch[b].append(SynapseConfig(
                branch_index=int(b),
                source_channel=int(syn["source_channel"][j]),
                delay_steps=int(syn["delay_steps"][j]),
                weight=float(weights[j]),
                delay=DelayElement(float(r), cap) if r is not None else None,
            ))
        branches = []
        for b, br in enumerate(record["branches"]):
            hrs = HrsDistribution(br["hrs_median_ohm"], br.get("hrs_sigma_log") or 0.0) if br.get("hrs_median_ohm") else None
            branches.append(BranchConfig(float(br["tau_s"]), tuple(per_branch[b]), hrs))
        soma = SomaConfig(**record["soma"])
        network = NetworkConfig(tuple(branches), soma, int(record["channels"]), float(record["dt_s"]), cap)
    except (KeyError, TypeError, IndexError, ValueError) as e:
        raise ParseError(f"invalid model contents ({e})", path)
    return LoadedModel(record, network)
