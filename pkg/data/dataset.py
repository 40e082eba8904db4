"""
Encoded beat datasets: windows stacked into arrays, a stratified train/test split and the
dataset.npz + manifest.json pair written by `prepare`.
"""
import hashlib
import json
import os
import zipfile
from dataclasses import dataclass, field

import numpy as np

from config import ExperimentConfig
from data.ecg import load_recording, synth_ecg
from data.encoding import LABELS, LABEL_CODE, LabeledWindow, SpikeRaster, delta_modulate, segment_beats
from errors import ConfigError, DataIOError, ParseError
from model.rram import SeededRng, stream_rng

MANIFEST_VERSION = 1
DATASET_FILE = "dataset.npz"
MANIFEST_FILE = "manifest.json"
SPLITS = ("train", "test")


@dataclass(eq=False)
class WindowSet:
    dt_s: float
    rasters: np.ndarray          # uint8 [window, channel, step]
    labels: np.ndarray           # int64, 0 normal / 1 anomalous
    ids: np.ndarray
    centers_s: np.ndarray
    is_test: np.ndarray          # bool
    generator: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.labels)

    @property
    def channels(self) -> int:
        return self.rasters.shape[1]

    @property
    def window_steps(self) -> int:
        return self.rasters.shape[2]

    def subset(self, mask) -> "WindowSet":
        mask = np.asarray(mask)
        return WindowSet(self.dt_s, self.rasters[mask], self.labels[mask], self.ids[mask],
                         self.centers_s[mask], self.is_test[mask], dict(self.generator))

    def train(self) -> "WindowSet":
        return self.subset(~self.is_test)

    def test(self) -> "WindowSet":
        return self.subset(self.is_test)

    def class_counts(self) -> dict:
        return {lb: int(np.sum(self.labels == LABEL_CODE[lb])) for lb in LABELS}

    def windows(self):
        for k in range(len(self)):
            yield LabeledWindow(SpikeRaster(self.dt_s, self.rasters[k]), LABELS[self.labels[k]],
                                int(self.ids[k]), float(self.centers_s[k]))

    def split_calibration(self, fraction: float, rng: SeededRng):
        """Hold out `fraction` of each class for threshold calibration; returns (fit, calibration)."""
        if fraction <= 0:
            return self, self
        hold = stratified_mask(self.labels, fraction, rng)
        return self.subset(~hold), self.subset(hold)

    @classmethod
    def from_windows(cls, windows, dt_s, channels, window_steps, is_test=None, generator=None):
        n = len(windows)
        rasters = np.zeros((n, channels, window_steps), dtype=np.uint8)
        for k, w in enumerate(windows):
            rasters[k] = w.raster.spikes
        return cls(
            dt_s=dt_s,
            rasters=rasters,
            labels=np.array([w.target for w in windows], dtype=np.int64),
            ids=np.array([w.window_id for w in windows], dtype=np.int64),
            centers_s=np.array([w.center_s for w in windows], dtype=float),
            is_test=np.zeros(n, dtype=bool) if is_test is None else np.asarray(is_test, dtype=bool),
            generator=generator or {},
        )


def stratified_mask(labels, fraction, rng: SeededRng):
    """Boolean mask picking round(fraction * n_c) windows of every class c."""
    labels = np.asarray(labels)
    mask = np.zeros(len(labels), dtype=bool)
    for code in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == code)
        n_pick = int(round(fraction * len(idx)))
        mask[idx[rng.permutation(len(idx))[:n_pick]]] = True
    return mask


def build_dataset(cfg: ExperimentConfig, seed=None) -> WindowSet:
    enc, net = cfg.encoding, cfg.network
    seed = cfg.seed if seed is None else seed
    rng = stream_rng(seed, "data")
    if enc.source == "synthetic":
        trace, annotations = synth_ecg(enc.n_beats, enc.class_mix, rng, enc.synth)
        generator = {"source": "synthetic", "seed": int(seed), "n_beats": enc.n_beats, "class_mix": enc.class_mix}
    else:
        if not enc.recording_path:
            raise ConfigError("encoding.recording_path is required when encoding.source is 'csv'")
        trace, annotations = load_recording(enc.recording_path, enc.annotation_path or None)
        generator = {"source": "csv", "recording_path": enc.recording_path}
    if trace.channel_count != enc.electrodes:
        raise ConfigError(f"recording has {trace.channel_count} electrodes, encoding.electrodes is {enc.electrodes}")

    raster = delta_modulate(trace, enc.threshold_mv, net.dt_s)
    windows = segment_beats(raster, annotations, enc.window_s)
    window_steps = int(round(enc.window_s / net.dt_s))
    generator.update({"threshold_mv": enc.threshold_mv, "window_s": enc.window_s, "test_fraction": enc.test_fraction})

    ws = WindowSet.from_windows(windows, net.dt_s, 2 * trace.channel_count, window_steps, generator=generator)
    ws.is_test = stratified_mask(ws.labels, enc.test_fraction, rng)
    print(f"[prepare] {len(ws)} windows {ws.class_counts()} train={int((~ws.is_test).sum())} test={int(ws.is_test.sum())}")
    return ws


def content_hash(ws: WindowSet) -> str:
    h = hashlib.sha1()
    h.update(repr(float(ws.dt_s)).encode())
    h.update(repr(ws.rasters.shape).encode())
    for arr in (ws.rasters, ws.labels, ws.ids, ws.is_test):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def manifest_of(ws: WindowSet) -> dict:
    return {
        "version": MANIFEST_VERSION,
        "dt_s": ws.dt_s,
        "channels": ws.channels,
        "window_steps": ws.window_steps,
        "n_windows": len(ws),
        "class_counts": ws.class_counts(),
        "split_counts": {"train": int((~ws.is_test).sum()), "test": int(ws.is_test.sum())},
        "windows": [
            {"id": int(i), "label": LABELS[lb], "split": SPLITS[int(t)], "center_s": float(c)}
            for i, lb, t, c in zip(ws.ids, ws.labels, ws.is_test, ws.centers_s)
        ],
        "generator": ws.generator,
        "content_hash": content_hash(ws),
    }


def save_dataset(ws: WindowSet, out_dir) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    np.savez_compressed(os.path.join(out_dir, DATASET_FILE), rasters=ws.rasters, labels=ws.labels,
                        ids=ws.ids, centers_s=ws.centers_s, is_test=ws.is_test, dt_s=np.array(ws.dt_s))
    manifest = manifest_of(ws)
    with open(os.path.join(out_dir, MANIFEST_FILE), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def load_dataset(out_dir) -> WindowSet:
    data_path = os.path.join(out_dir, DATASET_FILE)
    manifest_path = os.path.join(out_dir, MANIFEST_FILE)
    for path in (data_path, manifest_path):
        if not os.path.exists(path):
            raise DataIOError(f"prepared dataset not found: {path} (run `prepare` first)")
    try:
        with open(manifest_path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
        with np.load(data_path) as z:
            ws = WindowSet(float(z["dt_s"]), z["rasters"], z["labels"], z["ids"], z["centers_s"],
                           z["is_test"], manifest.get("generator", {}))
    except (ValueError, KeyError, OSError, zipfile.BadZipFile) as e:
        raise ParseError(f"corrupt dataset ({e})", out_dir)
    if manifest.get("content_hash") != content_hash(ws):
        raise ParseError("dataset content does not match manifest hash", manifest_path)
    return ws
