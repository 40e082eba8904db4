import json
import os

import numpy as np
import pytest

from config import parse_config
from data.dataset import build_dataset, content_hash, load_dataset, save_dataset, stratified_mask
from data.ecg import write_recording
from data.encoding import AnalogTrace
from errors import ConfigError, DataIOError, ParseError
from model.rram import SeededRng


def test_synthetic_dataset_shape_and_split(tiny_config):
    ws = build_dataset(tiny_config)
    assert len(ws) == 20
    assert ws.rasters.shape == (20, 2, 700)
    counts = ws.class_counts()
    assert counts["normal"] + counts["anomalous"] == 20
    for code in (0, 1):
        n_c = int((ws.labels == code).sum())
        assert int((ws.is_test & (ws.labels == code)).sum()) == int(round(0.2 * n_c))


def test_same_seed_same_hash(tiny_config):
    assert content_hash(build_dataset(tiny_config)) == content_hash(build_dataset(tiny_config))
    other = build_dataset(tiny_config.replace(seed=1))
    assert content_hash(other) != content_hash(build_dataset(tiny_config))


def test_save_load_round_trip(tiny_config, tmp_path):
    ws = build_dataset(tiny_config)
    manifest = save_dataset(ws, str(tmp_path))
    assert manifest["n_windows"] == 20
    assert manifest["split_counts"]["train"] + manifest["split_counts"]["test"] == 20
    assert len(manifest["windows"]) == 20
    back = load_dataset(str(tmp_path))
    assert np.array_equal(back.rasters, ws.rasters)
    assert np.array_equal(back.is_test, ws.is_test)
    assert content_hash(back) == manifest["content_hash"]


def test_tampered_manifest_is_rejected(tiny_config, tmp_path):
    save_dataset(build_dataset(tiny_config), str(tmp_path))
    path = tmp_path / "manifest.json"
    manifest = json.loads(path.read_text())
    manifest["content_hash"] = "0" * 40
    path.write_text(json.dumps(manifest))
    with pytest.raises(ParseError):
        load_dataset(str(tmp_path))


def test_missing_dataset(tmp_path):
    with pytest.raises(DataIOError):
        load_dataset(str(tmp_path / "none"))


def test_csv_source(tmp_path):
    rng = np.random.default_rng(0)
    trace = AnalogTrace(1e-3, rng.normal(scale=0.3, size=(1, 3000)))
    rec = str(tmp_path / "rec.csv")
    write_recording(rec, trace, [(0.5, "normal"), (1.5, "V"), (2.9, "normal")])
    cfg = parse_config({"encoding": {"source": "csv", "recording_path": rec, "test_fraction": 0.0}})
    ws = build_dataset(cfg)
    # the last beat is cut by the recording end
    assert len(ws) == 2
    assert ws.labels.tolist() == [0, 1]
    assert ws.generator["source"] == "csv"


def test_csv_source_needs_a_path():
    with pytest.raises(ConfigError):
        build_dataset(parse_config({"encoding": {"source": "csv"}}))


def test_stratified_mask_rounds_per_class():
    labels = np.array([0] * 10 + [1] * 5)
    mask = stratified_mask(labels, 0.2, SeededRng(0))
    assert mask[labels == 0].sum() == 2
    assert mask[labels == 1].sum() == 1


def test_calibration_split(tiny_config):
    ws = build_dataset(tiny_config).train()
    fit, calib = ws.split_calibration(0.0, SeededRng(0))
    assert fit is ws and calib is ws
    fit, calib = ws.split_calibration(0.5, SeededRng(0))
    assert len(fit) + len(calib) == len(ws)
    assert not set(fit.ids.tolist()) & set(calib.ids.tolist())
