import json

import numpy as np
import pytest

from config import config_hash
from data.dataset import build_dataset
from errors import DataIOError, ParseError
from model_weight_loader import build_model_record, load_model, load_model_record, save_model
from predict import evaluate
from train import run_training


@pytest.fixture
def trained(tiny_config):
    ws = build_dataset(tiny_config)
    return tiny_config, ws, run_training(tiny_config, ws)


def test_reload_reproduces_accuracy(trained, tmp_path):
    cfg, ws, result = trained
    path = str(tmp_path / "model.json")
    save_model(build_model_record(result, config_hash(cfg)), path)
    model = load_model(path)
    assert np.array_equal(model.effective_weights, result.effective_weights)
    assert np.array_equal(model.network.delay_steps, result.network.delay_steps)
    res = evaluate(model.network, model.effective_weights, ws.test(), model.decision_threshold)
    assert res.accuracy == result.summary["quantized_accuracy"]


def test_record_contents(trained):
    cfg, _, result = trained
    record = build_model_record(result, config_hash(cfg))
    assert record["version"] == 1
    assert record["config_hash"] == config_hash(cfg)
    assert len(record["level_index"]) == 16
    assert record["n_levels"] == 8 and record["hrs_off_level"] is True
    assert all(0 <= k < 8 for k in record["level_index"])


def test_identical_records_serialize_identically(trained, tmp_path):
    cfg, _, result = trained
    a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    save_model(build_model_record(result, config_hash(cfg)), a)
    save_model(build_model_record(result, config_hash(cfg)), b)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_corrupt_and_missing_files(tmp_path):
    with pytest.raises(DataIOError):
        load_model_record(str(tmp_path / "none.json"))
    empty = tmp_path / "empty.json"
    empty.write_text("")
    with pytest.raises(ParseError):
        load_model_record(str(empty))
    blank = tmp_path / "blank.json"
    blank.write_text("{}")
    with pytest.raises(ParseError, match="empty"):
        load_model_record(str(blank))
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"version": 1, "dt_s": 0.001}))
    with pytest.raises(ParseError, match="lacks"):
        load_model_record(str(partial))


def test_version_and_length_checks(trained, tmp_path):
    cfg, _, result = trained
    record = build_model_record(result, config_hash(cfg))
    path = tmp_path / "m.json"
    path.write_text(json.dumps({**record, "version": 2}))
    with pytest.raises(ParseError, match="version"):
        load_model_record(str(path))
    path.write_text(json.dumps({**record, "programmed_ohm": record["programmed_ohm"][:-1]}))
    with pytest.raises(ParseError, match="length"):
        load_model_record(str(path))
