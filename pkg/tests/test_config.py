import json

import pytest

from config import (
    ExperimentConfig, config_hash, dump_config, load_config, load_device_config, parse_config, save_config,
)
from errors import ConfigError, DataIOError


def test_empty_config_is_all_defaults():
    cfg = parse_config({})
    assert cfg == ExperimentConfig()
    assert cfg.network.n_branches == 2 and cfg.network.synapses_per_branch == 64
    assert cfg.training.n_pre == 50 and cfg.training.n_training == 100
    assert len(cfg.sweep.hrs_median_ohm) == 7
    assert cfg.sweep.hrs_median_ohm[0] == pytest.approx(1e10)
    assert cfg.sweep.hrs_median_ohm[-1] == pytest.approx(1e12)


def test_round_trip(tmp_path):
    cfg = parse_config({"seed": 9, "device": {"lrs": {"levels": [{"mu_ohm": 1e4, "sigma_ohm": 10.0},
                                                                  {"mu_ohm": 3e4}]}}})
    assert parse_config(json.loads(dump_config(cfg))) == cfg
    path = tmp_path / "c.json"
    save_config(cfg, str(path))
    assert load_config(str(path)) == cfg
    assert config_hash(load_config(str(path))) == config_hash(cfg)
    assert config_hash(cfg) != config_hash(cfg.replace(seed=10))
    assert config_hash(cfg) == config_hash(cfg.replace(output_dir="elsewhere"))


def test_unknown_key_names_dotted_path():
    with pytest.raises(ConfigError, match="network.n_branchez"):
        parse_config({"network": {"n_branchez": 3}})


def test_wrong_types():
    with pytest.raises(ConfigError, match="training.n_pre"):
        parse_config({"training": {"n_pre": 1.5}})
    with pytest.raises(ConfigError):
        parse_config({"training": {"select_threshold": 1}})
    with pytest.raises(ConfigError):
        parse_config({"sweep": {"hrs_median_ohm": 1e11}})
    with pytest.raises(ConfigError):
        parse_config({"device": []})


def test_cross_field_validation():
    with pytest.raises(ConfigError):
        parse_config({"network": {"n_branches": 3}})
    with pytest.raises(ConfigError):
        parse_config({"network": {"channels": 4}})
    parse_config({"network": {"channels": 4}, "encoding": {"electrodes": 2}})
    with pytest.raises(ConfigError):
        parse_config({"seed": -1})
    with pytest.raises(ConfigError):
        parse_config({"training": {"optimizer": "rmsprop"}})
    with pytest.raises(ConfigError):
        parse_config({"encoding": {"source": "wfdb"}})


def test_device_tables():
    cfg = parse_config({})
    table = cfg.device.lrs_table()
    # seven LRS levels plus the HRS off state
    assert cfg.device.lrs.hrs_off_level and table.n_levels == 7
    all_lrs = parse_config({"device": {"lrs": {"hrs_off_level": False}}})
    assert all_lrs.device.lrs_table().n_levels == 8
    assert cfg.device.hrs_distribution(1e11).median_ohm == 1e11
    custom = parse_config({"device": {"lrs": {"levels": [{"mu_ohm": 1e4, "sigma_ohm": 0.0}, {"mu_ohm": 2e4}]}}})
    assert custom.device.lrs_table().mu_ohm.tolist() == [1e4, 2e4]


def test_load_errors(tmp_path):
    with pytest.raises(DataIOError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_device_config_file(tmp_path):
    path = tmp_path / "device.json"
    path.write_text(json.dumps({"hrs": {"median_ohm": 5e11, "sigma_log": 0.3, "label": "-1.2V"},
                                "capacitance_f": 2e-13}))
    dev = load_device_config(str(path))
    assert dev.hrs.median_ohm == 5e11 and dev.hrs.label == "-1.2V"
    assert dev.capacitance_f == 2e-13
    path.write_text(json.dumps({"hrs": {"mean_ohm": 1.0}}))
    with pytest.raises(ConfigError, match="device.hrs.mean_ohm"):
        load_device_config(str(path))


def test_sweep_grid_must_not_be_empty():
    with pytest.raises(ConfigError, match="sweep.hrs_median_ohm"):
        parse_config({"sweep": {"hrs_median_ohm": []}})
    with pytest.raises(ConfigError, match="sweep.hrs_median_ohm"):
        parse_config({"sweep": {"hrs_median_ohm": [1e11, 0.0]}})
    assert parse_config({"sweep": {"hrs_median_ohm": [4e11]}}).sweep.hrs_median_ohm == (4e11,)


def test_off_level_needs_two_lrs_levels():
    with pytest.raises(ConfigError, match="n_levels"):
        parse_config({"device": {"lrs": {"n_levels": 2}}})
    assert parse_config({"device": {"lrs": {"n_levels": 2, "hrs_off_level": False}}}).device.lrs_table().n_levels == 2
