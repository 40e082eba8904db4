from src.report_formatter import format_report, report_data


def _record(n_levels, per_branch=64):
    n = 2 * per_branch
    return {
        "level_index": [0] * n,
        "n_levels": n_levels,
        "capacitance_f": 100e-15,
        "synapses": {"delay_resistance_ohm": [300e9] * per_branch + [500e9] * per_branch},
        "branches": [{"tau_s": 0.02, "hrs_median_ohm": 400e9, "hrs_sigma_log": 0.5},
                     {"tau_s": 0.1, "hrs_median_ohm": 400e9, "hrs_sigma_log": 0.5}],
        "decision_threshold": 1,
        "accuracy": 0.93,
    }


def test_footprint_eight_levels_flags_reference_gap():
    d = report_data(_record(8))
    assert d["synapses"] == 128
    assert d["footprint_bits"] == 384
    text = format_report(_record(8))
    assert "384 b" in text and "reference: 256 b" in text
    assert "note:" in text
    assert "matches 2 bit/synapse (4 levels), not 8 levels" in text
    assert "73 kb" in text and "64 kb" in text


def test_footprint_four_levels_matches_reference():
    text = format_report(_record(4))
    assert "256 b   reference: 256 b" in text
    assert "note:" not in text


def test_delay_statistics_and_hrs_mean():
    d = report_data(_record(8))
    assert abs(d["delay_min_ms"] - 30.0) < 1e-9
    assert abs(d["delay_mean_ms"] - 40.0) < 1e-9
    assert abs(d["delay_max_ms"] - 50.0) < 1e-9
    assert d["branch_hrs"][0]["mean_ohm"] > d["branch_hrs"][0]["median_ohm"]
    assert "mean" in format_report(_record(8))


def test_note_follows_the_synapse_count():
    text = format_report(_record(8, per_branch=32))
    assert "64 synapses x 3 bit = 192 b" in text
    assert "matches 4 bit/synapse (16 levels), not 8 levels" in text
    assert "2 bit/synapse" not in text


def test_note_when_reference_does_not_divide():
    text = format_report(_record(8, per_branch=3))
    assert "6 synapses x 3 bit = 18 b" in text
    assert "does not split into whole bits over 6 synapses" in text
