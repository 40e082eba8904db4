import numpy as np
import pytest

from data.encoding import AnalogTrace, LabeledWindow, SpikeRaster, delta_modulate, reconstruct, segment_beats, step_of
from errors import DomainError


def test_ramp_gives_one_up_spike_per_bin():
    trace = AnalogTrace(1e-3, 0.125 * np.arange(20))
    raster = delta_modulate(trace, 0.125, 1e-3)
    assert raster.channels == 2
    assert raster.duration_steps == 20
    assert raster.spikes[0, 0] == 0
    assert np.all(raster.spikes[0, 1:] == 1)
    assert not raster.spikes[1].any()


@pytest.mark.parametrize("threshold", [0.1, 0.3, 0.05])
def test_exact_ramp_counts_every_threshold_crossing(threshold):
    for k in range(1, 200):
        x = threshold * np.arange(k + 1)
        raster = delta_modulate(AnalogTrace(1e-3, x), threshold, 1e-3)
        assert raster.spikes[0].sum() == k, k
        assert raster.spikes[1].sum() == 0
        assert reconstruct(raster, x[0], threshold)[-1] == pytest.approx(x[-1])


def test_falling_step_goes_to_down_channel():
    trace = AnalogTrace(1e-3, [0.0, 0.0] + [-0.5] * 10)
    raster = delta_modulate(trace, 0.1, 1e-3)
    # one event per bin, the level catches up over the following bins
    assert raster.spikes[1].tolist() == [0, 0, 1, 1, 1, 1, 1] + [0] * 5
    assert not raster.spikes[0].any()


def test_dropped_events_leave_level_and_spikes_consistent():
    x = np.array([0.0, 0.3] + [0.3] * 20)
    raster = delta_modulate(AnalogTrace(1e-3, x), 0.1, 1e-3)
    assert raster.spikes[0].sum() == 3
    level = reconstruct(raster, x[0], 0.1)
    assert level[-1] == pytest.approx(0.3)


def test_up_minus_down_telescopes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = np.cumsum(rng.normal(0, 0.08, 400))
        x = np.concatenate([x, np.full(100, x[-1])])
        raster = delta_modulate(AnalogTrace(1e-3, x), 0.1, 1e-3)
        net = int(raster.spikes[0].sum()) - int(raster.spikes[1].sum())
        assert abs(net - round((x[-1] - x[0]) / 0.1)) <= 1


def test_negated_trace_swaps_up_and_down():
    rng = np.random.default_rng(5)
    x = np.cumsum(rng.normal(0, 0.15, (2, 300)), axis=1)
    pos = delta_modulate(AnalogTrace(1e-3, x), 0.1, 1e-3).spikes
    neg = delta_modulate(AnalogTrace(1e-3, -x), 0.1, 1e-3).spikes
    assert np.array_equal(pos[0::2], neg[1::2])
    assert np.array_equal(pos[1::2], neg[0::2])


def test_constant_trace_is_silent():
    raster = delta_modulate(AnalogTrace(1e-3, np.full((2, 50), 0.7)), 0.1, 1e-3)
    assert raster.channels == 4
    assert not raster.spikes.any()


def test_reconstruction_tracks_slow_signal():
    t = np.arange(1000) * 1e-3
    x = np.sin(2 * np.pi * 5 * t)
    raster = delta_modulate(AnalogTrace(1e-3, x), 0.1, 1e-3)
    level = reconstruct(raster, x[0], 0.1)
    assert np.max(np.abs(level - x)) < 0.1


def test_coarser_dt_collapses_samples():
    trace = AnalogTrace(1e-3, 0.25 * np.arange(10))
    raster = delta_modulate(trace, 0.1, 2e-3)
    assert raster.duration_steps == 5
    assert np.all(raster.spikes[0, 1:] == 1)


def test_invalid_parameters():
    trace = AnalogTrace(1e-3, np.zeros(5))
    with pytest.raises(DomainError):
        delta_modulate(trace, 0.0, 1e-3)
    with pytest.raises(DomainError):
        delta_modulate(trace, 0.1, 1e-4)
    with pytest.raises(DomainError):
        AnalogTrace(0.0, np.zeros(3))
    with pytest.raises(DomainError):
        SpikeRaster(1e-3, np.full((2, 3), 2))


def test_step_of_guards_float_error():
    assert step_of(3 * 0.1, 0.1) == 3
    assert step_of(0.0, 1e-3) == 0


def test_segment_beats_centres_windows_and_drops_edges():
    raster = SpikeRaster(1e-3, np.zeros((2, 2000), dtype=np.uint8))
    ann = [(0.1, "normal"), (0.5, "anomalous"), (1.0, "normal"), (1.9, "normal")]
    windows = segment_beats(raster, ann, 0.7)
    assert [w.window_id for w in windows] == [1, 2]
    assert all(w.raster.duration_steps == 700 for w in windows)
    assert windows[0].label == "anomalous" and windows[0].target == 1
    assert windows[1].center_s == 1.0


def test_segment_beats_copies_the_right_bins():
    spikes = np.zeros((2, 1000), dtype=np.uint8)
    spikes[0, 500] = 1
    windows = segment_beats(SpikeRaster(1e-3, spikes), [(0.5, "normal")], 0.7)
    assert windows[0].raster.spikes[0, 350] == 1
    assert windows[0].raster.spikes.sum() == 1


def test_segment_beats_rejects_out_of_range_annotations():
    raster = SpikeRaster(1e-3, np.zeros((2, 100), dtype=np.uint8))
    with pytest.raises(DomainError):
        segment_beats(raster, [(0.5, "normal")], 0.05)
    with pytest.raises(DomainError):
        segment_beats(raster, [(-0.01, "normal")], 0.05)


def test_labeled_window_validation():
    raster = SpikeRaster(1e-3, np.zeros((2, 10), dtype=np.uint8))
    with pytest.raises(DomainError):
        LabeledWindow(raster, "weird")
    with pytest.raises(DomainError):
        LabeledWindow(SpikeRaster(1e-3, np.zeros((2, 0), dtype=np.uint8)), "normal")
