"""
Heartbeat recordings: the documented CSV schema and a synthetic two-class generator.

Recording CSV:   time_s,ch0_mv[,ch1_mv,...]   (uniform sampling, header row required)
Annotation CSV:  time_s,label                 (label: normal/anomalous or a beat code)
"""
import os

import numpy as np
import pandas as pd

from config import SynthSection
from data.encoding import AnalogTrace
from errors import DataIOError, ParseError

LABEL_ALIASES = {
    "normal": "normal", "N": "normal",
    "anomalous": "anomalous", "abnormal": "anomalous",
    "V": "anomalous", "A": "anomalous", "F": "anomalous", "S": "anomalous", "E": "anomalous", "J": "anomalous",
}
UNIFORM_TOL = 1e-3


def annotation_path_for(path):
    return os.path.splitext(path)[0] + ".annotations.csv"


def _read_csv(path, expected_first):
    if not os.path.exists(path):
        raise DataIOError(f"file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise ParseError(f"malformed CSV ({e})", path)
    except pd.errors.EmptyDataError:
        raise ParseError("empty file", path, 1)
    if not len(df.columns) or df.columns[0] != expected_first:
        raise ParseError(f"header must start with '{expected_first}'", path, 1)
    return df


def _numeric_column(df, col, path):
    # float() rather than pd.to_numeric: written values must read back bit-exact
    out = np.empty(len(df))
    for row, raw in enumerate(df[col]):
        try:
            out[row] = float(raw)
        except ValueError:
            raise ParseError(f"column '{col}': not a number: {raw!r}", path, row + 2)
        if not np.isfinite(out[row]):
            raise ParseError(f"column '{col}': non-finite value {raw!r}", path, row + 2)
    return out


def load_recording(path, annotation_path=None, format="csv"):
    if format != "csv":
        raise ParseError(f"unsupported recording format '{format}'", path)
    df = _read_csv(path, "time_s")
    channels = list(df.columns[1:])
    if not channels:
        raise ParseError("no channel columns after time_s", path, 1)
    for k, col in enumerate(channels):
        if col != f"ch{k}_mv":
            raise ParseError(f"expected column 'ch{k}_mv', got '{col}'", path, 1)
    if len(df) < 2:
        raise ParseError("need at least 2 samples to infer the sample period", path)

    t = _numeric_column(df, "time_s", path)
    samples = np.stack([_numeric_column(df, col, path) for col in channels])
    period = t[1] - t[0]
    if not (period > 0):
        raise ParseError("timestamps must increase", path, 3)
    off = np.flatnonzero(np.abs(np.diff(t) - period) > UNIFORM_TOL * period)
    if off.size:
        raise ParseError(f"non-uniform sampling (expected period {period} s)", path, int(off[0]) + 3)
    trace = AnalogTrace(float(period), samples)

    ann_path = annotation_path or annotation_path_for(path)
    ann = _read_csv(ann_path, "time_s")
    if "label" not in ann.columns:
        raise ParseError("annotation file needs a 'label' column", ann_path, 1)
    times = _numeric_column(ann, "time_s", ann_path) if len(ann) else np.array([])
    annotations = []
    for row, (time_s, raw) in enumerate(zip(times, ann["label"])):
        label = LABEL_ALIASES.get(raw.strip())
        if label is None:
            raise ParseError(f"unknown label {raw!r}", ann_path, row + 2)
        annotations.append((float(time_s), label))
    print(f"[load] {path}: {trace.n_samples} samples x {trace.channel_count} ch, {len(annotations)} annotations")
    return trace, annotations


def write_recording(path, trace: AnalogTrace, annotations, annotation_path=None):
    cols = {"time_s": np.arange(trace.n_samples) * trace.sample_period_s}
    for c in range(trace.channel_count):
        cols[f"ch{c}_mv"] = trace.samples[c]
    pd.DataFrame(cols).to_csv(path, index=False, float_format="%.17g")
    ann = pd.DataFrame({"time_s": [float(t) for t, _ in annotations], "label": [lb for _, lb in annotations]})
    ann.to_csv(annotation_path or annotation_path_for(path), index=False, float_format="%.17g")


def synth_ecg(n_beats, class_mix, rng, params: SynthSection = None):
    """
    One-channel train of beats at a fixed period. Each beat is a sharp first wave followed by a
    broader second wave; anomalous beats move the second wave later by anomaly_shift_s. Amplitude
    jitter hits every beat, so only the timing separates the classes.
    """
    p = params or SynthSection()
    period = 1.0 / p.sample_rate_hz
    per_beat = int(round(p.beat_period_s * p.sample_rate_hz))
    if n_beats <= 0:
        return AnalogTrace(period, np.zeros((1, 0))), []

    anomalous = rng.uniform(size=n_beats) < class_mix
    onsets = p.first_wave_s + rng.uniform(-p.onset_jitter_s, p.onset_jitter_s, size=n_beats)
    amp1 = p.first_amp_mv * (1 + p.amp_jitter * rng.uniform(-1, 1, size=n_beats))
    amp2 = p.second_amp_mv * (1 + p.amp_jitter * rng.uniform(-1, 1, size=n_beats))

    t = np.arange(per_beat) * period
    beats = np.empty((n_beats, per_beat))
    for k in range(n_beats):
        gap = p.normal_gap_s + (p.anomaly_shift_s if anomalous[k] else 0.0)
        first = amp1[k] * np.exp(-((t - onsets[k]) ** 2) / (2 * p.first_width_s ** 2))
        second = amp2[k] * np.exp(-((t - onsets[k] - gap) ** 2) / (2 * p.second_width_s ** 2))
        beats[k] = first + second
    signal = beats.reshape(-1) + p.noise_mv * rng.standard_normal(n_beats * per_beat)

    beat_s = per_beat * period
    annotations = [((k + 0.5) * beat_s, "anomalous" if anomalous[k] else "normal") for k in range(n_beats)]
    return AnalogTrace(period, signal[None, :]), annotations
