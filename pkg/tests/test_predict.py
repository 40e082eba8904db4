import numpy as np
import pytest

from errors import DomainError, EvaluationError
from predict import balanced_accuracy, evaluate, readout, select_decision_threshold

from conftest import make_window_set, random_network, random_rasters


def test_silent_network_on_one_normal_window():
    net = random_network(0).with_weights(np.zeros(16))
    ws = make_window_set(random_rasters(1), [0])
    res = evaluate(net, net.weights, ws, 1)
    assert res.accuracy == 1.0
    assert res.confusion.tolist() == [[1, 0], [0, 0]]
    assert res.to_dict()["confusion"] == {"tn": 1, "fp": 0, "fn": 0, "tp": 0}


def test_inverted_labels_mirror_accuracy():
    labels = np.array([0, 0, 0, 1, 1, 1, 1])
    predicted = np.array([0, 1, 0, 1, 1, 0, 1])
    a = balanced_accuracy(labels, predicted)
    assert balanced_accuracy(1 - labels, predicted) == pytest.approx(1 - a)


def test_evaluate_counts_spikes_against_threshold():
    net = random_network(1)
    ws = make_window_set(random_rasters(6, rate=0.2, seed=1), [0, 1, 0, 1, 0, 1])
    res = evaluate(net, net.weights, ws, 2)
    predicted = (res.spike_counts >= 2).astype(int)
    assert res.confusion.sum() == 6
    assert res.accuracy == pytest.approx(balanced_accuracy(ws.labels, predicted))


def test_empty_dataset():
    net = random_network(0)
    with pytest.raises(EvaluationError):
        evaluate(net, net.weights, make_window_set(np.zeros((0, 2, 10)), []), 1)


def test_threshold_selection_ties_to_smallest():
    counts = np.array([0, 0, 5, 5])
    labels = np.array([0, 0, 1, 1])
    best, scores = select_decision_threshold(counts, labels)
    assert best == 1
    assert all(scores[t] == 1.0 for t in range(1, 6))
    counts = np.array([2, 2, 4, 5])
    best, scores = select_decision_threshold(counts, labels, candidates=(1, 2, 3, 4, 5))
    assert best == 3
    assert scores[1] == 0.5


def test_threshold_sweep_matches_exhaustive_oracle():
    rng = np.random.default_rng(0)
    counts = rng.integers(0, 7, size=50)
    labels = rng.integers(0, 2, size=50)
    best, scores = select_decision_threshold(counts, labels)
    oracle = max(range(1, 6), key=lambda t: (balanced_accuracy(labels, (counts >= t).astype(int)), -t))
    assert best == oracle


def test_readout_goes_through_classify():
    assert readout([0, 1, 2, 5], 2).tolist() == [0, 0, 1, 1]
    assert readout(np.array([0.0, 1.0]), 1).tolist() == [0, 1]
    assert readout([], 1).tolist() == []
    with pytest.raises(DomainError):
        readout([3], 0)
