import sys
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import confusion_matrix

from data.encoding import LABEL_CODE
from errors import EvaluationError
from model.dendritic_net import NetworkConfig, classify, simulate

DEFAULT_CANDIDATES = (1, 2, 3, 4, 5)


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray        # rows true (normal, anomalous), cols predicted
    spike_counts: np.ndarray
    decision_threshold: int

    def to_dict(self):
        tn, fp, fn, tp = (int(v) for v in self.confusion.ravel())
        return {
            "balanced_accuracy": float(self.accuracy),
            "decision_threshold": int(self.decision_threshold),
            "confusion": {"tn": tn, "fp": fp, "fn": fn, "tp": tp},
            "n_windows": int(self.spike_counts.size),
        }


def balanced_accuracy(labels, predicted) -> float:
    """Mean per-class recall over the classes present in `labels`."""
    cm = confusion_matrix(labels, predicted, labels=[0, 1])
    support = cm.sum(axis=1)
    recalls = [cm[k, k] / support[k] for k in range(2) if support[k] > 0]
    return float(np.mean(recalls))


def readout(spike_counts, decision_threshold: int = 1) -> np.ndarray:
    """Label code per window through the soma classifier."""
    counts = np.asarray(spike_counts).astype(np.int64).ravel()
    return np.fromiter((LABEL_CODE[classify(int(c), decision_threshold)] for c in counts), dtype=np.int64,
                       count=counts.size)


def evaluate(config: NetworkConfig, weights, dataset, decision_threshold: int = 1, slope: float = 10.0) -> EvalResult:
    """Spike-count readout over a WindowSet: anomalous iff count >= decision_threshold."""
    if len(dataset) == 0:
        raise EvaluationError("cannot evaluate an empty dataset")
    if decision_threshold < 1:
        raise EvaluationError(f"decision threshold must be >= 1, got {decision_threshold}")
    counts, _ = simulate(config, dataset.rasters, weights, slope=slope)
    labels = np.asarray(dataset.labels)
    predicted = readout(counts, decision_threshold)
    cm = confusion_matrix(labels, predicted, labels=[0, 1])
    return EvalResult(balanced_accuracy(labels, predicted), cm, counts, decision_threshold)


def select_decision_threshold(spike_counts, labels, candidates=DEFAULT_CANDIDATES):
    """Candidate with the highest balanced accuracy, ties to the smallest; returns (threshold, scores)."""
    if len(labels) == 0:
        raise EvaluationError("cannot calibrate a decision threshold on an empty split")
    counts = np.asarray(spike_counts)
    scores = {int(t): balanced_accuracy(labels, readout(counts, t)) for t in sorted(set(candidates))}
    best = max(scores, key=lambda t: (scores[t], -t))
    print(f"[threshold] {best} (balanced acc {scores[best]:.4f}) from {scores}")
    sys.stdout.flush()
    return best, scores
