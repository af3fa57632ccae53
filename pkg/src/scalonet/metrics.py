"""Classification metrics and confusion-matrix arithmetic.

Precision and recall are macro-averaged (unweighted class means).  A class
that is never predicted contributes precision 0, and a class with no true
samples contributes recall 0; both cases emit a warning since they usually
indicate an imbalanced or degenerate evaluation set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    loss: float
    accuracy: float
    macro_precision: float
    macro_recall: float


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal length")
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (y_true, y_pred), 1)
    return conf


def macro_precision_recall(conf: np.ndarray) -> tuple[float, float]:
    diag = np.diag(conf).astype(np.float64)
    pred_totals = conf.sum(axis=0).astype(np.float64)
    true_totals = conf.sum(axis=1).astype(np.float64)
    if np.any(pred_totals == 0):
        warnings.warn(
            f"classes {np.flatnonzero(pred_totals == 0).tolist()} were never "
            "predicted; their precision counts as 0",
            stacklevel=2,
        )
    if np.any(true_totals == 0):
        warnings.warn(
            f"classes {np.flatnonzero(true_totals == 0).tolist()} have no true "
            "samples; their recall counts as 0",
            stacklevel=2,
        )
    precision = np.divide(diag, pred_totals, out=np.zeros_like(diag), where=pred_totals > 0)
    recall = np.divide(diag, true_totals, out=np.zeros_like(diag), where=true_totals > 0)
    return float(precision.mean()), float(recall.mean())


def metrics_from_confusion(conf: np.ndarray, mean_loss: float) -> Metrics:
    total = conf.sum()
    accuracy = float(np.trace(conf) / total) if total else 0.0
    precision, recall = macro_precision_recall(conf)
    return Metrics(
        loss=float(mean_loss),
        accuracy=accuracy,
        macro_precision=precision,
        macro_recall=recall,
    )
