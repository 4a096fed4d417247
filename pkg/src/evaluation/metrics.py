from typing import Dict, Optional, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix as sk_confusion_matrix

from src.schemas.records import ClassificationMetrics
from src.utils.errors import InvalidArgumentError, UndefinedMetricError


def confusion(y_true, y_pred, class_count: int) -> np.ndarray:
    """
    M x M confusion matrix, rows are true classes and columns predicted classes.

    Every class in [0, class_count) gets a row and a column even when absent from both label vectors.
    """
    y_true = np.asarray(y_true, dtype=int).ravel()
    y_pred = np.asarray(y_pred, dtype=int).ravel()
    if y_true.size != y_pred.size:
        raise InvalidArgumentError(f'{y_true.size} true labels for {y_pred.size} predictions')
    if y_true.size == 0:
        return np.zeros((class_count, class_count), dtype=int)
    return sk_confusion_matrix(y_true, y_pred, labels=list(range(class_count)))


def _as_matrix(cm) -> np.ndarray:
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] < 2:
        raise InvalidArgumentError(f'A confusion matrix should be square with at least 2 classes, got shape {cm.shape}')
    if np.any(cm < 0):
        raise InvalidArgumentError('Confusion matrix counts should be non-negative')
    return cm.astype(float)


def balanced_accuracy(cm) -> float:
    """
    Mean per-class recall.

    Raises:
        UndefinedMetricError: If a true class has no samples.
    """
    cm = _as_matrix(cm)
    support = cm.sum(axis=1)
    if np.any(support == 0):
        empty = [int(c) for c in np.flatnonzero(support == 0)]
        raise UndefinedMetricError(f'Balanced accuracy is undefined, classes {empty} have no samples')
    return float(np.sum(np.diag(cm) / support) / cm.shape[0])


def bacc_score(y_true, y_pred, class_count: int, default: float = float('nan')) -> float:
    """Balanced accuracy from labels, `default` when a class is missing from y_true."""
    try:
        return balanced_accuracy(confusion(y_true, y_pred, class_count))
    except UndefinedMetricError:
        return default


def _one_vs_rest(cm: np.ndarray, positive: int) -> Tuple[float, float]:
    tp = cm[positive, positive]
    fn = cm[positive].sum() - tp
    fp = cm[:, positive].sum() - tp
    tn = cm.sum() - tp - fn - fp
    if tp + fn == 0 or tn + fp == 0:
        raise UndefinedMetricError(f'Sensitivity/specificity undefined for class {positive}: zero denominator')
    return float(tp / (tp + fn)), float(tn / (tn + fp))


def sensitivity_specificity(cm, positive_class: Optional[int] = None) -> Tuple[float, float]:
    """
    Sensitivity and specificity.

    Binary matrices use `positive_class` (default 1). With more classes and no positive class,
    the result is the macro average of every one-vs-rest reduction.
    """
    cm = _as_matrix(cm)
    classes = cm.shape[0]
    if positive_class is not None:
        if not 0 <= positive_class < classes:
            raise InvalidArgumentError(f'positive_class should lie in [0, {classes})')
        return _one_vs_rest(cm, positive_class)
    if classes == 2:
        return _one_vs_rest(cm, 1)
    pairs = [_one_vs_rest(cm, c) for c in range(classes)]
    return float(np.mean([se for se, _ in pairs])), float(np.mean([sp for _, sp in pairs]))


def pairwise_confusion(cm) -> Dict[Tuple[int, int], int]:
    """Errors between each unordered class pair, cm[i][j] + cm[j][i] for i < j."""
    cm = np.asarray(cm)
    classes = cm.shape[0]
    return {(i, j): int(cm[i, j] + cm[j, i]) for i in range(classes) for j in range(i + 1, classes)}


def evaluate(y_true, y_pred, class_count: int) -> ClassificationMetrics:
    """BAcc, Se, Sp and the confusion matrix; undefined values are reported as NaN."""
    cm = confusion(y_true, y_pred, class_count)
    try:
        bacc = balanced_accuracy(cm)
    except UndefinedMetricError:
        bacc = float('nan')
    try:
        sensitivity, specificity = sensitivity_specificity(cm)
    except UndefinedMetricError:
        sensitivity = specificity = float('nan')
    return ClassificationMetrics(bacc=bacc, sensitivity=sensitivity, specificity=specificity, confusion=cm.tolist())
