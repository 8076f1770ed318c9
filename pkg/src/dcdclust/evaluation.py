"""Hard cluster readout and purity scoring."""

import numpy as np

from .errors import InvalidInputError

__all__ = ["hard_labels", "contingency", "purity"]


def hard_labels(W):
    """Most probable cluster of every row; ties go to the smallest index."""
    return np.argmax(np.asarray(W), axis=1)


def _labels(x, what):
    x = np.asarray(x)
    if x.ndim != 1:
        raise InvalidInputError(f"{what} must be a 1-D label vector")
    if not np.issubdtype(x.dtype, np.integer) and not np.all(x == np.round(x)):
        raise InvalidInputError(f"{what} must hold integers")
    x = x.astype(np.int64)
    if x.size and x.min() < 0:
        raise InvalidInputError(f"{what} must be nonnegative")
    return x


def contingency(pred, truth):
    """Counts ``n_k^l`` of samples in cluster ``k`` with class ``l``."""
    pred, truth = _labels(pred, "prediction"), _labels(truth, "ground truth")
    if pred.shape != truth.shape:
        raise InvalidInputError(f"{pred.size} predicted labels but {truth.size} ground-truth classes")
    if pred.size == 0:
        raise InvalidInputError("cannot score an empty clustering")
    table = np.zeros((pred.max() + 1, truth.max() + 1), dtype=np.int64)
    np.add.at(table, (pred, truth), 1)
    return table


def purity(pred, truth):
    """Fraction of samples belonging to the majority class of their cluster."""
    table = contingency(pred, truth)
    return table.max(axis=1).sum() / table.sum()
