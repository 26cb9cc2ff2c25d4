"""Confusion counts and the four threshold metrics, with +1 as the positive class."""

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricSet:
    """Metrics in [0, 1]; ``None`` marks a metric whose denominator is zero."""

    accuracy: float
    sensitivity: float
    specificity: float
    precision: float

    def to_dict(self):
        return asdict(self)


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    for arr in (y_true, y_pred):
        if not np.all(np.isin(arr, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
    pos, neg = y_true == 1, y_true == -1
    return ConfusionCounts(
        tp=int(np.count_nonzero(pos & (y_pred == 1))),
        tn=int(np.count_nonzero(neg & (y_pred == -1))),
        fp=int(np.count_nonzero(neg & (y_pred == 1))),
        fn=int(np.count_nonzero(pos & (y_pred == -1))),
    )


def _ratio(num, den):
    return num / den if den > 0 else None


def metrics(c):
    if c.total <= 0:
        raise ValueError("no evaluated samples")
    return MetricSet(
        accuracy=(c.tp + c.tn) / c.total,
        sensitivity=_ratio(c.tp, c.tp + c.fn),
        specificity=_ratio(c.tn, c.fp + c.tn),
        precision=_ratio(c.tp, c.tp + c.fp),
    )


def evaluate(y_true, y_pred):
    return metrics(confusion(y_true, y_pred))
