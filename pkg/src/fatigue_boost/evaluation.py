"""Train/test splitting, confusion matrices, accuracy and sensitivity.

Fatigue (label 1) is the positive class. A probability equal to the decision
threshold counts as positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptyMatrix,
    EmptyPartition,
    InvalidProbability,
    LengthMismatch,
    NoPositives,
)
from .landmark_io import Dataset


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn_: int
    fp: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fn_", "fp", "tn"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fn_ + self.fp + self.tn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn_, "fp": self.fp, "tn": self.tn}


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    shuffle: bool = True


def split_dataset(dataset: Dataset, spec: SplitSpec = SplitSpec()) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle, then the first floor(n * fraction) samples go to train.

    Each partition keeps the dataset's original frame order.
    """
    n = len(dataset)
    if not 0 < spec.train_fraction < 1:
        raise EmptyPartition(f"train_fraction must be in (0, 1), got {spec.train_fraction}")
    n_train = math.floor(n * spec.train_fraction)
    if n_train == 0 or n_train == n:
        raise EmptyPartition(f"{n} samples at fraction {spec.train_fraction} leaves a partition empty")
    order = np.arange(n)
    if spec.shuffle:
        order = np.random.default_rng(spec.seed).permutation(n)
    train_idx = order[:n_train].tolist()
    test_idx = order[n_train:].tolist()
    return (
        dataset.subset(train_idx, f"{dataset.provenance} [train]"),
        dataset.subset(test_idx, f"{dataset.provenance} [test]"),
    )


def confusion(
    probabilities: Sequence[float],
    labels: Sequence[int],
    decision_threshold: float = 0.5,
) -> ConfusionMatrix:
    p = np.asarray(probabilities, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if len(p) != len(y):
        raise LengthMismatch(f"{len(p)} probabilities but {len(y)} labels")
    if len(p) == 0:
        raise EmptyMatrix("nothing to evaluate")
    if not np.all((p >= 0) & (p <= 1)):
        raise InvalidProbability("probabilities must lie in [0, 1]")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    pred = p >= decision_threshold
    pos = y == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & pos)),
        fn_=int(np.sum(~pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    return (cm.tn + cm.tp) / (cm.tn + cm.fn_ + cm.tp + cm.fp)


def sensitivity(cm: ConfusionMatrix) -> float:
    if cm.tp + cm.fn_ == 0:
        raise NoPositives("no positive samples; sensitivity is undefined")
    return cm.tp / (cm.tp + cm.fn_)


def report(cm: ConfusionMatrix) -> dict:
    out = {"counts": cm.as_dict(), "n": cm.total, "accuracy": accuracy(cm)}
    try:
        out["sensitivity"] = sensitivity(cm)
    except NoPositives:
        out["sensitivity"] = None
    return out
