"""Confusion matrices, accuracy and F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold labels, columns are predictions."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if counts.shape != (n, n):
            raise ValueError(f"counts must be {n}x{n}, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("negative count")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def count(self, gold: str, pred: str) -> int:
        return int(self.counts[self.labels.index(gold), self.labels.index(pred)])

    def reorder(self, labels: Sequence[str]) -> ConfusionMatrix:
        if sorted(labels) != sorted(self.labels):
            raise ValueError("reorder needs a permutation of the same labels")
        idx = [self.labels.index(lab) for lab in labels]
        return ConfusionMatrix(tuple(labels), self.counts[np.ix_(idx, idx)])

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist()}


def confusion(gold: Mapping[str, str], pred: Mapping[str, str],
              labels: Sequence[str] | None = None) -> ConfusionMatrix:
    """Count (gold, predicted) label pairs over the shared pair ids.

    ``labels`` fixes row/column order; by default it is the sorted union of
    labels seen in either map.
    """
    if set(gold) != set(pred):
        missing = sorted(set(gold) - set(pred))[:3]
        extra = sorted(set(pred) - set(gold))[:3]
        raise ValueError(f"key-set mismatch: missing predictions {missing}, unknown ids {extra}")
    if labels is None:
        labels = sorted(set(gold.values()) | set(pred.values()))
    labels = tuple(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for pid, g in gold.items():
        p = pred[pid]
        if g not in index or p not in index:
            raise ValueError(f"label outside {labels} for pair {pid!r}: gold {g!r}, pred {p!r}")
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(labels, counts)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy of an empty confusion matrix")
    return int(np.trace(cm.counts)) / cm.total


def precision_recall_f1(cm: ConfusionMatrix, positive: str) -> tuple[float, float, float]:
    """Per-class scores; any 0/0 ratio is taken as 0."""
    if positive not in cm.labels:
        raise ValueError(f"unknown label {positive!r}; labels are {cm.labels}")
    i = cm.labels.index(positive)
    tp = int(cm.counts[i, i])
    predicted = int(cm.counts[:, i].sum())
    actual = int(cm.counts[i, :].sum())
    precision = tp / predicted if predicted else 0.0
    recall = tp / actual if actual else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def f1(cm: ConfusionMatrix, positive: str) -> float:
    if cm.total == 0:
        raise ValueError("F1 of an empty confusion matrix")
    return precision_recall_f1(cm, positive)[2]


def macro_f1(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("F1 of an empty confusion matrix")
    return sum(precision_recall_f1(cm, lab)[2] for lab in cm.labels) / len(cm.labels)


def report(cm: ConfusionMatrix, positive: str | None = None) -> dict:
    """JSON-ready metrics. ``positive`` adds a positive-class F1 (RQE uses ``true``)."""
    per_class = {}
    for lab in cm.labels:
        p, r, f = precision_recall_f1(cm, lab)
        per_class[lab] = {"precision": p, "recall": r, "f1": f,
                          "support": int(cm.counts[cm.labels.index(lab)].sum())}
    out = {
        "total": cm.total,
        "accuracy": accuracy(cm),
        "macro_f1": macro_f1(cm),
        "per_class": per_class,
        "confusion": cm.to_dict(),
    }
    if positive is not None:
        out["positive_label"] = positive
        out["positive_f1"] = f1(cm, positive)
    return out


def format_report(rep: Mapping) -> str:
    """Plain-text rendering of :func:`report` output."""
    labels = rep["confusion"]["labels"]
    width = max(12, *(len(lab) + 2 for lab in labels))
    lines = [f"total     {rep['total']}",
             f"accuracy  {rep['accuracy']:.4f}",
             f"macro F1  {rep['macro_f1']:.4f}"]
    if "positive_f1" in rep:
        lines.append(f"F1({rep['positive_label']})  {rep['positive_f1']:.4f}")
    lines.append("")
    lines.append("gold \\ pred".ljust(width) + "".join(lab.rjust(width) for lab in labels))
    for lab, row in zip(labels, rep["confusion"]["counts"]):
        lines.append(lab.ljust(width) + "".join(str(c).rjust(width) for c in row))
    lines.append("")
    lines.append("label".ljust(width) + "precision".rjust(11) + "recall".rjust(9)
                 + "f1".rjust(9) + "support".rjust(9))
    for lab in labels:
        pc = rep["per_class"][lab]
        lines.append(lab.ljust(width) + f"{pc['precision']:11.4f}{pc['recall']:9.4f}"
                     f"{pc['f1']:9.4f}{pc['support']:9d}")
    return "\n".join(lines) + "\n"
