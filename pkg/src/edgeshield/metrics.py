"""Classifier math: probabilities, losses, and confusion-matrix metrics.

Label ids are 1-based (1..n_classes) throughout, matching the taxonomy;
vector indices are 0-based, so label ``i`` lives at index ``i - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import kernels
from .errors import EmptyMatrix, NonFiniteInput
from .taxonomy import NUM_CLASSES


def softmax(logits: Sequence[float]) -> tuple[float, ...]:
    """Convert logits into a probability vector (stable max-subtraction form).

    Raises :class:`NonFiniteInput` if any entry is NaN or infinite.
    """
    try:
        return kernels.softmax(logits)
    except ValueError as exc:
        raise NonFiniteInput(str(exc)) from None


def predict(probs: Sequence[float]) -> int:
    """Label id of the largest probability; ties break toward the lowest id."""
    return kernels.argmax_lowest(probs) + 1


def cross_entropy(true_label: int, probs: Sequence[float]) -> float:
    """-log p[true_label] in nats."""
    return -math.log(probs[true_label - 1])


def cross_entropy_from_logits(logits: Sequence[float], true_label: int) -> float:
    """Cross-entropy computed from logits via the stabilized log-sum-exp.

    Equals ``cross_entropy(true_label, softmax(logits))`` but never takes the
    log of a rounded probability.
    """
    try:
        return kernels.cross_entropy_from_logits(logits, true_label - 1)
    except ValueError as exc:
        raise NonFiniteInput(str(exc)) from None


@dataclass(frozen=True, slots=True)
class Prediction:
    """Logits, the probability vector derived from them, and the decoded label."""

    logits: tuple[float, ...]
    probs: tuple[float, ...]
    predicted: int

    @classmethod
    def from_logits(cls, logits: Sequence[float]) -> "Prediction":
        probs = softmax(logits)
        return cls(logits=tuple(logits), probs=probs, predicted=predict(probs))


class ConfusionMatrix:
    """Square count matrix: row = true label, column = predicted label."""

    def __init__(self, n_classes: int = NUM_CLASSES):
        if n_classes < 1:
            raise ValueError("n_classes must be positive")
        self.n_classes = n_classes
        self._counts = [0] * (n_classes * n_classes)
        self._total = 0

    def add(self, true_label: int, predicted_label: int, count: int = 1) -> None:
        n = self.n_classes
        if not (1 <= true_label <= n and 1 <= predicted_label <= n):
            raise ValueError(f"label outside 1..{n}")
        self._counts[(true_label - 1) * n + (predicted_label - 1)] += count
        self._total += count

    def add_batch(self, true_labels: Sequence[int], predicted_labels: Sequence[int]) -> None:
        t = [x - 1 for x in true_labels]
        p = [x - 1 for x in predicted_labels]
        kernels.confusion_update(self._counts, self.n_classes, t, p)
        self._total += len(t)

    def count(self, true_label: int, predicted_label: int) -> int:
        n = self.n_classes
        return self._counts[(true_label - 1) * n + (predicted_label - 1)]

    def total(self) -> int:
        return self._total

    def rows(self) -> list[list[int]]:
        n = self.n_classes
        return [self._counts[i * n : (i + 1) * n] for i in range(n)]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "ConfusionMatrix":
        cm = cls(n_classes=len(rows))
        flat: list[int] = []
        for row in rows:
            if len(row) != cm.n_classes:
                raise ValueError("confusion matrix rows must be square")
            flat.extend(int(v) for v in row)
        cm._counts = flat
        cm._total = sum(flat)
        return cm

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.n_classes == other.n_classes and self._counts == other._counts


def micro_f1(cm: ConfusionMatrix) -> float:
    """2*sum(TP) / (2*sum(TP) + sum(FP) + sum(FN)) over all classes."""
    if cm.total() == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    tp, fp, fn = kernels.micro_tallies(cm._counts, cm.n_classes)
    return 2.0 * tp / (2.0 * tp + fp + fn)


def accuracy_precision_recall(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """(trace/total, sum TP/(TP+FP), sum TP/(TP+FN))."""
    if cm.total() == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    tp, fp, fn = kernels.micro_tallies(cm._counts, cm.n_classes)
    accuracy = tp / cm.total()
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return accuracy, precision, recall


# Serialized field order for the key/value report format.
_REPORT_FIELDS = (
    "accuracy",
    "micro_f1",
    "micro_precision",
    "micro_recall",
    "mean_cross_entropy",
    "energy_j_per_req",
    "throughput_req_per_sec",
    "train_loss",
    "validation_loss",
)


@dataclass(frozen=True, slots=True)
class MetricsReport:
    """Evaluation summary over one test run.

    ``energy_j_per_req`` is present only when an energy sample stream was
    attached; ``train_loss``/``validation_loss`` only when the backend
    reports them.
    """

    accuracy: float
    micro_f1: float
    micro_precision: float
    micro_recall: float
    mean_cross_entropy: float
    throughput_req_per_sec: float
    energy_j_per_req: float | None = None
    train_loss: float | None = None
    validation_loss: float | None = None

    def to_kv_text(self) -> str:
        lines = []
        for name in _REPORT_FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            lines.append(f"{name}={value!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv_text(cls, text: str) -> "MetricsReport":
        values: dict[str, float] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            name, _, raw = line.partition("=")
            if name not in _REPORT_FIELDS:
                raise ValueError(f"unknown report field: {name}")
            values[name] = float(raw)
        return cls(**values)


def report_from_confusion(
    cm: ConfusionMatrix,
    mean_cross_entropy: float,
    throughput_req_per_sec: float,
    energy_j_per_req: float | None = None,
    train_loss: float | None = None,
    validation_loss: float | None = None,
) -> MetricsReport:
    accuracy, precision, recall = accuracy_precision_recall(cm)
    return MetricsReport(
        accuracy=accuracy,
        micro_f1=micro_f1(cm),
        micro_precision=precision,
        micro_recall=recall,
        mean_cross_entropy=mean_cross_entropy,
        throughput_req_per_sec=throughput_req_per_sec,
        energy_j_per_req=energy_j_per_req,
        train_loss=train_loss,
        validation_loss=validation_loss,
    )


def confusion_from_pairs(
    pairs: Iterable[tuple[int, int]], n_classes: int = NUM_CLASSES
) -> ConfusionMatrix:
    cm = ConfusionMatrix(n_classes)
    for true_label, predicted in pairs:
        cm.add(true_label, predicted)
    return cm
