"""Pure-Python kernels for the per-flow math hot path.

Mirrors the API of the compiled ``_nativekernels`` extension; both
implementations perform the same operations in the same order so results
match bit for bit.  Raises plain ValueError on non-finite input; callers
wrap into package errors.
"""

from __future__ import annotations

import math
from typing import Sequence


def softmax(values: Sequence[float]) -> tuple[float, ...]:
    """exp(z_i - max z) / sum, numerically stable via max-subtraction."""
    if not values:
        raise ValueError("empty logit vector")
    top = values[0]
    for v in values:
        if not math.isfinite(v):
            raise ValueError("non-finite logit")
        if v > top:
            top = v
    exps = [math.exp(v - top) for v in values]
    total = 0.0
    for e in exps:
        total += e
    return tuple(e / total for e in exps)


def log_softmax(values: Sequence[float]) -> tuple[float, ...]:
    if not values:
        raise ValueError("empty logit vector")
    top = values[0]
    for v in values:
        if not math.isfinite(v):
            raise ValueError("non-finite logit")
        if v > top:
            top = v
    total = 0.0
    for v in values:
        total += math.exp(v - top)
    lse = top + math.log(total)
    return tuple(v - lse for v in values)


def argmax_lowest(values: Sequence[float]) -> int:
    """Index of the maximum; ties resolve to the lowest index."""
    if not values:
        raise ValueError("empty vector")
    best = 0
    best_value = values[0]
    for i in range(1, len(values)):
        if values[i] > best_value:
            best = i
            best_value = values[i]
    return best


def cross_entropy_from_logits(values: Sequence[float], index: int) -> float:
    """-log softmax(values)[index], computed from the stabilized log-sum-exp."""
    if not 0 <= index < len(values):
        raise ValueError("index out of range")
    top = values[0]
    for v in values:
        if not math.isfinite(v):
            raise ValueError("non-finite logit")
        if v > top:
            top = v
    total = 0.0
    for v in values:
        total += math.exp(v - top)
    return top + math.log(total) - values[index]


def confusion_update(
    counts: list[int], n_classes: int, true_indices: Sequence[int], pred_indices: Sequence[int]
) -> None:
    """Accumulate (true, pred) index pairs into a flat row-major count table."""
    if len(true_indices) != len(pred_indices):
        raise ValueError("index sequences differ in length")
    for t, p in zip(true_indices, pred_indices):
        if not (0 <= t < n_classes and 0 <= p < n_classes):
            raise ValueError("class index out of range")
        counts[t * n_classes + p] += 1


def micro_tallies(counts: Sequence[int], n_classes: int) -> tuple[int, int, int]:
    """Summed per-class (TP, FP, FN) over a flat row-major confusion table."""
    tp = 0
    fp = 0
    fn = 0
    for i in range(n_classes):
        diag = counts[i * n_classes + i]
        tp += diag
        row = 0
        col = 0
        for j in range(n_classes):
            row += counts[i * n_classes + j]
            col += counts[j * n_classes + i]
        fn += row - diag
        fp += col - diag
    return tp, fp, fn
