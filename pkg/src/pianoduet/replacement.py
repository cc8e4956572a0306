"""Chord replaceability: directional confidence table and refined accuracy.

Pop accompaniment tolerates substituting some chords for others.  Pairs
sharing an identical 16-token melody are grouped; within each group the
most frequent chord is the target and the rest are observed replacements.
The resulting directional confidence matrix feeds a thresholded indicator
that credits acceptable substitutions when scoring the classifier.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from pianoduet.accompany import CHORD_LABELS
from pianoduet.model import samples_to_arrays

N = len(CHORD_LABELS)


@dataclass
class ReplacementTable:
    confidence: np.ndarray  # P[target, replacement], diagonal fixed at 1
    indicator: np.ndarray  # lambda[target, replacement] in {0, 1}
    threshold: float
    strength: float

    def allows(self, target: int, predicted: int) -> bool:
        return bool(self.indicator[target, predicted])

    @classmethod
    def identity(cls, strength: float = 0.25) -> "ReplacementTable":
        return cls(np.eye(N), np.eye(N, dtype=int), 0.0, strength)


def build_replacement_table(samples, strength: float = 0.25) -> ReplacementTable:
    """Directional replacement confidences from melody-grouped chord counts.

    For each group the target chord is the most frequent one (ties broken
    by label order); every other chord in the group counts as a replacement
    of that target.  confidence[t, r] is the replacement count divided by
    the target chord's own occurrence count, accumulated over groups.  The
    indicator marks entries at or above min + strength * (max - min) of the
    off-diagonal confidences; with no replacement evidence at all it stays
    diagonal.
    """
    if not 0 < strength < 1:
        raise ValueError("strength must lie in (0, 1)")
    tokens, labels = samples_to_arrays(samples)
    groups: dict[tuple, Counter] = defaultdict(Counter)
    for row, label in zip(map(tuple, tokens), labels):
        groups[row][int(label)] += 1

    replaced = np.zeros((N, N))
    target_total = np.zeros(N)
    for counts in groups.values():
        top = max(counts.values())
        target = min(c for c, n in counts.items() if n == top)
        target_total[target] += counts[target]
        for chord, n in counts.items():
            if chord != target:
                replaced[target, chord] += n

    confidence = np.divide(
        replaced,
        target_total[:, None],
        out=np.zeros_like(replaced),
        where=target_total[:, None] > 0,
    )
    np.fill_diagonal(confidence, 1.0)

    off = confidence[~np.eye(N, dtype=bool)]
    threshold = float(off.min() + strength * (off.max() - off.min()))
    indicator = (confidence >= threshold).astype(int)
    indicator[confidence <= 0] = 0  # no evidence, no credit
    np.fill_diagonal(indicator, 1)
    return ReplacementTable(confidence, indicator, threshold, strength)


@dataclass
class EvaluationReport:
    confusion: np.ndarray  # counts[true, predicted]
    raw_accuracy: float
    refined_accuracy: float

    def format(self) -> str:
        width = max(len(c) for c in CHORD_LABELS) + 2
        lines = ["true\\pred".ljust(width) + "".join(c.rjust(width) for c in CHORD_LABELS)]
        for i, label in enumerate(CHORD_LABELS):
            cells = "".join(str(int(v)).rjust(width) for v in self.confusion[i])
            lines.append(label.ljust(width) + cells)
        lines.append(f"raw accuracy      {self.raw_accuracy:.4f}")
        lines.append(f"refined accuracy  {self.refined_accuracy:.4f}")
        return "\n".join(lines)


def confusion_matrix(true_labels, predicted_labels) -> np.ndarray:
    counts = np.zeros((N, N))
    for t, p in zip(true_labels, predicted_labels):
        counts[int(t), int(p)] += 1
    return counts


def accuracy_from_confusion(confusion: np.ndarray,
                            table: ReplacementTable | None = None) -> tuple[float, float]:
    """Raw (diagonal) and refined (replacement-credited) accuracies."""
    total = confusion.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    raw = float(np.trace(confusion) / total)
    if table is None:
        return raw, raw
    credited = confusion * table.indicator
    refined = float(credited.sum() / total)
    return raw, refined


def evaluate(model, samples, table: ReplacementTable | None = None) -> EvaluationReport:
    """Score the classifier on held-out samples with replacement credit."""
    tokens, labels = samples_to_arrays(samples)
    if len(labels) == 0:
        raise ValueError("empty test set")
    predictions = model.predict_batch(tokens).argmax(axis=1)
    confusion = confusion_matrix(labels, predictions)
    raw, refined = accuracy_from_confusion(confusion, table)
    return EvaluationReport(confusion, raw, refined)


def format_confidence_table(table: ReplacementTable) -> str:
    """The directional confidence matrix with indicator cells marked '*'."""
    width = 7
    lines = ["target".ljust(width) + "".join(c.rjust(width) for c in CHORD_LABELS)]
    for i, label in enumerate(CHORD_LABELS):
        cells = []
        for j in range(N):
            mark = "*" if table.indicator[i, j] and i != j else " "
            cells.append(f"{table.confidence[i, j]:.2f}{mark}".rjust(width))
        lines.append(label.ljust(width) + "".join(cells))
    lines.append(f"threshold {table.threshold:.4f} (strength {table.strength})")
    return "\n".join(lines)
