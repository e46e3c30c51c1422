"""Score tables: the library's view of a scored dataset.

A table holds an (N, K) matrix of real-valued scores, one column per label,
plus an optional label vector (present for source calibration data, absent
for unlabeled target data).  Labels are 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ScoreTable:
    """Per-example scores f(x, .) with optional true labels."""

    scores: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 2:
            raise ValueError("scores must be a 2-D array")
        if self.scores.shape[1] < 2:
            raise ValueError("need at least 2 label columns")
        if not np.all(np.isfinite(self.scores).any(axis=1)) and self.n > 0:
            raise ValueError("every row needs at least one finite score")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != (self.scores.shape[0],):
                raise ValueError("labels must be a vector matching the row count")
            if self.n > 0 and (self.labels.min() < 0 or self.labels.max() >= self.k):
                raise ValueError("labels out of range")

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def k(self) -> int:
        return self.scores.shape[1]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def predicted(self) -> np.ndarray:
        """Induced classifier argmax_k f(x, k); ties go to the lowest index."""
        return np.argmax(self.scores, axis=1)

    def true_scores(self) -> np.ndarray:
        """Scores of the true labels, f(x_i, y_i)."""
        if self.labels is None:
            raise ValueError("table has no labels")
        return self.scores[np.arange(self.n), self.labels]

    def subset(self, idx) -> "ScoreTable":
        labels = None if self.labels is None else self.labels[idx]
        return ScoreTable(self.scores[idx], labels)
