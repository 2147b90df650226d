"""Feature-vector similarity matching.

Two metrics are supported, both producing scores in [0, 1]:

* cosine similarity, ``max(0, a.b / (|a||b|))`` — 1 means identical
  direction, 0 means orthogonal (or opposed, after clamping);
* unit euclidean distance, ``|a/|a| - b/|b|| / 2`` — 0 means identical
  direction, 1 means opposed. Normalizing first keeps the raw (unbounded)
  euclidean distance inside the stated range.

A match condition pairs a metric with a threshold and a polarity: a
similarity metric matches when the score is at least the threshold, a
distance metric when the score is at most the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, ZeroVector
from .model import FeatureVector


class Metric(Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"


class MatchPolarity(Enum):
    SIMILARITY_AT_LEAST = "similarity_at_least"
    DISTANCE_AT_MOST = "distance_at_most"


DEFAULT_POLARITY = {
    Metric.COSINE: MatchPolarity.SIMILARITY_AT_LEAST,
    Metric.EUCLIDEAN: MatchPolarity.DISTANCE_AT_MOST,
}


@dataclass(frozen=True)
class MatchCondition:
    """Similarity-match parameters: metric, threshold in [0, 1], polarity."""

    metric: Metric = Metric.COSINE
    th: float = 0.5
    polarity: MatchPolarity | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.th <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.th}")
        if self.polarity is None:
            object.__setattr__(self, "polarity", DEFAULT_POLARITY[self.metric])

    def matched(self, score: float) -> bool:
        if self.polarity is MatchPolarity.SIMILARITY_AT_LEAST:
            return score >= self.th
        return score <= self.th


def _checked(a: FeatureVector, b: FeatureVector) -> tuple[np.ndarray, np.ndarray]:
    if a.dim != b.dim:
        raise DimensionMismatch(f"feature vectors differ in dimension: {a.dim} vs {b.dim}")
    if not np.any(a.values) or not np.any(b.values):
        raise ZeroVector("similarity is undefined for an all-zero vector")
    return a.values, b.values


def cosine_similarity(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine of the angle between ``a`` and ``b``, clamped to [0, 1]."""
    va, vb = _checked(a, b)
    if np.array_equal(va, vb):
        return 1.0  # exact reflexivity; roundoff must not break self-matches
    raw = float(np.dot(va, vb) / (np.linalg.norm(va) * np.linalg.norm(vb)))
    return min(1.0, max(0.0, raw))


def euclidean_distance_unit(a: FeatureVector, b: FeatureVector) -> float:
    """Euclidean distance between the L2-normalized inputs, scaled to [0, 1]."""
    va, vb = _checked(a, b)
    if np.array_equal(va, vb):
        return 0.0
    ua = va / np.linalg.norm(va)
    ub = vb / np.linalg.norm(vb)
    return min(1.0, max(0.0, float(np.linalg.norm(ua - ub)) / 2.0))


def smatch(cond: MatchCondition, a: FeatureVector, b: FeatureVector) -> tuple[bool, float]:
    """Evaluate the match condition; returns (matched, score)."""
    if cond.metric is Metric.COSINE:
        score = cosine_similarity(a, b)
    else:
        score = euclidean_distance_unit(a, b)
    return cond.matched(score), score


# Batched kernels used by the join operators. A group's feature vectors are
# stacked into one row-normalized matrix; every join variant scores one left
# vector against the whole right matrix through this same arithmetic, so
# short-circuiting joins and exhaustive joins see bit-identical scores and
# agree exactly on which pairs cross the threshold.

def normalized_matrix(vectors: list[FeatureVector]) -> np.ndarray:
    """Stack vectors into a row-normalized (n, d) matrix."""
    if not vectors:
        return np.zeros((0, 0))
    dims = {v.dim for v in vectors}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed feature vector dimensions in one group: {sorted(dims)}")
    mat = np.stack([v.values for v in vectors])
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("similarity is undefined for an all-zero vector")
    return mat / norms[:, None]

def scores_against(cond: MatchCondition, unit_row: np.ndarray, unit_matrix: np.ndarray) -> np.ndarray:
    """Scores of one unit vector against every row of a unit matrix."""
    if unit_matrix.shape[1] != unit_row.shape[0]:
        raise DimensionMismatch(
            f"feature vectors differ in dimension: {unit_row.shape[0]} vs {unit_matrix.shape[1]}")
    if cond.metric is Metric.COSINE:
        return np.clip(unit_matrix @ unit_row, 0.0, 1.0)
    return np.clip(np.linalg.norm(unit_matrix - unit_row, axis=1) / 2.0, 0.0, 1.0)
