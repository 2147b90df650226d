"""Independent reference implementations used as test oracles.

Everything here is deliberately naive pure Python (math module only, no
numpy) so the oracles share no code path with the package.
"""

from __future__ import annotations

import math
from typing import Sequence


def cosine_oracle(a: Sequence[float], b: Sequence[float]) -> float:
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    return min(1.0, max(0.0, dot / (na * nb)))


def euclidean_unit_oracle(a: Sequence[float], b: Sequence[float]) -> float:
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    dist = math.sqrt(math.fsum((x / na - y / nb) ** 2 for x, y in zip(a, b)))
    return min(1.0, max(0.0, dist / 2.0))


def score_oracle(metric: str, a: Sequence[float], b: Sequence[float]) -> float:
    return cosine_oracle(a, b) if metric == "cosine" else euclidean_unit_oracle(a, b)


def matched_oracle(metric: str, polarity: str, th: float,
                   a: Sequence[float], b: Sequence[float]) -> bool:
    score = score_oracle(metric, a, b)
    return score >= th if polarity == "similarity_at_least" else score <= th


def split_runs_oracle(fids: Sequence[int], gap: int = 1) -> list[list[int]]:
    """Positions of each maximal run of near-consecutive fids."""
    runs: list[list[int]] = []
    for i, fid in enumerate(fids):
        if runs and fid - fids[i - 1] <= gap:
            runs[-1].append(i)
        else:
            runs.append([i])
    return runs


def cct_oracle(fids: Sequence[int], option: str, gap: int = 1) -> list[int]:
    """Retained positions under first/last/both, per run."""
    keep: list[int] = []
    for run in split_runs_oracle(fids, gap):
        if option == "first":
            keep.append(run[0])
        elif option == "last":
            keep.append(run[-1])
        else:
            keep.append(run[0])
            if run[-1] != run[0]:
                keep.append(run[-1])
    return keep


def join_pairs_oracle(left: dict, right: dict, metric: str, polarity: str,
                      th: float) -> set[tuple]:
    """All (left_key, right_key) group pairs with at least one matching
    element pair; groups map key -> list of vectors."""
    pairs = set()
    for lkey, lvecs in left.items():
        for rkey, rvecs in right.items():
            if any(matched_oracle(metric, polarity, th, a, b)
                   for a in lvecs for b in rvecs):
                pairs.add((lkey, rkey))
    return pairs


def first_witness_oracle(lvecs, rvecs, metric: str, polarity: str,
                         th: float) -> tuple[int, int] | None:
    """First matching (left index, right index) in row-major scan order."""
    for li, a in enumerate(lvecs):
        for ri, b in enumerate(rvecs):
            if matched_oracle(metric, polarity, th, a, b):
                return (li, ri)
    return None


def confusion_oracle(emitted: set, positives: set, left_universe: set,
                     right_universe: set) -> tuple[int, int, int, int]:
    """(tp, tn, fp, fn) by explicit enumeration of the pair universe."""
    tp = tn = fp = fn = 0
    for l in left_universe:
        for r in right_universe:
            reported = (l, r) in emitted
            positive = (l, r) in positives
            if reported and positive:
                tp += 1
            elif reported and not positive:
                fp += 1
            elif not reported and positive:
                fn += 1
            else:
                tn += 1
    return tp, tn, fp, fn


def windows_containing_oracle(key: float, origin: float, size: float,
                              hop: float, max_index: int = 10_000) -> list[int]:
    """Scan all candidate windows for containment of the key."""
    out = []
    for i in range(max_index):
        start = origin + i * hop
        if start > key:
            break
        if start <= key < start + size:
            out.append(i)
    return out
