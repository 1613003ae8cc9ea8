"""101-point interpolated average precision."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

__all__ = ["RECALL_THRESHOLDS", "average_precision"]

RECALL_THRESHOLDS = tuple(i / 100.0 for i in range(101))


def average_precision(flags: Sequence[bool], num_gt: int) -> Optional[float]:
    """AP over TP/FP flags sorted by score descending.

    Interpolated precision at recall r is the best precision achieved at
    recall >= r; AP is its mean over the 101 recall thresholds. Undefined
    (None) when there is nothing to score: no ground truth and no
    predictions. No ground truth but predictions present scores 0.
    """
    if num_gt < 0:
        raise ValueError(f"num_gt must be >= 0, got {num_gt}")
    if num_gt == 0:
        return None if len(flags) == 0 else 0.0
    if len(flags) == 0:
        return 0.0

    tp = np.cumsum(np.asarray(flags, dtype=np.int64))
    ranks = np.arange(1, len(flags) + 1)
    precision = tp / ranks
    recall = tp / num_gt
    # best precision at or beyond each rank
    interp = np.maximum.accumulate(precision[::-1])[::-1]
    # first rank reaching each recall threshold (recall is non-decreasing)
    idx = np.searchsorted(recall, RECALL_THRESHOLDS, side="left")
    # sequential sum: bit-identical to a rank-by-rank reference
    total = 0.0
    for i in idx:
        if i < len(flags):
            total += float(interp[i])
    return total / len(RECALL_THRESHOLDS)
