"""Greedy prediction-to-ground-truth matching at one IoU threshold."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..errors import EvalInputError
from ..geometry import Box, box_iou
from ..rlemask import RLEMask, mask_iou

__all__ = ["MatchResult", "match_greedy", "annotation_iou"]


@dataclass(frozen=True)
class MatchResult:
    """Per-prediction TP/FP flags (score-descending) plus match targets."""

    flags: tuple[bool, ...]
    matched_gt: tuple[Optional[int], ...]
    unmatched_gt: int


def annotation_iou(pred: Mapping, gt: Mapping, iou_kind: str) -> float:
    """IoU between two COCO annotation entries, by mask or by box."""
    if iou_kind == "box":
        return box_iou(_xywh_box(pred["bbox"]), _xywh_box(gt["bbox"]))
    if iou_kind == "mask":
        return mask_iou(
            RLEMask.from_wire(pred["segmentation"]), RLEMask.from_wire(gt["segmentation"])
        )
    raise EvalInputError(f"iou_kind must be 'mask' or 'box', got {iou_kind!r}")


def _xywh_box(bbox: Sequence[float]) -> Box:
    x, y, w, h = bbox
    if w <= 0 or h <= 0:
        # empty-mask predictions carry a zero bbox; they can never match
        return Box(-1.0, -1.0, -0.5, -0.5)
    return Box(x, y, x + w, y + h)


def match_greedy(
    preds: Sequence[Mapping],
    gts: Sequence[Mapping],
    iou_thresh: float,
    iou_kind: str,
    *,
    iou_lookup=None,
) -> MatchResult:
    """Match each prediction to the unmatched GT with maximal IoU >= thresh.

    Predictions must arrive sorted by score descending (ties by id);
    IoU ties between GTs break toward the smaller GT id. `iou_lookup`
    may supply precomputed IoUs as lookup[(pred_id, gt_id)].
    """
    order = [(-p.get("score", 1.0), p["id"]) for p in preds]
    if order != sorted(order):
        raise EvalInputError("predictions must be sorted by score descending, ties by id")

    def iou_of(pred, gt) -> float:
        if iou_lookup is not None:
            return iou_lookup[(pred["id"], gt["id"])]
        return annotation_iou(pred, gt, iou_kind)

    gts_by_id = sorted(gts, key=lambda g: g["id"])
    matched: set[int] = set()
    flags: list[bool] = []
    matched_gt: list[Optional[int]] = []
    for pred in preds:
        best_iou = 0.0
        best_id: Optional[int] = None
        for gt in gts_by_id:
            if gt["id"] in matched:
                continue
            iou = iou_of(pred, gt)
            if iou > best_iou:
                best_iou, best_id = iou, gt["id"]
        if best_id is not None and best_iou >= iou_thresh:
            matched.add(best_id)
            flags.append(True)
            matched_gt.append(best_id)
        else:
            flags.append(False)
            matched_gt.append(None)
    return MatchResult(
        flags=tuple(flags),
        matched_gt=tuple(matched_gt),
        unmatched_gt=len(gts) - len(matched),
    )
