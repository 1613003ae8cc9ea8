"""Box arithmetic: conversions, IoU, clipping, and non-maximum suppression.

Coordinates are continuous (sub-pixel) with origin at the top-left,
x growing right and y growing down. Everything here is a pure function
on immutable values; callers may share them across threads freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyClipError, InvalidBoxError

__all__ = [
    "Box",
    "NormBox",
    "ScoredBox",
    "box_from_normalized",
    "normalize_box",
    "box_iou",
    "clip_box",
    "nms",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box as (x1, y1, x2, y2) corners with positive area."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidBoxError(f"non-finite coordinates: {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidBoxError(f"degenerate box (needs x1<x2, y1<y2): {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def to_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "Box":
        if len(values) != 4:
            raise InvalidBoxError(f"box needs 4 numbers, got {len(values)}")
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))


@dataclass(frozen=True)
class NormBox:
    """Center/size box with every field a fraction of the image dimensions."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.w, self.h)):
            raise InvalidBoxError("non-finite normalized coordinates")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise InvalidBoxError(f"center out of [0,1]: ({self.cx}, {self.cy})")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise InvalidBoxError(f"size out of (0,1]: ({self.w}, {self.h})")


@dataclass(frozen=True)
class ScoredBox:
    """A detection: box plus the grounded phrase and its confidence."""

    box: Box
    phrase: str
    score: float

    def __post_init__(self):
        if not self.phrase:
            raise InvalidBoxError("detection phrase must be non-empty")
        if not (0.0 <= self.score <= 1.0):
            raise InvalidBoxError(f"score out of [0,1]: {self.score}")


def box_from_normalized(b: NormBox, img_w: float, img_h: float) -> Box:
    """Convert a normalized center/size box to pixel corners.

    The result is NOT clipped to the image; callers clip. Raises
    InvalidBoxError when the conversion collapses to zero width/height.
    """
    if img_w <= 0 or img_h <= 0:
        raise InvalidBoxError(f"image dimensions must be positive: {img_w}x{img_h}")
    return Box(
        (b.cx - b.w / 2.0) * img_w,
        (b.cy - b.h / 2.0) * img_h,
        (b.cx + b.w / 2.0) * img_w,
        (b.cy + b.h / 2.0) * img_h,
    )


def _snap_unit(v: float) -> float:
    # rounding in the convert/renormalize cycle may overshoot [0,1] by ulps
    if 1.0 < v <= 1.0 + 1e-12:
        return 1.0
    if -1e-12 <= v < 0.0:
        return 0.0
    return v


def normalize_box(b: Box, img_w: float, img_h: float) -> NormBox:
    """Inverse of box_from_normalized (for boxes inside the image)."""
    if img_w <= 0 or img_h <= 0:
        raise InvalidBoxError(f"image dimensions must be positive: {img_w}x{img_h}")
    return NormBox(
        _snap_unit((b.x1 + b.x2) / 2.0 / img_w),
        _snap_unit((b.y1 + b.y2) / 2.0 / img_h),
        _snap_unit(b.width / img_w),
        _snap_unit(b.height / img_h),
    )


def box_iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def clip_box(b: Box, img_w: float, img_h: float) -> Box:
    """Clamp a box to [0, img_w] x [0, img_h].

    Raises EmptyClipError when nothing with positive area remains.
    """
    if img_w <= 0 or img_h <= 0:
        raise InvalidBoxError(f"image dimensions must be positive: {img_w}x{img_h}")
    x1 = min(max(b.x1, 0.0), float(img_w))
    y1 = min(max(b.y1, 0.0), float(img_h))
    x2 = min(max(b.x2, 0.0), float(img_w))
    y2 = min(max(b.y2, 0.0), float(img_h))
    if x1 >= x2 or y1 >= y2:
        raise EmptyClipError(
            f"box {b.to_list()} is empty after clipping to {img_w}x{img_h}"
        )
    return Box(x1, y1, x2, y2)


def nms(
    dets: Iterable[ScoredBox],
    iou_thresh: float,
    class_aware: bool = True,
) -> list[ScoredBox]:
    """Greedy non-maximum suppression.

    Candidates are visited in descending score order (ties keep input
    order); a candidate is dropped when its IoU with an already-kept box
    exceeds `iou_thresh`. With `class_aware`, suppression only happens
    between boxes whose phrases match case-insensitively. The result is a
    subset of the input in descending-score order.
    """
    if not (0.0 <= iou_thresh <= 1.0):
        raise ValueError(f"iou_thresh out of [0,1]: {iou_thresh}")
    ordered = sorted(enumerate(dets), key=lambda item: (-item[1].score, item[0]))
    kept: list[ScoredBox] = []
    for _, det in ordered:
        suppressed = False
        for keeper in kept:
            if class_aware and keeper.phrase.lower() != det.phrase.lower():
                continue
            if box_iou(keeper.box, det.box) > iou_thresh:
                suppressed = True
                break
        if not suppressed:
            kept.append(det)
    return kept
