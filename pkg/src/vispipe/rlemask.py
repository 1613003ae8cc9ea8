"""COCO-compatible run-length encoding of binary masks plus mask-space ops.

Runs are counted in column-major pixel order, alternating 0-runs and
1-runs, always starting with the 0-run (which may have length zero).
Area, IoU, and tight bounding boxes are computed on the runs directly so
large masks never need a full decode. All integer arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, MalformedRLEError
from .geometry import Box

__all__ = [
    "RLEMask",
    "encode_bitmap",
    "decode_bitmap",
    "mask_area",
    "mask_iou",
    "mask_bbox",
    "mask_union",
    "mask_intersect_box",
    "box_to_mask",
]


@dataclass(frozen=True)
class RLEMask:
    """Run-length encoded binary mask; canonical form is unique per bitmap."""

    height: int
    width: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise MalformedRLEError(
                f"mask dimensions must be >= 1, got {self.height}x{self.width}"
            )
        if not self.counts:
            raise MalformedRLEError("counts must be non-empty")
        if any(c < 0 for c in self.counts):
            raise MalformedRLEError(f"negative run length in {self.counts[:8]}...")
        if any(c == 0 for c in self.counts[1:]):
            raise MalformedRLEError("only the leading 0-run may have length zero")
        total = sum(self.counts)
        if total != self.height * self.width:
            raise MalformedRLEError(
                f"counts sum to {total}, expected {self.height * self.width} "
                f"for a {self.height}x{self.width} mask"
            )

    @property
    def size(self) -> tuple[int, int]:
        return (self.height, self.width)

    def to_wire(self) -> dict:
        """COCO-style JSON object: {"size": [h, w], "counts": [...]}."""
        return {"size": [self.height, self.width], "counts": list(self.counts)}

    @classmethod
    def from_wire(cls, obj: dict) -> "RLEMask":
        try:
            h, w = obj["size"]
            counts = obj["counts"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRLEError(f"bad RLE object: {exc}") from exc
        if not isinstance(counts, (list, tuple)):
            raise MalformedRLEError("counts must be an integer array")
        if any(not isinstance(c, int) or isinstance(c, bool) for c in counts):
            raise MalformedRLEError("counts must be plain integers")
        return cls(int(h), int(w), tuple(counts))

    def one_runs(self) -> tuple[np.ndarray, np.ndarray]:
        """Half-open [start, end) intervals of 1-pixels in column-major order."""
        c = np.asarray(self.counts, dtype=np.int64)
        ends = np.cumsum(c)
        starts = ends - c
        return starts[1::2], ends[1::2]


def _validate_bitmap(bits: np.ndarray) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise MalformedRLEError(f"bitmap must be 2-D and non-empty, got shape {arr.shape}")
    return arr.astype(bool)


def encode_bitmap(bits: np.ndarray) -> RLEMask:
    """Encode an HxW binary array into canonical column-major runs."""
    arr = _validate_bitmap(bits)
    h, w = arr.shape
    flat = arr.ravel(order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    boundaries = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(boundaries).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return RLEMask(h, w, tuple(int(r) for r in runs))


def decode_bitmap(mask: RLEMask) -> np.ndarray:
    """Exact inverse of encode_bitmap; returns an HxW uint8 array of 0/1."""
    values = np.zeros(len(mask.counts), dtype=np.uint8)
    values[1::2] = 1
    flat = np.repeat(values, np.asarray(mask.counts, dtype=np.int64))
    return flat.reshape((mask.height, mask.width), order="F")


def mask_area(mask: RLEMask) -> int:
    """Number of 1-pixels, straight off the odd-indexed runs."""
    return int(sum(mask.counts[1::2]))


def mask_iou(a: RLEMask, b: RLEMask) -> float:
    """Pixelwise IoU computed by sweeping the two run lists.

    Both masks empty yields 0.0 (degenerate outputs never score).
    """
    if a.size != b.size:
        raise DimensionMismatchError(f"mask sizes differ: {a.size} vs {b.size}")
    sa, ea = a.one_runs()
    sb, eb = b.one_runs()
    area_a = int((ea - sa).sum())
    area_b = int((eb - sb).sum())
    if area_a == 0 and area_b == 0:
        return 0.0
    inter = 0
    i = j = 0
    while i < len(sa) and j < len(sb):
        lo = max(sa[i], sb[j])
        hi = min(ea[i], eb[j])
        if hi > lo:
            inter += int(hi - lo)
        if ea[i] <= eb[j]:
            i += 1
        else:
            j += 1
    union = area_a + area_b - inter
    return inter / union


def mask_bbox(mask: RLEMask) -> Optional[Box]:
    """Tightest box containing all 1-pixels; None for an empty mask.

    x2/y2 are exclusive: a single pixel at (row r, col c) yields
    (c, r, c+1, r+1).
    """
    starts, ends = mask.one_runs()
    if len(starts) == 0:
        return None
    h = mask.height
    min_col = int(starts[0]) // h
    max_col = (int(ends[-1]) - 1) // h
    min_row = h - 1
    max_row = 0
    for s, e in zip(starts.tolist(), ends.tolist()):
        c0, c1 = s // h, (e - 1) // h
        if c1 > c0:
            # run wraps a column boundary, so it touches both row extremes
            min_row, max_row = 0, h - 1
            break
        min_row = min(min_row, s % h)
        max_row = max(max_row, (e - 1) % h)
    return Box(float(min_col), float(min_row), float(max_col + 1), float(max_row + 1))


def mask_union(masks: Sequence[RLEMask]) -> RLEMask:
    """Pixelwise OR of same-sized masks."""
    if not masks:
        raise ValueError("mask_union needs at least one mask")
    first = masks[0]
    acc = decode_bitmap(first).astype(bool)
    for m in masks[1:]:
        if m.size != first.size:
            raise DimensionMismatchError(f"mask sizes differ: {first.size} vs {m.size}")
        acc |= decode_bitmap(m).astype(bool)
    return encode_bitmap(acc)


def _box_pixel_range(box: Box, height: int, width: int) -> tuple[int, int, int, int]:
    """Integer-grid pixel span [r0,r1)x[c0,c1) covered by a continuous box."""
    c0 = max(0, int(np.floor(box.x1)))
    r0 = max(0, int(np.floor(box.y1)))
    c1 = min(width, int(np.ceil(box.x2)))
    r1 = min(height, int(np.ceil(box.y2)))
    return r0, r1, c0, c1


def box_to_mask(box: Box, height: int, width: int) -> RLEMask:
    """Rasterize a box onto the integer pixel grid as a filled rectangle."""
    bits = np.zeros((height, width), dtype=bool)
    r0, r1, c0, c1 = _box_pixel_range(box, height, width)
    if r1 > r0 and c1 > c0:
        bits[r0:r1, c0:c1] = True
    return encode_bitmap(bits)


def mask_intersect_box(mask: RLEMask, box: Box) -> RLEMask:
    """Keep only the mask pixels that fall inside the box's pixel span."""
    bits = decode_bitmap(mask).astype(bool)
    keep = np.zeros_like(bits)
    r0, r1, c0, c1 = _box_pixel_range(box, mask.height, mask.width)
    if r1 > r0 and c1 > c0:
        keep[r0:r1, c0:c1] = True
    return encode_bitmap(bits & keep)
