"""Independent brute-force references used across the test suite.

Everything here is deliberately written from scratch (own IoU formulas,
own decoder, own PR-curve enumeration) so the implementations under test
are checked against a second, slower route and not against themselves.
"""

from __future__ import annotations

import numpy as np


def pixel_iou_oracle(a: tuple, b: tuple) -> float:
    """IoU of two integer-coordinate boxes by enumerating unit pixels."""
    xs = range(int(min(a[0], b[0])), int(max(a[2], b[2])))
    ys = range(int(min(a[1], b[1])), int(max(a[3], b[3])))
    inter = both = 0
    for x in xs:
        for y in ys:
            in_a = a[0] <= x < a[2] and a[1] <= y < a[3]
            in_b = b[0] <= x < b[2] and b[1] <= y < b[3]
            inter += in_a and in_b
            both += in_a or in_b
    return inter / both if both else 0.0


def _iou(a: tuple, b: tuple) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def nms_brute(dets: list[tuple], iou_thresh: float, class_aware: bool) -> list[int]:
    """Greedy suppression over (x1,y1,x2,y2,phrase,score) tuples.

    Returns indices of survivors in visit (descending score) order; ties
    keep input order; suppression requires IoU strictly above threshold.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i][5], i))
    kept: list[int] = []
    for i in order:
        ok = True
        for j in kept:
            if class_aware and dets[i][4].lower() != dets[j][4].lower():
                continue
            if _iou(dets[i][:4], dets[j][:4]) > iou_thresh:
                ok = False
                break
        if ok:
            kept.append(i)
    return kept


def decode_rle_oracle(size: tuple[int, int], counts: list[int]) -> np.ndarray:
    """Column-major RLE decode, independent of the production codec."""
    h, w = size
    flat = []
    value = 0
    for count in counts:
        flat.extend([value] * count)
        value = 1 - value
    return np.array(flat, dtype=np.uint8).reshape((w, h)).T


def ap_101_brute(flags: list[bool], num_gt: int) -> float | None:
    """101-point interpolated AP by direct enumeration.

    flags are TP/FP in descending-score order. Returns None when the
    value is undefined (no ground truth and no predictions).
    """
    if num_gt == 0:
        return None if not flags else 0.0
    precisions, recalls = [], []
    tp = fp = 0
    for flag in flags:
        tp += bool(flag)
        fp += not flag
        precisions.append(tp / (tp + fp))
        recalls.append(tp / num_gt)
    total = 0.0
    for i in range(101):
        r = i / 100.0
        best = 0.0
        for p, rec in zip(precisions, recalls):
            if rec >= r and p > best:
                best = p
        total += best
    return total / 101.0


def evaluate_reference(preds: dict, gts: dict, iou_kind: str, max_dets: int = 100) -> float:
    """Decode-everything dataset mAP: the slow, obviously-correct route.

    Same protocol, different code path: masks are decoded with the local
    decoder, matching/PR are recomputed from scratch.
    """
    gt_cats = {c["id"]: c["name"].strip().lower() for c in gts["categories"]}
    pred_cats = {c["id"]: c["name"].strip().lower() for c in preds["categories"]}
    name_to_gt_cat = {name: cid for cid, name in gt_cats.items()}

    # keep only predictions whose category exists in GT, top max_dets per image
    usable = []
    for ann in preds["annotations"]:
        name = pred_cats[ann["category_id"]]
        if name in name_to_gt_cat:
            usable.append((ann, name_to_gt_cat[name]))
    by_image: dict = {}
    for ann, cid in usable:
        by_image.setdefault(ann["image_id"], []).append((ann, cid))
    kept = []
    for image_id, anns in by_image.items():
        anns.sort(key=lambda pair: (-pair[0].get("score", 1.0), pair[0]["id"]))
        kept.extend(anns[:max_dets])

    thresholds = [(50 + 5 * k) / 100.0 for k in range(10)]
    ap_values = []
    for cid in sorted(gt_cats):
        cat_gts = [a for a in gts["annotations"] if a["category_id"] == cid]
        cat_preds = [a for a, c in kept if c == cid]
        cat_preds.sort(key=lambda a: (-a.get("score", 1.0), a["id"]))
        if not cat_gts and not cat_preds:
            continue
        for thresh in thresholds:
            flags = _match_flags(cat_preds, cat_gts, thresh, iou_kind)
            ap = ap_101_brute(flags, len(cat_gts))
            assert ap is not None
            ap_values.append(ap)
    if not ap_values:
        raise ValueError("nothing to evaluate")
    return float(np.mean(ap_values))


def _ann_iou(pred: dict, gt: dict, iou_kind: str) -> float:
    if iou_kind == "box":
        return _iou(_xywh_to_xyxy(pred["bbox"]), _xywh_to_xyxy(gt["bbox"]))
    pb = decode_rle_oracle(pred["segmentation"]["size"], pred["segmentation"]["counts"])
    gb = decode_rle_oracle(gt["segmentation"]["size"], gt["segmentation"]["counts"])
    inter = int(np.logical_and(pb, gb).sum())
    union = int(np.logical_or(pb, gb).sum())
    return inter / union if union else 0.0


def _xywh_to_xyxy(bbox: list) -> tuple:
    x, y, w, h = bbox
    return (x, y, x + w, y + h)


def _match_flags(cat_preds: list[dict], cat_gts: list[dict], thresh: float, iou_kind: str):
    """Greedy per-image matching, pooled into one flag list (score order)."""
    matched: set = set()
    flags = []
    for pred in cat_preds:
        best_iou, best_gt = 0.0, None
        for gt in sorted(cat_gts, key=lambda g: g["id"]):
            if gt["image_id"] != pred["image_id"] or gt["id"] in matched:
                continue
            iou = _ann_iou(pred, gt, iou_kind)
            if iou > best_iou:
                best_iou, best_gt = iou, gt["id"]
        if best_gt is not None and best_iou >= thresh:
            matched.add(best_gt)
            flags.append(True)
        else:
            flags.append(False)
    return flags
