"""Dataset-level evaluation: AP per category over the IoU threshold sweep."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..errors import DimensionMismatchError, EvalInputError
from ..store.coco import validate_document
from .ap import average_precision
from .matching import annotation_iou, match_greedy

__all__ = ["IOU_THRESHOLDS", "CategoryEval", "DatasetReport", "evaluate_dataset"]

IOU_THRESHOLDS = tuple((50 + 5 * k) / 100.0 for k in range(10))
MAX_DETS = 100


@dataclass(frozen=True)
class CategoryEval:
    name: str
    num_gt: int
    num_pred: int
    ap_by_threshold: Mapping[float, Optional[float]]
    mean_ap: Optional[float]


@dataclass(frozen=True)
class DatasetReport:
    dataset: str
    iou_kind: str
    thresholds: tuple[float, ...]
    categories: tuple[CategoryEval, ...]
    map: float
    dropped_predictions: int
    max_dets: int = MAX_DETS

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "iou_kind": self.iou_kind,
            "thresholds": list(self.thresholds),
            "max_dets": self.max_dets,
            "map": self.map,
            "dropped_predictions": self.dropped_predictions,
            "categories": [
                {
                    "name": c.name,
                    "num_gt": c.num_gt,
                    "num_pred": c.num_pred,
                    "mean_ap": c.mean_ap,
                    "ap_by_threshold": {f"{t:.2f}": ap for t, ap in c.ap_by_threshold.items()},
                }
                for c in self.categories
            ],
        }


def evaluate_dataset(
    preds: Mapping,
    gts: Mapping,
    iou_kind: str = "mask",
    *,
    dataset_name: str = "dataset",
) -> DatasetReport:
    """AP per (GT category, IoU threshold in 0.50:0.05:0.95), then the mean.

    Predicted categories align to GT categories by trimmed lowercase name;
    predictions with no matching GT category are dropped (counted in the
    report). Predictions are cut to the top-100 per image by score.
    """
    if iou_kind not in ("mask", "box"):
        raise EvalInputError(f"iou_kind must be 'mask' or 'box', got {iou_kind!r}")
    validate_document(preds)
    validate_document(gts)

    gt_images = {im["file_name"]: im for im in gts["images"]}
    pred_image_map = {}
    for im in preds["images"]:
        gt_image = gt_images.get(im["file_name"])
        if gt_image is None:
            raise EvalInputError(
                f"prediction image {im['file_name']!r} is absent from the ground truth"
            )
        if (im["width"], im["height"]) != (gt_image["width"], gt_image["height"]):
            raise DimensionMismatchError(
                f"image {im['file_name']!r}: predictions say "
                f"{im['width']}x{im['height']}, ground truth says "
                f"{gt_image['width']}x{gt_image['height']}"
            )
        pred_image_map[im["id"]] = gt_image["id"]

    def canon(name: str) -> str:
        return name.strip().lower()

    gt_cat_by_name = {canon(c["name"]): c["id"] for c in gts["categories"]}
    pred_cat_names = {c["id"]: canon(c["name"]) for c in preds["categories"]}

    # align predictions to GT categories and image ids; drop the unmatchable
    usable = []
    dropped = 0
    for ann in preds["annotations"]:
        gt_cat = gt_cat_by_name.get(pred_cat_names[ann["category_id"]])
        if gt_cat is None:
            dropped += 1
            continue
        entry = dict(ann)
        entry["image_id"] = pred_image_map[ann["image_id"]]
        entry["category_id"] = gt_cat
        usable.append(entry)

    # maxDets: top-100 per image by score, ties by annotation id
    by_image: dict[int, list[dict]] = {}
    for ann in usable:
        by_image.setdefault(ann["image_id"], []).append(ann)
    kept: list[dict] = []
    for anns in by_image.values():
        anns.sort(key=lambda a: (-a.get("score", 1.0), a["id"]))
        kept.extend(anns[:MAX_DETS])

    gt_by_cat: dict[int, list[dict]] = {}
    for ann in gts["annotations"]:
        gt_by_cat.setdefault(ann["category_id"], []).append(ann)
    pred_by_cat: dict[int, list[dict]] = {}
    for ann in kept:
        pred_by_cat.setdefault(ann["category_id"], []).append(ann)

    gt_cat_ids = sorted(c["id"] for c in gts["categories"])
    cat_names = {c["id"]: c["name"] for c in gts["categories"]}

    categories: list[CategoryEval] = []
    pooled: list[float] = []  # AP values in (category id, threshold) order
    for cat_id in gt_cat_ids:
        cat_gts = gt_by_cat.get(cat_id, [])
        cat_preds = sorted(
            pred_by_cat.get(cat_id, []), key=lambda a: (-a.get("score", 1.0), a["id"])
        )
        ap_by_threshold: dict[float, Optional[float]] = {}
        if not cat_gts and not cat_preds:
            ap_by_threshold = {t: None for t in IOU_THRESHOLDS}
            categories.append(
                CategoryEval(cat_names[cat_id], 0, 0, ap_by_threshold, None)
            )
            continue

        # IoUs are threshold-independent; compute once per (pred, gt) pair
        lookup: dict[tuple[int, int], float] = {}
        gts_by_image: dict[int, list[dict]] = {}
        for gt in cat_gts:
            gts_by_image.setdefault(gt["image_id"], []).append(gt)
        preds_by_image: dict[int, list[dict]] = {}
        for pred in cat_preds:
            preds_by_image.setdefault(pred["image_id"], []).append(pred)
            for gt in gts_by_image.get(pred["image_id"], []):
                lookup[(pred["id"], gt["id"])] = annotation_iou(pred, gt, iou_kind)

        for thresh in IOU_THRESHOLDS:
            flag_by_pred: dict[int, bool] = {}
            for image_id, image_preds in preds_by_image.items():
                result = match_greedy(
                    image_preds,
                    gts_by_image.get(image_id, []),
                    thresh,
                    iou_kind,
                    iou_lookup=lookup,
                )
                for pred, flag in zip(image_preds, result.flags):
                    flag_by_pred[pred["id"]] = flag
            # pool flags across images in global score order
            flags = [flag_by_pred[p["id"]] for p in cat_preds]
            ap = average_precision(flags, len(cat_gts))
            ap_by_threshold[thresh] = ap
            if ap is not None:
                pooled.append(ap)

        defined = [ap for ap in ap_by_threshold.values() if ap is not None]
        categories.append(
            CategoryEval(
                name=cat_names[cat_id],
                num_gt=len(cat_gts),
                num_pred=len(cat_preds),
                ap_by_threshold=ap_by_threshold,
                mean_ap=float(np.mean(defined)) if defined else None,
            )
        )

    if not pooled:
        raise EvalInputError("nothing to evaluate: no category has ground truth or predictions")
    categories.sort(key=lambda c: c.name)
    return DatasetReport(
        dataset=dataset_name,
        iou_kind=iou_kind,
        thresholds=IOU_THRESHOLDS,
        categories=tuple(categories),
        map=float(np.mean(pooled)),
        dropped_predictions=dropped,
    )
