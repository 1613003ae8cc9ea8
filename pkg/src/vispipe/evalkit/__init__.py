"""COCO-style mask/box average precision and suite aggregation."""

from .ap import RECALL_THRESHOLDS, average_precision
from .dataset import CategoryEval, DatasetReport, IOU_THRESHOLDS, evaluate_dataset
from .matching import MatchResult, match_greedy
from .suite import evaluate_suite, render_suite_table

__all__ = [
    "RECALL_THRESHOLDS",
    "IOU_THRESHOLDS",
    "average_precision",
    "CategoryEval",
    "DatasetReport",
    "evaluate_dataset",
    "MatchResult",
    "match_greedy",
    "evaluate_suite",
    "render_suite_table",
]
