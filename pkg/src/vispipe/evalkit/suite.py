"""Suite aggregation: the headline number is the mean of per-dataset mAPs."""

from __future__ import annotations

from typing import Mapping, Sequence

from ..errors import EvalInputError

__all__ = ["evaluate_suite", "render_suite_table", "render_dataset_row"]


def evaluate_suite(per_dataset: Sequence[float]) -> float:
    """Arithmetic mean of per-dataset mAP values."""
    values = list(per_dataset)
    if not values:
        raise EvalInputError("suite mean needs at least one dataset value")
    return sum(values) / len(values)


def render_suite_table(values: Mapping[str, float]) -> str:
    """Aligned two-row table: the suite mean first, then one dataset per column.

    Values render with one decimal, exactly as given (no rescaling).
    """
    mean = evaluate_suite(list(values.values()))
    headers = ["mean"] + list(values)
    cells = [f"{mean:.1f}"] + [f"{v:.1f}" for v in values.values()]
    widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
    header_row = " | ".join(h.rjust(w) for h, w in zip(headers, widths))
    value_row = " | ".join(c.rjust(w) for c, w in zip(cells, widths))
    return f"{header_row}\n{value_row}"


def render_dataset_row(dataset: str, map_fraction: float) -> str:
    """Single-dataset row with the mAP on the 0-100 scale, one decimal."""
    return f"{dataset}: mAP {100.0 * map_fraction:.1f}"
