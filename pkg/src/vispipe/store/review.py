"""Human review of annotations: verdicts, their log, and filtered export.

Verdicts append to a JSON-lines file (one object per line), so the log
survives crashes and diffs cleanly. The current state is the last verdict
per annotation; earlier lines remain as history.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Optional

from ..errors import StoreError

__all__ = ["ReviewVerdict", "VerdictLog", "ReviewStore", "filtered_export"]

_VERDICT_KINDS = ("accept", "reject", "relabel")


@dataclass(frozen=True)
class ReviewVerdict:
    annotation_id: int
    verdict: str
    reviewer: str
    at: str
    new_category_name: Optional[str] = None

    def __post_init__(self):
        if self.verdict not in _VERDICT_KINDS:
            raise StoreError(f"unknown verdict kind {self.verdict!r}")
        if self.verdict == "relabel" and not self.new_category_name:
            raise StoreError("relabel verdicts need new_category_name")
        if self.verdict != "relabel" and self.new_category_name is not None:
            raise StoreError(f"{self.verdict} verdicts must not carry new_category_name")
        if not self.reviewer:
            raise StoreError("reviewer must be non-empty")

    def to_json(self) -> dict:
        doc = {
            "annotation_id": self.annotation_id,
            "verdict": self.verdict,
            "reviewer": self.reviewer,
            "at": self.at,
        }
        if self.new_category_name is not None:
            doc["new_category_name"] = self.new_category_name
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "ReviewVerdict":
        try:
            return cls(
                annotation_id=int(doc["annotation_id"]),
                verdict=doc["verdict"],
                reviewer=doc["reviewer"],
                at=doc["at"],
                new_category_name=doc.get("new_category_name"),
            )
        except KeyError as exc:
            raise StoreError(f"verdict line missing {exc}") from exc


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class VerdictLog:
    """Append-only JSONL log with a current-state index rebuilt on load."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.history: list[ReviewVerdict] = []
        self.current: dict[int, ReviewVerdict] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        verdict = ReviewVerdict.from_json(json.loads(line))
                    except json.JSONDecodeError as exc:
                        raise StoreError(f"{self.path}:{line_no}: bad verdict line: {exc}")
                    self._apply(verdict)

    def _apply(self, verdict: ReviewVerdict) -> None:
        self.history.append(verdict)
        self.current[verdict.annotation_id] = verdict

    def record(self, verdict: ReviewVerdict) -> None:
        """Persist then index; writes are serialized through one lock."""
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(verdict.to_json()) + "\n")
            self._apply(verdict)


class ReviewStore:
    """A COCO document paired with its verdict log."""

    def __init__(self, document: dict, log_path: str | Path):
        self.document = document
        self._known_ids = {ann["id"] for ann in document["annotations"]}
        self.log = VerdictLog(log_path)

    def record(self, verdict: ReviewVerdict) -> ReviewVerdict:
        if verdict.annotation_id not in self._known_ids:
            raise StoreError(f"unknown annotation id {verdict.annotation_id}")
        self.log.record(verdict)
        return verdict

    def current(self) -> dict[int, ReviewVerdict]:
        return dict(self.log.current)

    def history(self) -> list[ReviewVerdict]:
        return list(self.log.history)

    def unreviewed(self, limit: Optional[int] = None) -> list[dict]:
        pending = [
            ann for ann in self.document["annotations"] if ann["id"] not in self.log.current
        ]
        return pending if limit is None else pending[:limit]

    def filtered_document(self, drop_unreviewed: bool = False) -> dict:
        return filtered_export(self.document, self.current(), drop_unreviewed=drop_unreviewed)


def filtered_export(
    doc: dict,
    verdicts: Mapping[int, ReviewVerdict],
    *,
    drop_unreviewed: bool = False,
) -> dict:
    """Apply review verdicts: drop rejects, relabel, re-sequence ids.

    Never invents annotations; categories keep their ids and new relabel
    names are appended lexicographically after the existing ones.
    """
    for verdict in verdicts.values():
        if verdict.annotation_id not in {a["id"] for a in doc["annotations"]}:
            raise StoreError(f"verdict for unknown annotation id {verdict.annotation_id}")

    categories = [dict(c) for c in doc["categories"]]
    name_to_id = {c["name"]: c["id"] for c in categories}
    new_names = sorted(
        {
            v.new_category_name
            for v in verdicts.values()
            if v.verdict == "relabel" and v.new_category_name not in name_to_id
        }
    )
    next_id = max((c["id"] for c in categories), default=0) + 1
    for name in new_names:
        categories.append({"id": next_id, "name": name})
        name_to_id[name] = next_id
        next_id += 1

    kept = []
    counts = {"accepted": 0, "rejected": 0, "relabeled": 0, "unreviewed": 0}
    for ann in doc["annotations"]:
        verdict = verdicts.get(ann["id"])
        if verdict is None:
            counts["unreviewed"] += 1
            if drop_unreviewed:
                continue
            kept.append(dict(ann))
        elif verdict.verdict == "reject":
            counts["rejected"] += 1
        elif verdict.verdict == "accept":
            counts["accepted"] += 1
            kept.append(dict(ann))
        else:
            counts["relabeled"] += 1
            relabeled = dict(ann)
            relabeled["category_id"] = name_to_id[verdict.new_category_name]
            kept.append(relabeled)

    for seq, ann in enumerate(kept, start=1):
        ann["id"] = seq

    info = dict(doc.get("info", {}))
    provenance = dict(info.get("provenance", {}))
    provenance["review"] = {**counts, "dropped_unreviewed": drop_unreviewed}
    info["provenance"] = provenance
    return {
        "info": info,
        "images": [dict(im) for im in doc["images"]],
        "annotations": kept,
        "categories": categories,
    }
