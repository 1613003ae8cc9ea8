"""HTTP service: pipeline runs, batch annotation, review, dataset export."""

from __future__ import annotations

import base64
import json
import threading
from pathlib import Path
from typing import Optional

import httpx
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from ..backends.client import RemoteBackend
from ..backends.types import BackendSet, Capability, ImagePayload
from ..errors import (
    BackendError,
    EvalInputError,
    MalformedRLEError,
    PipelineStageError,
    PipelineTypeError,
    StoreError,
    TargetNotFoundError,
    VispipeError,
)
from ..fixtures import load_scene_dir, render_scene
from ..imaging import png_encode
from ..pipeline.annotate import run_auto_annotate
from ..pipeline.edit import run_grounded_inpaint
from ..pipeline.grounded import GroundedSamConfig, run_grounded_sam
from ..pipeline.mesh import run_promptable_mesh
from ..pipeline.modality import builtin_pipelines
from ..store.coco import validate_document
from ..store.review import ReviewStore, ReviewVerdict, now_iso
from .config import ServiceConfig

__all__ = ["create_app"]


class _BadRequest(VispipeError):
    pass


def _field(doc: dict, key: str, default=None, required: bool = False):
    if key not in doc:
        if required:
            raise _BadRequest(f"missing field '{key}'")
        return default
    return doc[key]


def _parse_image(raw) -> ImagePayload:
    return ImagePayload.from_wire(dict(raw))


def _annotation_wire(ann) -> dict:
    return {
        "image_id": ann.image_id,
        "phrase": ann.phrase,
        "box": ann.box.to_list(),
        "segmentation": ann.mask.to_wire(),
        "score": ann.score,
        "provenance": ann.provenance.to_json(),
    }


class _Datasets:
    """Datasets on disk plus their verdict logs; one writer at a time."""

    def __init__(self, data_dir: Path):
        self.root = data_dir
        self.datasets = data_dir / "datasets"
        self.verdicts = data_dir / "verdicts"
        self._stores: dict[str, ReviewStore] = {}
        self._lock = threading.Lock()

    def save(self, dataset_id: str, document: dict) -> None:
        if not dataset_id or "/" in dataset_id:
            raise _BadRequest(f"bad dataset id {dataset_id!r}")
        with self._lock:
            self.datasets.mkdir(parents=True, exist_ok=True)
            path = self.datasets / f"{dataset_id}.json"
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(document), encoding="utf-8")
            tmp.replace(path)
            self._stores.pop(dataset_id, None)

    def ids(self) -> list[str]:
        if not self.datasets.is_dir():
            return []
        return sorted(p.stem for p in self.datasets.glob("*.json"))

    def store(self, dataset_id: Optional[str]) -> tuple[str, ReviewStore]:
        if dataset_id is None:
            ids = self.ids()
            if len(ids) != 1:
                raise _BadRequest(
                    f"dataset must be named explicitly; stored datasets: {ids}"
                )
            dataset_id = ids[0]
        with self._lock:
            store = self._stores.get(dataset_id)
            if store is None:
                path = self.datasets / f"{dataset_id}.json"
                if not path.is_file():
                    raise StoreError(f"unknown dataset '{dataset_id}'")
                document = json.loads(path.read_text(encoding="utf-8"))
                validate_document(document)
                store = ReviewStore(document, self.verdicts / f"{dataset_id}.jsonl")
                self._stores[dataset_id] = store
            return dataset_id, store


def create_app(config: ServiceConfig, *, transport_factory=None) -> FastAPI:
    """Build the service; transport_factory lets tests stay in-process."""
    clients = {}
    for capability, endpoint in config.backends.items():
        transport = transport_factory(endpoint) if transport_factory else None
        clients[BackendSet._FIELDS[capability]] = RemoteBackend(endpoint, transport=transport)
    backends = BackendSet(**clients)
    scenes = {}
    if config.fixture_dir and Path(config.fixture_dir).is_dir():
        scenes = load_scene_dir(config.fixture_dir)
    datasets = _Datasets(Path(config.data_dir))
    app = FastAPI(title="vispipe service", docs_url=None, redoc_url=None)

    @app.exception_handler(VispipeError)
    async def _domain_error(_req: Request, exc: VispipeError):
        status, code = 400, "bad-request"
        if isinstance(exc, TargetNotFoundError):
            status, code = 404, "target-not-found"
        elif isinstance(exc, StoreError):
            message = str(exc)
            missing_resource = message.startswith("unknown dataset") or message.startswith(
                "unknown pipeline"
            )
            status = 404 if missing_resource else 400
            code = "store-error"
        elif isinstance(exc, (PipelineStageError, BackendError)):
            status, code = 502, "backend-failure"
        elif isinstance(exc, PipelineTypeError):
            code = "pipeline-type-error"
        elif isinstance(exc, (MalformedRLEError, EvalInputError, _BadRequest)):
            code = "bad-request"
        return JSONResponse(status_code=status, content={"error": code, "message": str(exc)})

    def parse_config(doc: dict) -> GroundedSamConfig:
        overrides = _field(doc, "config", {})
        return GroundedSamConfig.from_json({**config.defaults.to_json(), **overrides})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "datasets": datasets.ids(), "scenes": len(scenes)}

    @app.get("/readyz")
    async def readyz():
        reachable: dict[str, bool] = {}
        with httpx.Client(timeout=2.0) as probe:
            for capability, endpoint in config.backends.items():
                if transport_factory is not None:
                    reachable[capability.value] = True
                    continue
                try:
                    probe.get(endpoint.base_url + "/healthz")
                    reachable[capability.value] = True
                except httpx.TransportError:
                    reachable[capability.value] = False
        ready = all(reachable.values())
        return JSONResponse(
            status_code=200 if ready else 503,
            content={"ready": ready, "backends": reachable},
        )

    @app.post("/v1/pipelines/{name}/run")
    def run_pipeline(name: str, doc: dict):
        if name not in builtin_pipelines():
            raise StoreError(f"unknown pipeline '{name}'")
        cfg = parse_config(doc)
        seed = _field(doc, "seed")
        if name == "grounded-sam":
            annotations = run_grounded_sam(
                _parse_image(_field(doc, "image", required=True)),
                _field(doc, "phrases", required=True),
                cfg,
                backends.require(Capability.DETECTOR),
                backends.require(Capability.SEGMENTER),
                seed=seed,
            )
            return {
                "pipeline": name,
                "annotations": [_annotation_wire(a) for a in annotations],
                "provenance": annotations[0].provenance.to_json() if annotations else {},
            }
        if name == "auto-annotate":
            payloads = [_parse_image(raw) for raw in _field(doc, "images", required=True)]
            source = Capability(_field(doc, "source", "tagger"))
            result = run_auto_annotate(
                payloads,
                source,
                cfg,
                backends,
                continue_on_error=bool(_field(doc, "continue_on_error", False)),
                workers=config.workers,
                seed=seed,
            )
            dataset_id = _field(doc, "dataset_id")
            if dataset_id:
                datasets.save(dataset_id, result.document)
            return {
                "pipeline": name,
                "dataset_id": dataset_id,
                "document": result.document,
                "failures": [vars(f) for f in result.failures],
                "provenance": result.document["info"]["provenance"],
            }
        if name == "grounded-inpaint":
            edited, report = run_grounded_inpaint(
                _parse_image(_field(doc, "image", required=True)),
                _field(doc, "target_phrases", required=True),
                _field(doc, "mode", required=True),
                cfg,
                backends,
                prompt=_field(doc, "prompt"),
                top_only=bool(_field(doc, "top_only", False)),
                seed=seed,
            )
            return {
                "pipeline": name,
                "image": edited.to_wire(),
                "report": {
                    "mode": report.mode,
                    "prompt": report.prompt,
                    "region_area": report.region_area,
                    "matched": [_annotation_wire(a) for a in report.matched],
                },
                "provenance": report.matched[0].provenance.to_json(),
            }
        pairs = run_promptable_mesh(
            _parse_image(_field(doc, "image", required=True)),
            _field(doc, "person_phrase", required=True),
            cfg,
            backends,
            seed=seed,
        )
        return {
            "pipeline": name,
            "pairs": [
                {
                    "annotation": _annotation_wire(ann),
                    "mesh": {"params": list(mesh.params), "box": mesh.box.to_list()},
                }
                for ann, mesh in pairs
            ],
            "provenance": pairs[0][0].provenance.to_json(),
        }

    @app.post("/v1/annotate/batch")
    def annotate_batch(doc: dict):
        body = dict(doc)
        body.setdefault("dataset_id", "default")
        return run_pipeline("auto-annotate", body)

    def _queue_image(document: dict, image_entry: dict) -> dict:
        stem = image_entry["file_name"].rsplit(".", 1)[0]
        wire = {
            "image_id": stem,
            "width": image_entry["width"],
            "height": image_entry["height"],
            "file_name": image_entry["file_name"],
        }
        scene = scenes.get(stem)
        if scene is not None:
            wire["png_b64"] = base64.b64encode(png_encode(render_scene(scene))).decode("ascii")
        return wire

    @app.get("/v1/review/queue")
    def review_queue(
        limit: int = Query(default=20, ge=1, le=500),
        dataset: Optional[str] = Query(default=None),
    ):
        dataset_id, store = datasets.store(dataset)
        document = store.document
        categories = {c["id"]: c["name"] for c in document["categories"]}
        images = {im["id"]: im for im in document["images"]}
        pending = store.unreviewed()
        items = []
        for ann in pending[:limit]:
            x, y, w, h = ann["bbox"]
            items.append(
                {
                    "dataset_id": dataset_id,
                    "annotation_id": ann["id"],
                    "phrase": categories[ann["category_id"]],
                    "score": ann.get("score"),
                    "box": [x, y, x + w, y + h],
                    "segmentation": ann["segmentation"],
                    "area": ann["area"],
                    "image": _queue_image(document, images[ann["image_id"]]),
                    "current_verdict": None,
                }
            )
        return {"dataset_id": dataset_id, "total_unreviewed": len(pending), "items": items}

    @app.post("/v1/review/verdicts")
    async def post_verdicts(request: Request, dataset: Optional[str] = Query(default=None)):
        try:
            doc = await request.json()
        except ValueError as exc:
            raise _BadRequest(f"body is not JSON: {exc}") from exc
        if isinstance(doc, dict):
            raw_list = _field(doc, "verdicts", required=True)
            dataset = doc.get("dataset_id", dataset)
        else:
            raw_list = doc
        if not isinstance(raw_list, list) or not raw_list:
            raise _BadRequest("verdict body must be a non-empty list")
        _, store = datasets.store(dataset)
        recorded = []
        for raw in raw_list:
            raw = dict(raw)
            raw.setdefault("at", now_iso())
            recorded.append(store.record(ReviewVerdict.from_json(raw)))
        return {"recorded": len(recorded), "verdicts": [v.to_json() for v in recorded]}

    @app.get("/v1/datasets/{dataset_id}/export")
    def export_dataset(
        dataset_id: str,
        filtered: bool = Query(default=False),
        drop_unreviewed: bool = Query(default=False),
    ):
        _, store = datasets.store(dataset_id)
        if not filtered:
            return store.document
        return store.filtered_document(drop_unreviewed=drop_unreviewed)

    return app
