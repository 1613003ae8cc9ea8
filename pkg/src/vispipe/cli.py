"""Command-line surface: fixtures, mock backends, annotate, evaluate, edit, serve.

Exit codes: 0 success, 1 runtime failure, 2 usage/config/input error,
3 target-not-found. Output files are written atomically (temp + rename)
so a failed run never leaves a truncated document behind.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .backends.client import RemoteBackend
from .backends.mock import MockBehavior
from .backends.server import create_mock_server
from .backends.types import BackendEndpoint, BackendSet, Capability, ImagePayload
from .errors import (
    EvalInputError,
    MalformedRLEError,
    StoreError,
    TargetNotFoundError,
    VispipeError,
)
from .fixtures import generate_suite, load_scene_dir, save_scene
from .pipeline.annotate import run_auto_annotate
from .pipeline.edit import run_grounded_inpaint
from .pipeline.grounded import GroundedSamConfig
from .store.coco import ground_truth_document
from .evalkit import evaluate_dataset, evaluate_suite, render_suite_table
from .evalkit.suite import render_dataset_row

EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_NOT_FOUND = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _write_atomic(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    tmp.replace(path)


def _write_atomic_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def _backend_set(base_url: str, timeout_ms: int, max_retries: int) -> BackendSet:
    clients = {}
    for capability in Capability:
        endpoint = BackendEndpoint(
            capability=capability,
            base_url=base_url,
            timeout_ms=timeout_ms,
            max_retries=max_retries,
        )
        clients[BackendSet._FIELDS[capability]] = RemoteBackend(endpoint)
    return BackendSet(**clients)


def _scene_payloads(fixture_dir: str) -> list[ImagePayload]:
    scenes = load_scene_dir(fixture_dir)
    return [
        ImagePayload(
            image_id=scene.scene_id,
            width=scene.width,
            height=scene.height,
            scene_id=scene.scene_id,
        )
        for scene in scenes.values()
    ]


def _config_from_flags(box_threshold, nms_iou, no_nms, class_agnostic_nms, max_detections):
    return GroundedSamConfig(
        box_threshold=box_threshold,
        nms_iou=nms_iou,
        nms_enabled=not no_nms,
        class_aware_nms=not class_agnostic_nms,
        max_detections=max_detections,
    )


def _grounded_flags(fn):
    fn = click.option("--box-threshold", type=float, default=0.30, show_default=True)(fn)
    fn = click.option("--nms-iou", type=float, default=0.5, show_default=True)(fn)
    fn = click.option("--no-nms", is_flag=True, help="Disable suppression entirely.")(fn)
    fn = click.option(
        "--class-agnostic-nms", is_flag=True, help="Suppress across phrases too."
    )(fn)
    fn = click.option("--max-detections", type=int, default=100, show_default=True)(fn)
    return fn


@click.group()
def main():
    """Compose remote vision capabilities into annotation pipelines."""


@main.command()
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--scenes", "num_scenes", type=int, default=6, show_default=True)
@click.option("--objects", "objects_per_scene", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--width", type=int, default=128, show_default=True)
@click.option("--height", type=int, default=96, show_default=True)
def fixtures(out, num_scenes, objects_per_scene, seed, width, height):
    """Generate a deterministic fixture-scene suite plus its ground truth."""
    suite = generate_suite(
        seed,
        num_scenes=num_scenes,
        objects_per_scene=objects_per_scene,
        width=width,
        height=height,
    )
    out_dir = Path(out)
    scene_dir = out_dir / "scenes"
    scene_dir.mkdir(parents=True, exist_ok=True)
    for scene_id, scene in suite.items():
        save_scene(scene, scene_dir / f"{scene_id}.json")
    _write_atomic(out_dir / "gt.json", json.dumps(ground_truth_document(suite)))
    click.echo(f"wrote {len(suite)} scenes to {scene_dir} and ground truth to {out_dir / 'gt.json'}")


@main.command("mock-backend")
@click.option("--scenes", "scene_dir", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8020, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jitter", type=float, default=0.0, show_default=True, help="Box jitter in pixels.")
@click.option("--drop-per-scene", type=int, default=0, show_default=True)
def mock_backend(scene_dir, host, port, seed, jitter, drop_per_scene):
    """Serve all six capability routes from fixture scenes."""
    import uvicorn

    try:
        scenes = load_scene_dir(scene_dir)
    except VispipeError as exc:
        _fail(EXIT_USAGE, str(exc))
    behavior = MockBehavior(seed=seed, jitter_px=jitter, drop_per_scene=drop_per_scene)
    app = create_mock_server(scenes, behavior)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.argument("images", nargs=-1, type=click.Path(exists=True))
@click.option("--fixtures", "fixture_dir", type=click.Path(exists=True), help="Scene directory.")
@click.option("--backend", required=True, help="Base URL serving the capability routes.")
@click.option("--out", required=True, type=click.Path())
@click.option("--auto", is_flag=True, help="Derive phrases per image (tagger/captioner).")
@click.option("--source", type=click.Choice(["tagger", "captioner"]), default="tagger", show_default=True)
@click.option("--phrases", help="Comma-separated phrase list (alternative to --auto).")
@click.option("--continue-on-error", is_flag=True)
@click.option("--workers", type=int, default=None, help="Parallel images (default: CPUs).")
@click.option("--seed", type=int, default=None, help="Recorded in provenance.")
@click.option("--timeout-ms", type=int, default=10000, show_default=True)
@click.option("--max-retries", type=int, default=2, show_default=True)
@_grounded_flags
def annotate(
    images,
    fixture_dir,
    backend,
    out,
    auto,
    source,
    phrases,
    continue_on_error,
    workers,
    seed,
    timeout_ms,
    max_retries,
    box_threshold,
    nms_iou,
    no_nms,
    class_agnostic_nms,
    max_detections,
):
    """Run the annotation pipeline over images and write a COCO document."""
    if auto == bool(phrases):
        raise click.UsageError("use exactly one of --auto or --phrases")
    payloads: list[ImagePayload] = []
    if fixture_dir:
        payloads.extend(_scene_payloads(fixture_dir))
    for image_path in images:
        payloads.append(_png_payload(Path(image_path)))
    if not payloads:
        raise click.UsageError("no images: pass image files or --fixtures DIR")

    cfg = _config_from_flags(box_threshold, nms_iou, no_nms, class_agnostic_nms, max_detections)
    backends = _backend_set(backend, timeout_ms, max_retries)
    run_source = (
        Capability(source) if auto else [p.strip() for p in phrases.split(",") if p.strip()]
    )
    try:
        result = run_auto_annotate(
            payloads,
            run_source,
            cfg,
            backends,
            continue_on_error=continue_on_error,
            workers=workers,
            seed=seed,
        )
    except VispipeError as exc:
        _fail(EXIT_RUNTIME, str(exc))
    _write_atomic(Path(out), json.dumps(result.document))
    for failure in result.failures:
        click.echo(
            f"warning: image '{failure.image_id}' skipped at stage "
            f"{failure.stage}: {failure.message}",
            err=True,
        )
    click.echo(
        f"wrote {len(result.document['annotations'])} annotations over "
        f"{len(result.document['images'])} images to {out}"
    )


def _png_payload(path: Path) -> ImagePayload:
    from .imaging import png_decode

    data = path.read_bytes()
    pixels = png_decode(data)
    return ImagePayload(
        image_id=path.stem, width=pixels.shape[1], height=pixels.shape[0], png=data
    )


@main.command()
@click.option("--pred", "pred_path", type=click.Path(exists=True), help="Predictions document.")
@click.option("--gt", "gt_path", type=click.Path(exists=True), help="Ground-truth document.")
@click.option("--iou-kind", type=click.Choice(["mask", "box"]), default="mask", show_default=True)
@click.option("--report", "report_path", type=click.Path(), help="Write the JSON report here.")
@click.option("--dataset-name", default=None, help="Row label (default: pred file stem).")
@click.option("--suite", "suite_path", type=click.Path(exists=True), help="JSON {dataset: mAP} map to aggregate.")
def evaluate(pred_path, gt_path, iou_kind, report_path, dataset_name, suite_path):
    """Evaluate predictions against ground truth, or aggregate a suite."""
    if suite_path:
        if pred_path or gt_path:
            raise click.UsageError("--suite does not combine with --pred/--gt")
        values = _load_json(Path(suite_path))
        if not isinstance(values, dict) or not values:
            _fail(EXIT_USAGE, f"{suite_path}: expected a non-empty {{dataset: value}} object")
        click.echo(render_suite_table(values))
        mean = evaluate_suite(list(values.values()))
        if report_path:
            _write_atomic(
                Path(report_path),
                json.dumps({"suite_mean": mean, "datasets": values}),
            )
        return
    if not pred_path or not gt_path:
        raise click.UsageError("provide --pred and --gt (or --suite)")
    preds = _load_json(Path(pred_path))
    gts = _load_json(Path(gt_path))
    name = dataset_name or Path(pred_path).stem
    try:
        report = evaluate_dataset(preds, gts, iou_kind, dataset_name=name)
    except (StoreError, MalformedRLEError, EvalInputError, VispipeError) as exc:
        _fail(EXIT_USAGE, str(exc))
    click.echo(render_dataset_row(name, report.map))
    if report.dropped_predictions:
        click.echo(
            f"warning: dropped {report.dropped_predictions} predictions with "
            "no matching ground-truth category",
            err=True,
        )
    if report_path:
        _write_atomic(Path(report_path), json.dumps(report.to_json()))


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        _fail(EXIT_USAGE, f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")


@main.command()
@click.option("--fixtures", "fixture_dir", type=click.Path(exists=True), help="Scene directory.")
@click.option("--scene", "scene_id", help="Scene id to edit (with --fixtures).")
@click.option("--image", "image_path", type=click.Path(exists=True), help="PNG file to edit.")
@click.option("--backend", required=True)
@click.option("--target", required=True, help="Phrase(s) to locate, comma-separated.")
@click.option("--mode", type=click.Choice(["replace", "remove"]), required=True)
@click.option("--prompt", help="Replacement prompt (replace mode).")
@click.option("--top-only", is_flag=True, help="Edit only the best-scored instance.")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--timeout-ms", type=int, default=10000, show_default=True)
@click.option("--max-retries", type=int, default=2, show_default=True)
@_grounded_flags
def edit(
    fixture_dir,
    scene_id,
    image_path,
    backend,
    target,
    mode,
    prompt,
    top_only,
    out,
    seed,
    timeout_ms,
    max_retries,
    box_threshold,
    nms_iou,
    no_nms,
    class_agnostic_nms,
    max_detections,
):
    """Locate target phrases and inpaint them (replace or remove)."""
    if mode == "remove" and prompt:
        click.echo("warning: --prompt is ignored in remove mode", err=True)
        prompt = None
    if (image_path is None) == (scene_id is None):
        raise click.UsageError("use exactly one of --image or (--fixtures + --scene)")
    if scene_id is not None:
        if not fixture_dir:
            raise click.UsageError("--scene needs --fixtures DIR")
        scenes = load_scene_dir(fixture_dir)
        if scene_id not in scenes:
            _fail(EXIT_USAGE, f"scene '{scene_id}' not found under {fixture_dir}")
        scene = scenes[scene_id]
        payload = ImagePayload(
            image_id=scene_id, width=scene.width, height=scene.height, scene_id=scene_id
        )
    else:
        payload = _png_payload(Path(image_path))

    cfg = _config_from_flags(box_threshold, nms_iou, no_nms, class_agnostic_nms, max_detections)
    backends = _backend_set(backend, timeout_ms, max_retries)
    targets = [p.strip() for p in target.split(",") if p.strip()]
    try:
        edited, report = run_grounded_inpaint(
            payload, targets, mode, cfg, backends, prompt=prompt, top_only=top_only, seed=seed
        )
    except TargetNotFoundError as exc:
        _fail(EXIT_NOT_FOUND, str(exc))
    except VispipeError as exc:
        _fail(EXIT_RUNTIME, str(exc))
    if edited.png is None:
        _fail(EXIT_RUNTIME, "backend returned a scene reference instead of pixels")
    _write_atomic_bytes(Path(out), edited.png)
    click.echo(
        f"edited {len(report.matched)} instance(s), region {report.region_area}px -> {out}"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def serve(config_path):
    """Run the pipeline/review service (env: VISPIPE_LISTEN, VISPIPE_DATA_DIR)."""
    import uvicorn

    from .service import ServiceConfig, create_app

    try:
        config = ServiceConfig.from_file(config_path)
        app = create_app(config)
        host, port = config.host, config.port
    except (VispipeError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_USAGE, f"invalid config: {exc}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
