import json

import pytest
from fastapi.testclient import TestClient

from vispipe.backends.server import create_mock_server
from vispipe.backends.types import BackendEndpoint, Capability
from vispipe.errors import VispipeError
from vispipe.fixtures import save_scene
from vispipe.pipeline import GroundedSamConfig
from vispipe.service import ServiceConfig, create_app

from .conftest import app_transport


@pytest.fixture
def service(suite_scenes, tmp_path):
    """Service wired to an in-process mock backend app."""
    fixture_dir = tmp_path / "scenes"
    fixture_dir.mkdir()
    for scene_id, scene in suite_scenes.items():
        save_scene(scene, fixture_dir / f"{scene_id}.json")
    mock_app = create_mock_server(suite_scenes)
    transport = app_transport(mock_app)
    config = ServiceConfig(
        backends={
            cap: BackendEndpoint(capability=cap, base_url="http://mock.test")
            for cap in Capability
        },
        data_dir=tmp_path / "data",
        fixture_dir=fixture_dir,
        workers=2,
        defaults=GroundedSamConfig(),
    )
    app = create_app(config, transport_factory=lambda endpoint: transport)
    return TestClient(app)


def scene_wire(scene):
    return {
        "image_id": scene.scene_id,
        "width": scene.width,
        "height": scene.height,
        "scene_id": scene.scene_id,
    }


def first_scene(suite_scenes):
    return suite_scenes[sorted(suite_scenes)[0]]


def seed_dataset(service, suite_scenes, dataset_id="run1"):
    body = {
        "images": [scene_wire(s) for s in suite_scenes.values()],
        "source": "tagger",
        "dataset_id": dataset_id,
        "seed": 0,
    }
    resp = service.post("/v1/annotate/batch", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()


class TestHealth:
    def test_healthz(self, service):
        body = service.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["scenes"] == 6

    def test_readyz(self, service):
        resp = service.get("/readyz")
        assert resp.status_code == 200
        body = resp.json()
        assert body["ready"] is True
        assert set(body["backends"]) == {c.value for c in Capability}


class TestConfig:
    def test_missing_capability_named(self, tmp_path):
        backends = {
            cap: BackendEndpoint(capability=cap, base_url="http://x")
            for cap in Capability
            if cap != Capability.SEGMENTER
        }
        with pytest.raises(VispipeError, match="segmenter"):
            ServiceConfig(backends=backends, data_dir=tmp_path)

    def test_default_backend_applies_to_all(self, tmp_path):
        config = ServiceConfig.from_json(
            {
                "backends": {"default": {"base_url": "http://b"}},
                "data_dir": str(tmp_path),
            }
        )
        assert config.backends[Capability.INPAINTER].base_url == "http://b"

    def test_env_overrides(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VISPIPE_LISTEN", "0.0.0.0:9999")
        monkeypatch.setenv("VISPIPE_DATA_DIR", str(tmp_path / "elsewhere"))
        config = ServiceConfig.from_json(
            {"backends": {"default": {"base_url": "http://b"}}, "data_dir": str(tmp_path)}
        )
        assert config.listen == "0.0.0.0:9999"
        assert config.port == 9999
        assert config.data_dir == tmp_path / "elsewhere"


class TestPipelineRoutes:
    def test_grounded_sam_run(self, service, suite_scenes):
        scene = first_scene(suite_scenes)
        resp = service.post(
            "/v1/pipelines/grounded-sam/run",
            json={"image": scene_wire(scene), "phrases": scene.labels(), "seed": 5},
        )
        assert resp.status_code == 200, resp.text
        body = resp.json()
        assert len(body["annotations"]) == len(scene.objects)
        assert body["provenance"]["pipeline"] == "grounded-sam"
        assert body["provenance"]["seed"] == 5
        scores = [a["score"] for a in body["annotations"]]
        assert scores == sorted(scores, reverse=True)

    def test_config_override(self, service, suite_scenes):
        scene = first_scene(suite_scenes)
        resp = service.post(
            "/v1/pipelines/grounded-sam/run",
            json={
                "image": scene_wire(scene),
                "phrases": scene.labels(),
                "config": {"max_detections": 1},
            },
        )
        assert len(resp.json()["annotations"]) == 1

    def test_unknown_pipeline_404(self, service, suite_scenes):
        resp = service.post("/v1/pipelines/nope/run", json={})
        assert resp.status_code == 404
        assert resp.json()["error"] == "store-error"

    def test_inpaint_target_not_found(self, service, suite_scenes):
        scene = first_scene(suite_scenes)
        resp = service.post(
            "/v1/pipelines/grounded-inpaint/run",
            json={
                "image": scene_wire(scene),
                "target_phrases": ["unicorn"],
                "mode": "remove",
            },
        )
        assert resp.status_code == 404
        assert resp.json()["error"] == "target-not-found"

    def test_promptable_mesh_run(self, service, suite_scenes):
        scene = first_scene(suite_scenes)
        label = scene.objects[0].label
        resp = service.post(
            "/v1/pipelines/promptable-mesh/run",
            json={"image": scene_wire(scene), "person_phrase": label},
        )
        assert resp.status_code == 200
        pairs = resp.json()["pairs"]
        assert pairs
        assert len(pairs[0]["mesh"]["params"]) == 16

    def test_bad_request_shape(self, service):
        resp = service.post("/v1/pipelines/grounded-sam/run", json={"phrases": ["x"]})
        assert resp.status_code == 400
        assert "image" in resp.json()["message"]


class TestReviewFlow:
    def test_batch_then_queue_then_verdicts_then_export(self, service, suite_scenes):
        seeded = seed_dataset(service, suite_scenes)
        total = len(seeded["document"]["annotations"])
        assert total == sum(len(s.objects) for s in suite_scenes.values())

        queue = service.get("/v1/review/queue", params={"limit": 5}).json()
        assert queue["dataset_id"] == "run1"
        assert queue["total_unreviewed"] == total
        assert len(queue["items"]) == 5
        item = queue["items"][0]
        assert item["image"]["png_b64"]  # fixture-backed images render inline
        assert item["segmentation"]["size"] == [96, 128]
        assert item["box"][2] > item["box"][0]

        first, second = queue["items"][0], queue["items"][1]
        resp = service.post(
            "/v1/review/verdicts",
            json=[
                {"annotation_id": first["annotation_id"], "verdict": "reject", "reviewer": "qa"},
                {
                    "annotation_id": second["annotation_id"],
                    "verdict": "relabel",
                    "new_category_name": "capuchin",
                    "reviewer": "qa",
                },
            ],
        )
        assert resp.status_code == 200, resp.text
        assert resp.json()["recorded"] == 2

        queue2 = service.get("/v1/review/queue", params={"limit": 500}).json()
        remaining_ids = {i["annotation_id"] for i in queue2["items"]}
        assert first["annotation_id"] not in remaining_ids
        assert second["annotation_id"] not in remaining_ids
        assert queue2["total_unreviewed"] == total - 2

        raw = service.get("/v1/datasets/run1/export").json()
        assert len(raw["annotations"]) == total

        filtered = service.get(
            "/v1/datasets/run1/export", params={"filtered": "true"}
        ).json()
        assert len(filtered["annotations"]) == total - 1  # reject dropped
        names = {c["name"] for c in filtered["categories"]}
        assert "capuchin" in names
        assert filtered["info"]["provenance"]["review"]["rejected"] == 1

    def test_unknown_dataset_404(self, service):
        resp = service.get("/v1/datasets/ghost/export")
        assert resp.status_code == 404

    def test_verdict_unknown_annotation(self, service, suite_scenes):
        seed_dataset(service, suite_scenes)
        resp = service.post(
            "/v1/review/verdicts",
            json=[{"annotation_id": 10_000, "verdict": "accept", "reviewer": "qa"}],
        )
        assert resp.status_code == 400
        assert "unknown annotation" in resp.json()["message"]

    def test_queue_needs_dataset_when_ambiguous(self, service, suite_scenes):
        seed_dataset(service, suite_scenes, "a")
        seed_dataset(service, suite_scenes, "b")
        resp = service.get("/v1/review/queue")
        assert resp.status_code == 400
        ok = service.get("/v1/review/queue", params={"dataset": "a"})
        assert ok.status_code == 200

    def test_verdicts_persist_across_app_restarts(self, service, suite_scenes, tmp_path):
        seed_dataset(service, suite_scenes)
        service.post(
            "/v1/review/verdicts",
            json=[{"annotation_id": 1, "verdict": "accept", "reviewer": "qa"}],
        )
        log = tmp_path / "data" / "verdicts" / "run1.jsonl"
        assert log.is_file()
        line = json.loads(log.read_text().splitlines()[0])
        assert line["annotation_id"] == 1
        assert line["verdict"] == "accept"
        assert line["reviewer"] == "qa"
        assert "at" in line
