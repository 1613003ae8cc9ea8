import json

import numpy as np
import pytest

from vispipe.backends import ImagePayload, MockBackends, MockBehavior
from vispipe.backends.mock import MESH_PARAM_LENGTH
from vispipe.errors import (
    DimensionMismatchError,
    UnknownSceneError,
    VispipeError,
)
from vispipe.fixtures import (
    FixtureScene,
    load_scene,
    render_scene,
    save_scene,
)
from vispipe.geometry import Box
from vispipe.imaging import png_decode, png_encode, prompt_color
from vispipe.rlemask import RLEMask, mask_area, mask_iou

from .conftest import make_scene, payload_for, rect_mask


class TestFixtureScene:
    def test_json_roundtrip(self, pets_scene, tmp_path):
        path = tmp_path / "pets.json"
        save_scene(pets_scene, path)
        assert load_scene(path) == pets_scene

    def test_rejects_uppercase_label(self):
        with pytest.raises(VispipeError, match="lowercase"):
            make_scene(objects=[("Cat", 2, 9, 3, 10, 0.9)])

    def test_rejects_mask_outside_box(self):
        mask = rect_mask(20, 20, 0, 10, 0, 10)
        from vispipe.fixtures import SceneObject

        with pytest.raises(VispipeError, match="spills"):
            FixtureScene(
                scene_id="bad",
                width=20,
                height=20,
                objects=(
                    SceneObject(label="cat", box=Box(0, 0, 5, 5), mask=mask, detect_score=0.5),
                ),
            )

    def test_rejects_wrong_mask_size(self):
        from vispipe.fixtures import SceneObject

        with pytest.raises(VispipeError, match="mask size"):
            FixtureScene(
                scene_id="bad",
                width=20,
                height=20,
                objects=(
                    SceneObject(
                        label="cat",
                        box=Box(0, 0, 5, 5),
                        mask=rect_mask(10, 10, 0, 5, 0, 5),
                        detect_score=0.5,
                    ),
                ),
            )

    def test_generated_suite_is_deterministic(self, suite_scenes):
        from vispipe.fixtures import generate_suite

        again = generate_suite(seed=0, num_scenes=6, objects_per_scene=4)
        assert {k: v.to_json() for k, v in again.items()} == {
            k: v.to_json() for k, v in suite_scenes.items()
        }


class TestImagePayload:
    def test_requires_exactly_one_content(self):
        with pytest.raises(VispipeError):
            ImagePayload(image_id="x", width=2, height=2)
        with pytest.raises(VispipeError):
            ImagePayload(image_id="x", width=2, height=2, png=b"123", scene_id="s")

    def test_wire_roundtrip_png(self):
        payload = ImagePayload(image_id="x", width=2, height=2, png=b"\x89PNG123")
        assert ImagePayload.from_wire(payload.to_wire()) == payload

    def test_wire_roundtrip_scene(self):
        payload = ImagePayload(image_id="x", width=2, height=2, scene_id="s")
        doc = payload.to_wire()
        assert doc == {"image_id": "x", "width": 2, "height": 2, "scene_id": "s"}
        assert ImagePayload.from_wire(doc) == payload


def mocks_for(*scenes, behavior=MockBehavior()):
    return MockBackends({s.scene_id: s for s in scenes}, behavior)


class TestMockDetect:
    def test_matching_phrase(self, pets_scene):
        backends = mocks_for(pets_scene)
        dets = backends.detect(payload_for(pets_scene), ["cat", "zebra"], 0.3)
        assert len(dets) == 1
        assert dets[0].phrase == "cat"
        assert dets[0].score == 0.9
        assert dets[0].box == Box(3, 2, 10, 9)

    def test_no_label_match(self, pets_scene):
        assert mocks_for(pets_scene).detect(payload_for(pets_scene), ["zebra"], 0.3) == []

    def test_threshold_excludes(self):
        scene = make_scene(objects=[("cat", 2, 9, 3, 10, 0.2)])
        assert mocks_for(scene).detect(payload_for(scene), ["cat"], 0.3) == []

    def test_case_insensitive_phrases(self, pets_scene):
        dets = mocks_for(pets_scene).detect(payload_for(pets_scene), ["CAT"], 0.3)
        assert [d.phrase for d in dets] == ["cat"]

    def test_unknown_scene(self, pets_scene):
        backends = mocks_for(pets_scene)
        payload = ImagePayload(image_id="x", width=20, height=20, scene_id="missing")
        with pytest.raises(UnknownSceneError):
            backends.detect(payload, ["cat"], 0.3)

    def test_empty_phrases_rejected(self, pets_scene):
        with pytest.raises(VispipeError):
            mocks_for(pets_scene).detect(payload_for(pets_scene), ["  "], 0.3)

    def test_jitter_is_deterministic_and_in_bounds(self, pets_scene):
        behavior = MockBehavior(seed=9, jitter_px=3.0)
        a = mocks_for(pets_scene, behavior=behavior).detect(payload_for(pets_scene), ["cat"], 0.3)
        b = mocks_for(pets_scene, behavior=behavior).detect(payload_for(pets_scene), ["cat"], 0.3)
        assert a == b
        assert a[0].box != Box(3, 2, 10, 9)
        assert 0 <= a[0].box.x1 and a[0].box.x2 <= 20

    def test_drop_per_scene(self, pets_scene):
        behavior = MockBehavior(drop_per_scene=1)
        dets = mocks_for(pets_scene, behavior=behavior).detect(
            payload_for(pets_scene), ["cat", "dog"], 0.3
        )
        assert [d.phrase for d in dets] == ["dog"]


class TestMockSegment:
    def test_exact_prompt_returns_fixture_mask(self, pets_scene):
        backends = mocks_for(pets_scene)
        masks = backends.segment(payload_for(pets_scene), [Box(3, 2, 10, 9)])
        assert mask_iou(masks[0], pets_scene.objects[0].mask) == 1.0

    def test_prompt_overlapping_nothing_is_rectangle(self, pets_scene):
        masks = mocks_for(pets_scene).segment(payload_for(pets_scene), [Box(0, 14, 4, 19)])
        assert mask_area(masks[0]) == 4 * 5

    def test_order_follows_prompts(self, pets_scene):
        backends = mocks_for(pets_scene)
        masks = backends.segment(
            payload_for(pets_scene), [Box(11, 12, 19, 18), Box(3, 2, 10, 9)]
        )
        assert mask_iou(masks[0], pets_scene.objects[1].mask) == 1.0
        assert mask_iou(masks[1], pets_scene.objects[0].mask) == 1.0

    def test_unclipped_prompt_rejected(self, pets_scene):
        with pytest.raises(VispipeError, match="not clipped"):
            mocks_for(pets_scene).segment(payload_for(pets_scene), [Box(-1, 0, 5, 5)])


class TestMockTagCaption:
    def test_tags_dedup_lexicographic(self):
        scene = make_scene(
            objects=[
                ("dog", 2, 8, 2, 8, 0.5),
                ("cat", 12, 18, 2, 8, 0.5),
                ("cat", 12, 18, 12, 18, 0.5),
            ]
        )
        assert mocks_for(scene).tag(payload_for(scene)) == ["cat", "dog"]

    def test_empty_scene(self, empty_scene):
        backends = mocks_for(empty_scene)
        assert backends.tag(payload_for(empty_scene)) == []
        assert backends.caption(payload_for(empty_scene)) == "a photo"

    def test_long_tail_label_passthrough(self):
        scene = make_scene(objects=[("zale horrida", 2, 9, 3, 10, 0.9)])
        assert mocks_for(scene).tag(payload_for(scene)) == ["zale horrida"]

    def test_caption_joins_labels(self, pets_scene):
        assert mocks_for(pets_scene).caption(payload_for(pets_scene)) == "a photo of cat and dog"

    def test_caption_single_label(self):
        scene = make_scene(objects=[("cow", 2, 9, 3, 10, 0.9)])
        assert mocks_for(scene).caption(payload_for(scene)) == "a photo of cow"


class TestMockInpaint:
    def test_empty_region_returns_input_unchanged(self, pets_scene):
        payload = payload_for(pets_scene)
        region = RLEMask(20, 20, (400,))
        assert mocks_for(pets_scene).inpaint(payload, region, "x") is payload

    def test_full_region_uniform_color_and_deterministic(self, pets_scene):
        backends = mocks_for(pets_scene)
        region = RLEMask(20, 20, (0, 400))
        first = backends.inpaint(payload_for(pets_scene), region, "blue sky")
        second = backends.inpaint(payload_for(pets_scene), region, "blue sky")
        assert first.png == second.png
        pixels = png_decode(first.png)
        assert (pixels == prompt_color("blue sky")).all()

    def test_half_mask_changes_only_masked_half(self, pets_scene):
        region = rect_mask(20, 20, 0, 20, 0, 10)
        edited = mocks_for(pets_scene).inpaint(payload_for(pets_scene), region, "grass")
        base = render_scene(pets_scene)
        out = png_decode(edited.png)
        np.testing.assert_array_equal(out[:, 10:], base[:, 10:])
        assert (out[:, :10] == prompt_color("grass")).all()

    def test_png_payload_input(self, pets_scene):
        base = render_scene(pets_scene)
        payload = ImagePayload(image_id="p", width=20, height=20, png=png_encode(base))
        region = rect_mask(20, 20, 0, 5, 0, 5)
        edited = mocks_for(pets_scene).inpaint(payload, region, "sky")
        out = png_decode(edited.png)
        np.testing.assert_array_equal(out[5:, :], base[5:, :])

    def test_dimension_mismatch(self, pets_scene):
        region = RLEMask(10, 10, (100,))
        with pytest.raises(DimensionMismatchError):
            mocks_for(pets_scene).inpaint(payload_for(pets_scene), region, "x")


class TestMockMesh:
    def test_declared_length_and_echoed_box(self, pets_scene):
        result = mocks_for(pets_scene).recover_mesh(payload_for(pets_scene), Box(1, 1, 5, 5))
        assert len(result.params) == MESH_PARAM_LENGTH
        assert result.params == (0.0,) * MESH_PARAM_LENGTH
        assert result.box == Box(1, 1, 5, 5)

    def test_stateless(self, pets_scene):
        backends = mocks_for(pets_scene)
        a = backends.recover_mesh(payload_for(pets_scene), Box(1, 1, 5, 5))
        b = backends.recover_mesh(payload_for(pets_scene), Box(2, 2, 6, 6))
        assert a.box != b.box
        assert a.params == b.params


class TestMockDeterminism:
    def test_byte_identical_responses(self, suite_scenes):
        behavior = MockBehavior(seed=3, jitter_px=2.0)
        scene = next(iter(suite_scenes.values()))
        payload = payload_for(scene)

        def snapshot():
            backends = MockBackends(suite_scenes, behavior)
            dets = backends.detect(payload, scene.labels(), 0.1)
            masks = backends.segment(payload, [d.box for d in dets])
            return json.dumps(
                {
                    "dets": [[d.box.to_list(), d.phrase, d.score] for d in dets],
                    "masks": [m.to_wire() for m in masks],
                    "tags": backends.tag(payload),
                    "caption": backends.caption(payload),
                }
            )

        assert snapshot() == snapshot()
