import json

import numpy as np
import pytest

from cuehoi.config import SyntheticSceneConfig
from cuehoi.data import (
    HoiClassRegistry,
    cell_of,
    count_instances,
    generate_synthetic,
    load_annotations,
    parse_annotations,
    parse_registry,
    read_embedding,
    resolve_registry,
    save_annotations,
    write_embedding,
)
from cuehoi.exceptions import AnnotationError, ConfigError, DataError, RegistryError


def _dataset(images):
    return {
        "objects": ["bicycle", "book"],
        "verbs": ["hold", "ride"],
        "hoi_classes": [[0, 0], [1, 0], [0, 1]],
        "images": images,
    }


class TestRegistry:
    def test_fixture_layout(self, fixture_registry):
        assert fixture_registry.num_objects == 6
        assert fixture_registry.num_verbs == 5
        assert fixture_registry.num_classes == 12
        assert fixture_registry.hoi_index(2, 0) == 1
        assert fixture_registry.class_text(1) == "a photo of a person ride a bicycle"

    def test_classes_for_object_and_verb(self, fixture_registry):
        assert fixture_registry.classes_for_object(1) == (2, 3, 4)
        assert fixture_registry.classes_for_verb(4) == (11,)

    def test_unknown_pair(self, fixture_registry):
        assert not fixture_registry.has_class(4, 0)
        with pytest.raises(RegistryError):
            fixture_registry.hoi_index(4, 0)

    def test_hico_profile(self, hico_registry):
        assert (hico_registry.num_objects, hico_registry.num_verbs, hico_registry.num_classes) == (80, 117, 600)
        assert sum(1 for n in hico_registry.counts if n < 10) == 138

    def test_rejects_unknown_ids(self):
        with pytest.raises(RegistryError):
            parse_registry({"objects": ["a"], "verbs": ["v"], "hoi_classes": [[0, 3]]})

    def test_rejects_duplicate_pairs(self):
        with pytest.raises(RegistryError):
            parse_registry({"objects": ["a"], "verbs": ["v"], "hoi_classes": [[0, 0], [0, 0]]})

    def test_counts_default_to_zero(self):
        registry = parse_registry({"objects": ["a"], "verbs": ["v", "w"], "hoi_classes": [[0, 0], [1, 0]]})
        assert registry.counts == (0, 0)

    def test_fingerprint_ignores_counts(self, fixture_registry):
        recounted = fixture_registry.with_counts([1] * fixture_registry.num_classes)
        assert recounted.fingerprint() == fixture_registry.fingerprint()
        renamed = HoiClassRegistry.model_validate({**fixture_registry.to_dict(), "objects": ["x"] * 6})
        assert renamed.fingerprint() != fixture_registry.fingerprint()

    def test_resolve_by_path(self, tmp_path, fixture_registry):
        path = tmp_path / "registry.json"
        path.write_text(json.dumps(fixture_registry.to_dict()))
        assert resolve_registry(str(path)) == fixture_registry


class TestAnnotations:
    def test_fixture_file(self, fixture_dataset):
        registry, annotations = fixture_dataset
        assert [a.image_id for a in annotations] == ["fx_000", "fx_001", "fx_002"]
        assert sum(len(a.gts) for a in annotations) == 5
        assert registry.counts[1] == 2
        assert registry.counts[2] == registry.counts[3] == registry.counts[11] == 1

    def test_inverted_box_names_field(self):
        data = _dataset([{"id": 7, "gts": [{"hbox": [0.5, 0.1, 0.2, 0.4], "obox": [0, 0, 1, 1], "obj": 0, "verb": 0}]}])
        with pytest.raises(AnnotationError) as info:
            parse_annotations(data)
        assert info.value.image_id == "7"
        assert info.value.field == "gts[0].hbox"

    def test_box_outside_unit_square(self):
        data = _dataset([{"id": "a", "gts": [{"hbox": [0, 0, 1.5, 1], "obox": [0, 0, 1, 1], "obj": 0, "verb": 0}]}])
        with pytest.raises(AnnotationError):
            parse_annotations(data)

    def test_unregistered_pair(self):
        data = _dataset([{"id": "a", "gts": [{"hbox": [0, 0, 1, 1], "obox": [0, 0, 1, 1], "obj": 1, "verb": 1}]}])
        with pytest.raises(AnnotationError) as info:
            parse_annotations(data)
        assert info.value.field == "gts[0]"

    def test_unknown_object(self):
        data = _dataset([{"id": "a", "gts": [{"hbox": [0, 0, 1, 1], "obox": [0, 0, 1, 1], "obj": 9, "verb": 0}]}])
        with pytest.raises(AnnotationError) as info:
            parse_annotations(data)
        assert info.value.field == "gts[0].obj"

    def test_duplicate_ids(self):
        with pytest.raises(AnnotationError):
            parse_annotations(_dataset([{"id": "a"}, {"id": "a"}]))

    def test_image_without_triplets(self):
        registry, annotations = parse_annotations(_dataset([{"id": "empty", "feature_seed": 1}]))
        assert annotations[0].gts == ()
        assert registry.counts == (0, 0, 0)

    def test_missing_top_level_key(self):
        with pytest.raises(AnnotationError):
            parse_annotations({"objects": [], "verbs": []})

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(AnnotationError):
            load_annotations(path)

    def test_save_then_load(self, tmp_path, fixture_dataset):
        registry, annotations = fixture_dataset
        path = save_annotations(tmp_path / "out.json", registry, annotations)
        reloaded_registry, reloaded = load_annotations(path)
        assert reloaded == annotations
        assert reloaded_registry.counts == registry.counts


class TestSynthetic:
    def test_same_seed_same_scenes(self):
        cfg = SyntheticSceneConfig(num_images=5, seed=4)
        assert generate_synthetic(cfg).annotations == generate_synthetic(cfg).annotations

    def test_different_seed_different_scenes(self):
        a = generate_synthetic(SyntheticSceneConfig(num_images=5, seed=1)).annotations
        b = generate_synthetic(SyntheticSceneConfig(num_images=5, seed=2)).annotations
        assert a != b

    def test_boxes_sit_in_distinct_cells(self):
        cfg = SyntheticSceneConfig(num_images=20, max_objects=3, grid_size=8, seed=0)
        dataset = generate_synthetic(cfg)
        for ann in dataset.annotations:
            assert cfg.min_objects <= len(ann.gts) <= cfg.max_objects
            cells = [cell_of(box, cfg.grid_size) for gt in ann.gts for box in (gt.hbox, gt.obox)]
            assert len(set(cells)) == len(cells)
            assert ann.feature_seed == dataset.feature_seeds[ann.image_id]

    def test_counts_are_tallied(self):
        dataset = generate_synthetic(SyntheticSceneConfig(num_images=6, seed=9))
        assert dataset.registry.counts == count_instances(dataset.registry, dataset.annotations)

    def test_grid_too_small(self):
        with pytest.raises(ConfigError):
            generate_synthetic(SyntheticSceneConfig(grid_size=2, max_objects=3))


class TestEmbeddingFile:
    def test_write_then_read(self, tmp_path):
        data = np.arange(12, dtype=np.float64).reshape(3, 4) / 7
        tensor = read_embedding(write_embedding(tmp_path / "f.bin", data), expected_width=4)
        np.testing.assert_array_equal(tensor.numpy(), data)

    def test_width_mismatch(self, tmp_path):
        path = write_embedding(tmp_path / "f.bin", np.zeros((2, 4)))
        with pytest.raises(DataError):
            read_embedding(path, expected_width=8)

    def test_truncated(self, tmp_path):
        path = write_embedding(tmp_path / "f.bin", np.zeros((2, 4)))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DataError):
            read_embedding(path)

    def test_non_finite(self, tmp_path):
        path = write_embedding(tmp_path / "f.bin", np.array([[0.0, np.inf]]))
        with pytest.raises(DataError):
            read_embedding(path)
