import numpy as np
import pytest
import torch

from cuehoi.config import FusionConfig, SyntheticSceneConfig
from cuehoi.cues import PAD_ID, CueEncoder, CueSet, HashTokenEmbedder, encode_cues, token_ids, tokenize
from cuehoi.data import HoiAnnotation, HoiInstance, cell_of, generate_synthetic, parse_registry, write_embedding
from cuehoi.exceptions import DataError
from cuehoi.models import InteractionClassifier, StubVisualEncoder, build_classifier_weights
from cuehoi.numerics import DTYPE, grad_check, trainable_parameters


def _cues(participant="a person", body="sitting", environment="a bedroom"):
    return CueSet(
        image_id="x", participant=participant, body_language=body, environmental=environment, provenance="fixture"
    )


class TestTokenizer:
    def test_lowercases_and_splits_punctuation(self):
        assert tokenize("A Girl, relaxed.") == ["a", "girl", ",", "relaxed", "."]

    def test_cap_and_padding(self):
        assert len(token_ids(" ".join(["word"] * 100), 4096, 64)) == 64
        assert token_ids("", 4096, 64) == [PAD_ID]

    def test_ids_skip_the_pad_bucket(self):
        ids = token_ids("the quick brown fox jumps over the lazy dog", 8, 64)
        assert all(1 <= i < 8 for i in ids)
        assert ids[0] == ids[6]


class TestCueEncoder:
    def test_one_matrix_per_kind(self, small_fusion, small_encoder):
        encoder = CueEncoder.build(small_fusion, small_encoder)
        features = encode_cues(_cues(participant="two people near a bicycle"), encoder)
        assert features.kinds == ("participant", "body_language", "environmental")
        assert features.participant.shape == (5, small_fusion.text_width)
        assert features.body_language.shape == (1, small_fusion.text_width)
        with pytest.raises(KeyError):
            features["weather"]

    def test_embedding_table_is_frozen(self, small_fusion, small_encoder):
        encoder = CueEncoder.build(small_fusion, small_encoder)
        names = {name for name, _ in encoder.named_parameters()}
        assert not any("table" in name for name in names)
        assert "embedder.table" in dict(encoder.named_buffers())

    def test_gradients_reach_only_trainable_layers(self, small_fusion, small_encoder):
        torch.manual_seed(0)
        encoder = CueEncoder.build(small_fusion, small_encoder)
        cues = _cues(participant="a girl holding a tablet", body="legs crossed")

        def objective():
            features = encode_cues(cues, encoder)
            return sum(m.tanh().sum() for m in features.matrices)

        assert grad_check(objective, trainable_parameters(encoder), max_coords=4) < 1e-4
        objective().backward()
        assert encoder.embedder.table.grad is None
        assert encoder.layers[0].ffn.linear1.weight.grad is not None

    def test_deterministic_table(self):
        a = HashTokenEmbedder(64, 8, 16, seed=5)
        b = HashTokenEmbedder(64, 8, 16, seed=5)
        torch.testing.assert_close(a.table, b.table, rtol=0, atol=0)
        assert torch.count_nonzero(a.table[PAD_ID]) == 0


class TestVisualEncoders:
    def test_same_image_same_features(self, fixture_visual, fixture_dataset):
        _, annotations = fixture_dataset
        ann = annotations[0]
        torch.testing.assert_close(
            fixture_visual.encode_instance_visual(ann), fixture_visual.encode_instance_visual(ann), rtol=0, atol=0
        )
        torch.testing.assert_close(
            fixture_visual.encode_interaction_visual(ann), fixture_visual.encode_interaction_visual(ann), rtol=0, atol=0
        )

    def test_shapes(self, fixture_visual, fixture_dataset, small_fusion, small_scene):
        _, annotations = fixture_dataset
        tokens = small_scene.grid_size**2
        assert fixture_visual.encode_instance_visual(annotations[1]).shape == (tokens, small_fusion.instance_width)
        assert fixture_visual.encode_interaction_visual(annotations[1]).shape == (tokens, small_fusion.interaction_width)

    def test_planted_object_pattern(self, fixture_registry):
        fusion = FusionConfig(instance_width=32, interaction_width=32, text_width=32)
        scene = SyntheticSceneConfig(grid_size=8, noise_level=0.0)
        visual = StubVisualEncoder.build(fixture_registry, fusion, scene)
        gt = HoiInstance(hbox=(0.0, 0.0, 0.2, 0.2), obox=(0.6, 0.6, 0.8, 0.8), obj=3, verb=2)
        ann = HoiAnnotation(id="one", gts=(gt,), feature_seed=1)
        grid = visual.encode_instance_visual(ann).numpy()
        cell = cell_of(gt.obox, 8)
        expected = visual.position_codes()[cell] + visual.object_pattern(3) + visual.box_code(gt.obox, "object")
        np.testing.assert_allclose(grid[cell], expected, atol=1e-12)

    def test_branches_are_uncorrelated(self, fixture_registry):
        fusion = FusionConfig(instance_width=32, interaction_width=32, text_width=32)
        visual = StubVisualEncoder.build(fixture_registry, fusion, SyntheticSceneConfig(grid_size=8, noise_level=1.0))
        ann = HoiAnnotation(id="empty", feature_seed=123)
        f_i = visual.encode_instance_visual(ann).numpy().ravel()[:1000]
        f_c = visual.encode_interaction_visual(ann).numpy().ravel()[:1000]
        assert abs(np.corrcoef(f_i, f_c)[0, 1]) < 0.1

    def test_interaction_cell_codes_are_orthogonal_to_positions(self, fixture_registry):
        fusion = FusionConfig(instance_width=32, interaction_width=32, text_width=32)
        visual = StubVisualEncoder.build(fixture_registry, fusion, SyntheticSceneConfig(grid_size=8))
        positions, cells = visual.position_codes(), visual.cell_codes()
        np.testing.assert_allclose(np.einsum("cd,cd->c", positions, cells), 0.0, atol=1e-12)
        assert np.abs(cells).max() > 0.5

    def test_missing_seed(self, fixture_visual):
        with pytest.raises(DataError):
            fixture_visual.encode_instance_visual(HoiAnnotation(id="noseed"))

    def test_embedding_file_passthrough(self, tmp_path, fixture_registry, small_fusion, small_scene):
        data = np.linspace(-1, 1, 5 * small_fusion.instance_width).reshape(5, -1)
        write_embedding(tmp_path / "fi.bin", data)
        visual = StubVisualEncoder.build(fixture_registry, small_fusion, small_scene, feature_root=tmp_path)
        ann = HoiAnnotation(id="real", instance_features="fi.bin")
        np.testing.assert_array_equal(visual.encode_instance_visual(ann).numpy(), data)

    def test_verb_is_linearly_decodable_at_the_human_cell(self):
        scene = SyntheticSceneConfig(num_images=20)
        dataset = generate_synthetic(scene)
        visual = StubVisualEncoder.build(dataset.registry, FusionConfig(), scene)
        rows, labels = [], []
        for ann in dataset.annotations:
            grid = visual.encode_interaction_visual(ann).numpy()
            for gt in ann.gts:
                rows.append(grid[cell_of(gt.hbox, scene.grid_size)])
                labels.append(gt.verb)
        x = np.hstack([np.asarray(rows), np.ones((len(rows), 1))])
        y = np.eye(dataset.registry.num_verbs)[labels]
        weights, *_ = np.linalg.lstsq(x, y, rcond=None)
        accuracy = np.mean((x @ weights).argmax(axis=1) == np.asarray(labels))
        assert accuracy > 0.95


class TestClassifierWeights:
    def test_unit_rows(self, fixture_registry, small_fusion, small_encoder):
        embedder = CueEncoder.build(small_fusion, small_encoder).embedder
        rows = build_classifier_weights(fixture_registry, embedder)
        assert rows.shape == (fixture_registry.num_classes, small_fusion.text_width)
        torch.testing.assert_close(rows.norm(dim=1), torch.ones(12, dtype=DTYPE), rtol=0, atol=1e-12)

    def test_same_text_same_row(self, small_fusion, small_encoder):
        registry = parse_registry({"objects": ["cup", "cup"], "verbs": ["hold"], "hoi_classes": [[0, 0], [0, 1]]})
        rows = build_classifier_weights(registry, CueEncoder.build(small_fusion, small_encoder).embedder)
        torch.testing.assert_close(rows[0], rows[1], rtol=0, atol=0)

    def test_zero_projection_gives_zero_logits(self, fixture_registry, small_fusion, small_encoder):
        embedder = CueEncoder.build(small_fusion, small_encoder).embedder
        classifier = InteractionClassifier(24, build_classifier_weights(fixture_registry, embedder))
        with torch.no_grad():
            classifier.projection.weight.zero_()
            classifier.projection.bias.zero_()
        logits = classifier(torch.randn(3, 24, dtype=DTYPE))
        torch.testing.assert_close(logits, torch.zeros(3, 12, dtype=DTYPE), rtol=0, atol=0)

    def test_frozen_prior_rows_are_a_buffer(self, fixture_registry, small_fusion, small_encoder):
        embedder = CueEncoder.build(small_fusion, small_encoder).embedder
        frozen = InteractionClassifier.build(8, fixture_registry, embedder, prior=True, freeze=True)
        learned = InteractionClassifier.build(8, fixture_registry, embedder, prior=False)
        assert "rows" in dict(frozen.named_buffers())
        assert "rows" in dict(learned.named_parameters())
