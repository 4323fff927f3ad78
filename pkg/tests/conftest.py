import pytest

from cuehoi.config import (
    EncoderConfig,
    FusionConfig,
    LossWeights,
    OptimizerConfig,
    RunConfig,
    SyntheticSceneConfig,
)
from cuehoi.cues import FixtureCueClient
from cuehoi.data import bundled_registry, load_annotations, resource_path
from cuehoi.models import HoiDetector, StubVisualEncoder


@pytest.fixture
def fixture_registry():
    return bundled_registry("fixture")


@pytest.fixture
def hico_registry():
    return bundled_registry("hico_det")


@pytest.fixture
def fixture_dataset():
    """Registry (counts tallied over the file) and the three bundled fixture images."""
    return load_annotations(resource_path("fixture_annotations.json"))


@pytest.fixture
def fixture_cues():
    client = FixtureCueClient.from_file(resource_path("fixture_cues.jsonl"))
    return {image_id: client.cues_for(image_id) for image_id in ("fx_000", "fx_001", "fx_002")}


@pytest.fixture
def small_fusion():
    return FusionConfig(
        num_queries=4,
        num_layers=2,
        instance_width=8,
        interaction_width=8,
        text_width=8,
        num_heads=2,
        ffn_multiplier=2,
    )


@pytest.fixture
def small_encoder():
    return EncoderConfig(hash_buckets=64, max_cue_tokens=16, cue_encoder_layers=1)


@pytest.fixture
def small_scene():
    return SyntheticSceneConfig(num_images=4, grid_size=4, max_objects=2, seed=3)


@pytest.fixture
def small_model(small_fusion, small_encoder, fixture_dataset):
    registry, _ = fixture_dataset
    return HoiDetector(small_fusion, small_encoder, registry, seed=0)


@pytest.fixture
def fixture_visual(small_fusion, small_scene, fixture_dataset):
    registry, _ = fixture_dataset
    return StubVisualEncoder.build(registry, small_fusion, small_scene)


@pytest.fixture
def small_run_config(tmp_path, small_fusion, small_encoder, small_scene):
    return RunConfig(
        model=small_fusion,
        encoder=small_encoder,
        synthetic=small_scene,
        loss=LossWeights(),
        optimizer=OptimizerConfig(learning_rate=1e-3, batch_size=2, epochs=2),
        output_dir=str(tmp_path / "run"),
    )

