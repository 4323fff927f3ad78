from .checkpoint import FORMAT_VERSION, load_checkpoint, read_checkpoint, save_checkpoint
from .classifier import InteractionClassifier, build_classifier_weights
from .detector import DecoderOutput, HoiDetector, squashed_to_corners
from .encoders import StubVisualEncoder, box_to_cxcywh, sine_position_codes
from .fusion import FusionDecoder, FusionTower, fusion_tower_step

__all__ = [
    "FORMAT_VERSION",
    "DecoderOutput",
    "FusionDecoder",
    "FusionTower",
    "HoiDetector",
    "InteractionClassifier",
    "StubVisualEncoder",
    "box_to_cxcywh",
    "build_classifier_weights",
    "fusion_tower_step",
    "load_checkpoint",
    "read_checkpoint",
    "save_checkpoint",
    "sine_position_codes",
    "squashed_to_corners",
]
