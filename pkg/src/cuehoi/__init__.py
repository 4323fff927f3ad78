"""Human-object interaction detection with cross-attention fusion of human-centric cue texts."""

from cuehoi.exceptions import (
    AnnotationError,
    CheckpointError,
    ConfigError,
    CueGenerationError,
    CueHoiError,
    DataError,
    GradientCheckError,
    MissingCuesError,
    NumericsError,
    RegistryError,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "CheckpointError",
    "ConfigError",
    "CueGenerationError",
    "CueHoiError",
    "DataError",
    "GradientCheckError",
    "MissingCuesError",
    "NumericsError",
    "RegistryError",
    "__version__",
]
