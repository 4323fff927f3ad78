"""Exception hierarchy shared by every cuehoi subpackage.

Each class carries the process exit code the CLI reports for it.
"""

from __future__ import annotations

from typing import Any, Optional, Sequence


class CueHoiError(Exception):
    exit_code: int = 1


class ConfigError(CueHoiError):
    exit_code = 2


class DataError(CueHoiError):
    exit_code = 3


class AnnotationError(DataError):
    """A malformed annotation record; names the image and the field."""

    def __init__(self, message: str, image_id: Optional[str] = None, field: Optional[str] = None):
        self.image_id = image_id
        self.field = field
        prefix = ""
        if image_id is not None:
            prefix += f"image {image_id!r}: "
        if field is not None:
            prefix += f"field {field!r}: "
        super().__init__(prefix + message)


class RegistryError(DataError):
    pass


class CheckpointError(DataError):
    pass


class NumericsError(CueHoiError):
    exit_code = 4

    def __init__(self, message: str, batch_id: Optional[int] = None):
        self.batch_id = batch_id
        if batch_id is not None:
            message = f"batch {batch_id}: {message}"
        super().__init__(message)


class GradientCheckError(NumericsError):
    """Raised when analytic or numeric gradients are non-finite."""

    def __init__(self, message: str, coordinates: Sequence[tuple[str, tuple[int, ...]]] = ()):
        self.coordinates = list(coordinates)
        if self.coordinates:
            listed = ", ".join(f"{name}{list(idx)}" for name, idx in self.coordinates[:10])
            message = f"{message} (coordinates: {listed})"
        super().__init__(message)


class CueGenerationError(CueHoiError):
    exit_code = 5

    def __init__(self, message: str, image_id: Optional[str] = None, raw_payload: Any = None):
        self.image_id = image_id
        self.raw_payload = raw_payload
        if image_id is not None:
            message = f"image {image_id!r}: {message}"
        super().__init__(message)


class MissingCuesError(CueGenerationError):
    def __init__(self, missing: Sequence[str]):
        self.missing = list(missing)
        shown = ", ".join(self.missing[:10])
        more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
        super().__init__(f"no cues available for {len(self.missing)} image(s): {shown}{more}")
