from .annotations import (
    Box,
    HoiAnnotation,
    HoiInstance,
    count_instances,
    hoi_class_of,
    load_annotations,
    parse_annotations,
    save_annotations,
    serialize_annotations,
)
from .embedding_file import read_embedding, write_embedding
from .registry import (
    HoiClassRegistry,
    bundled_registry,
    load_registry,
    parse_registry,
    resolve_registry,
    resource_path,
)
from .synthetic import SyntheticDataset, cell_of, generate_synthetic

__all__ = [
    "Box",
    "HoiAnnotation",
    "HoiClassRegistry",
    "HoiInstance",
    "SyntheticDataset",
    "bundled_registry",
    "cell_of",
    "count_instances",
    "generate_synthetic",
    "hoi_class_of",
    "load_annotations",
    "load_registry",
    "parse_annotations",
    "parse_registry",
    "read_embedding",
    "resolve_registry",
    "resource_path",
    "save_annotations",
    "serialize_annotations",
    "write_embedding",
]
