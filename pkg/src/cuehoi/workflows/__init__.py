from .manifest import MANIFEST_NAME, build_manifest, package_version, read_manifest, write_manifest
from .runs import (
    CHECKPOINT_NAME,
    LOSS_CURVE_NAME,
    PR_CURVES_NAME,
    RESULTS_NAME,
    SPLIT_NAME,
    EvalOutcome,
    LoadedDataset,
    SynthOutcome,
    TrainOutcome,
    cmd_cues,
    cmd_eval,
    cmd_splits,
    cmd_synth,
    cmd_train,
    config_from_checkpoint,
    evaluate_model,
    predict_dataset,
    resolve_cues,
    resolve_dataset,
)

__all__ = [
    "CHECKPOINT_NAME",
    "LOSS_CURVE_NAME",
    "MANIFEST_NAME",
    "PR_CURVES_NAME",
    "RESULTS_NAME",
    "SPLIT_NAME",
    "EvalOutcome",
    "LoadedDataset",
    "SynthOutcome",
    "TrainOutcome",
    "build_manifest",
    "cmd_cues",
    "cmd_eval",
    "cmd_splits",
    "cmd_synth",
    "cmd_train",
    "config_from_checkpoint",
    "evaluate_model",
    "package_version",
    "predict_dataset",
    "read_manifest",
    "resolve_cues",
    "resolve_dataset",
    "write_manifest",
]
