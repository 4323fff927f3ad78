import json

import pytest

from cuehoi.cli import build_parser, main
from cuehoi.evaluation import load_split
from cuehoi.workflows import read_manifest

SMALL_RUN = """\
seed = 0

[model]
num_queries = 4
num_layers = 1
instance_width = 8
interaction_width = 8
text_width = 8
num_heads = 2
ffn_multiplier = 2

[encoder]
hash_buckets = 64
max_cue_tokens = 16
cue_encoder_layers = 1

[synthetic]
num_images = 3
grid_size = 4
max_objects = 2

[optimizer]
epochs = 1
batch_size = 2
learning_rate = 1e-3
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(SMALL_RUN)
    return str(path)


class TestParser:
    def test_eval_needs_a_checkpoint(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["eval"])

    def test_repeatable_overrides(self):
        args = build_parser().parse_args(["train", "--set", "seed=1", "--set", "optimizer.epochs=2"])
        assert args.overrides == ["seed=1", "optimizer.epochs=2"]


class TestExitCodes:
    def test_missing_config_file(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "absent.toml")]) == 2

    def test_invalid_override(self, config_file):
        assert main(["train", "--config", config_file, "--set", "model.num_heads=3"]) == 2

    def test_missing_annotation_file(self, tmp_path, config_file):
        code = main(["train", "--config", config_file, "--set", f"dataset={tmp_path / 'absent.json'}"])
        assert code == 3

    def test_missing_checkpoint(self, tmp_path):
        assert main(["eval", "--checkpoint", str(tmp_path / "absent.pt")]) == 3

    def test_cache_mode_with_empty_cache(self, tmp_path, config_file):
        code = main(
            [
                "cues", "--config", config_file, "--mode", "cache",
                "--set", f"cues.cache_path={tmp_path / 'empty.jsonl'}",
                "--output-dir", str(tmp_path / "cues"),
            ]
        )
        assert code == 5


class TestCommands:
    def test_synth_train_eval(self, tmp_path, config_file, capsys):
        synth_dir, train_dir, eval_dir = tmp_path / "synth", tmp_path / "train", tmp_path / "eval"
        assert main(["synth", "--config", config_file, "--output-dir", str(synth_dir)]) == 0
        annotations = synth_dir / "annotations.json"
        assert len(json.loads(annotations.read_text())["images"]) == 3
        assert read_manifest(synth_dir)["command"] == "synth"

        code = main(
            [
                "train", "--config", config_file, "--output-dir", str(train_dir),
                "--set", f"dataset={annotations}",
                "--set", f"cues.fixture_path={synth_dir / 'fixture_cues.jsonl'}",
            ]
        )
        assert code == 0
        assert (train_dir / "checkpoint.pt").exists()
        assert (train_dir / "loss_curve.csv").read_text().startswith("epoch,total,loss_b,loss_u,loss_o,loss_c")
        manifest = read_manifest(train_dir)
        assert manifest["config"]["dataset"] == str(annotations)
        assert manifest["seeds"]["run"] == 0

        code = main(["eval", "--checkpoint", str(train_dir / "checkpoint.pt"), "--output-dir", str(eval_dir)])
        assert code == 0
        results = json.loads((eval_dir / "results.json").read_text())
        assert 0.0 <= results["map_full"] <= 1.0
        assert (eval_dir / "pr_curves.csv").exists()
        assert "mAP (%)" in capsys.readouterr().out

    def test_preset_without_cues(self, tmp_path, config_file):
        out = tmp_path / "base"
        assert main(["train", "--config", config_file, "--preset", "base", "--output-dir", str(out)]) == 0
        assert read_manifest(out)["config"]["model"]["tower_mode"] == "no_cues"

    def test_splits(self, tmp_path, config_file):
        target = tmp_path / "uv.json"
        code = main(
            [
                "splits", "--config", config_file, "--setting", "UV", "--seed", "1",
                "--set", "split.unseen_verbs=2", "--out", str(target), "--output-dir", str(tmp_path / "splits"),
            ]
        )
        assert code == 0
        split = load_split(target)
        assert split.setting == "UV" and split.seed == 1
        assert len(split.unseen_verbs) == 2

    def test_cues_then_cache_only(self, tmp_path, config_file, capsys):
        out = tmp_path / "cues"
        assert main(["cues", "--config", config_file, "--output-dir", str(out)]) == 0
        cache = out / "cues.jsonl"
        assert len(cache.read_text().splitlines()) == 3

        code = main(
            ["cues", "--config", config_file, "--mode", "cache", "--set", f"cues.cache_path={cache}",
             "--output-dir", str(out)]
        )
        assert code == 0
        assert "cache=3" in capsys.readouterr().out
