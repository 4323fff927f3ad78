import pytest

from cuehoi.config import SplitConfig
from cuehoi.evaluation import (
    SplitSpec,
    filter_training_set,
    load_split,
    make_zero_shot_split,
    save_split,
    split_from_config,
    split_rare_nonrare,
)
from cuehoi.exceptions import DataError, RegistryError


class TestRareNonRare:
    def test_hico_profile(self, hico_registry):
        rare, nonrare = split_rare_nonrare(hico_registry)
        assert (len(rare), len(nonrare)) == (138, 462)

    def test_threshold_is_exclusive(self, fixture_registry):
        rare, nonrare = split_rare_nonrare(fixture_registry, threshold=10)
        assert 8 in nonrare
        assert 6 in rare


class TestZeroShotSplits:
    def test_regular_holds_nothing_out(self, hico_registry):
        split = make_zero_shot_split("regular", hico_registry)
        assert split.unseen == ()
        assert len(split.seen) == 600

    def test_rare_first(self, hico_registry):
        split = make_zero_shot_split("RF-UC", hico_registry)
        assert len(split.unseen) == 120
        counts = hico_registry.counts
        assert max(counts[c] for c in split.unseen) <= min(counts[c] for c in split.seen)

    def test_non_rare_first(self, hico_registry):
        split = make_zero_shot_split("NF-UC", hico_registry)
        assert len(split.unseen) == 120
        counts = hico_registry.counts
        assert min(counts[c] for c in split.unseen) >= max(counts[c] for c in split.seen)

    def test_count_ties_go_to_lower_ids(self, fixture_registry):
        registry = fixture_registry.with_counts([5] * 12)
        assert make_zero_shot_split("RF-UC", registry, unseen_classes=3).unseen == (0, 1, 2)
        assert make_zero_shot_split("NF-UC", registry, unseen_classes=3).unseen == (0, 1, 2)

    def test_unseen_objects(self, hico_registry):
        split = make_zero_shot_split("UO", hico_registry, seed=0)
        assert len(split.unseen_objects) == 12
        expected = sorted(c for o in split.unseen_objects for c in hico_registry.classes_for_object(o))
        assert list(split.unseen) == expected

    def test_unseen_verbs(self, hico_registry):
        split = make_zero_shot_split("UV", hico_registry, seed=0)
        assert len(split.unseen_verbs) == 20
        expected = sorted(c for v in split.unseen_verbs for c in hico_registry.classes_for_verb(v))
        assert list(split.unseen) == expected

    def test_same_seed_same_split(self, hico_registry):
        assert make_zero_shot_split("UV", hico_registry, seed=4) == make_zero_shot_split("UV", hico_registry, seed=4)

    def test_seeds_differ(self, hico_registry):
        one = make_zero_shot_split("UV", hico_registry, seed=1)
        two = make_zero_shot_split("UV", hico_registry, seed=2)
        assert one.unseen_verbs != two.unseen_verbs

    def test_registry_too_small(self, fixture_registry):
        with pytest.raises(RegistryError):
            make_zero_shot_split("UO", fixture_registry)
        with pytest.raises(RegistryError):
            make_zero_shot_split("RF-UC", fixture_registry)

    def test_partition_is_checked(self):
        with pytest.raises(ValueError):
            SplitSpec(setting="UO", num_classes=3, seen=(0, 1), unseen=(1,))
        with pytest.raises(ValueError):
            SplitSpec(setting="UO", num_classes=3, seen=(0,), unseen=(1,))


class TestTrainingFilter:
    def test_unseen_triplets_are_dropped(self, fixture_dataset):
        registry, annotations = fixture_dataset
        # ride-bicycle (class 1) appears twice, kick-ball (class 11) once.
        split = SplitSpec(
            setting="RF-UC", num_classes=12, seen=tuple(c for c in range(12) if c not in (1, 11)), unseen=(1, 11)
        )
        filtered = filter_training_set(annotations, split, registry)
        assert [a.image_id for a in filtered] == ["fx_000", "fx_001", "fx_002"]
        assert [len(a.gts) for a in filtered] == [1, 1, 0]
        kept = [registry.hoi_index(gt.verb, gt.obj) for a in filtered for gt in a.gts]
        assert sorted(kept) == [2, 3]
        assert [len(a.gts) for a in annotations] == [2, 1, 2]

    def test_regular_split_keeps_everything(self, fixture_dataset):
        registry, annotations = fixture_dataset
        split = make_zero_shot_split("regular", registry)
        assert filter_training_set(annotations, split, registry) == annotations


class TestSplitFiles:
    def test_save_then_load(self, tmp_path, hico_registry):
        split = make_zero_shot_split("UO", hico_registry, seed=3)
        path = save_split(tmp_path / "split.json", split)
        loaded = load_split(path)
        assert loaded == split
        assert loaded.is_unseen(split.unseen[0])

    def test_config_path_wins(self, tmp_path, hico_registry):
        split = make_zero_shot_split("UV", hico_registry, seed=9)
        path = save_split(tmp_path / "split.json", split)
        assert split_from_config(SplitConfig(setting="RF-UC", path=str(path)), hico_registry) == split

    def test_config_path_for_another_registry(self, tmp_path, hico_registry, fixture_registry):
        path = save_split(tmp_path / "split.json", make_zero_shot_split("regular", fixture_registry))
        with pytest.raises(RegistryError):
            split_from_config(SplitConfig(path=str(path)), hico_registry)

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "split.json"
        path.write_text('{"setting": "UO", "num_classes": 2, "seen": [0], "unseen": [0]}')
        with pytest.raises(DataError):
            load_split(path)
        with pytest.raises(DataError):
            load_split(tmp_path / "absent.json")
