"""Tests for paired dataset generation and the on-disk container."""

import json

import numpy as np
import pytest

from qlstm_multimic.data.dataset import MANIFEST, build_dataset, load_dataset, save_dataset
from qlstm_multimic.data.packing import unpack_quaternion_features
from qlstm_multimic.models.config import ModelKind, Provenance
from qlstm_multimic.utils.error_handling import DataError


@pytest.fixture
def tiny_dataset(tiny_dataset_config):
    return build_dataset(tiny_dataset_config)


def assert_same_sequences(left, right):
    assert len(left) == len(right)
    for a, b in zip(left, right):
        assert np.array_equal(a.labels, b.labels)
        for pa, pb in zip(unpack_quaternion_features(a), unpack_quaternion_features(b)):
            assert np.array_equal(pa, pb)


def test_split_sizes(tiny_dataset):
    assert {split: len(tiny_dataset.scene_seeds[split]) for split in ("train", "valid", "test")} == {
        "train": 6,
        "valid": 2,
        "test": 2,
    }
    for provenance in Provenance:
        assert len(tiny_dataset.sequences("train", provenance)) == 6


def test_provenances_are_paired(tiny_dataset):
    four = tiny_dataset.sequences("valid", Provenance.FOUR_MIC)
    for provenance in (Provenance.COPIED_MIC, Provenance.BEAMFORMED):
        other = tiny_dataset.sequences("valid", provenance)
        for a, b in zip(four, other):
            assert np.array_equal(a.labels, b.labels)
            assert a.frames.shape == b.frames.shape


def test_controls_fill_every_component_alike(tiny_dataset):
    four = tiny_dataset.sequences("train", Provenance.FOUR_MIC)[0]
    for provenance in (Provenance.COPIED_MIC, Provenance.BEAMFORMED):
        a, b, c, d = unpack_quaternion_features(tiny_dataset.sequences("train", provenance)[0])
        assert np.array_equal(a, b) and np.array_equal(a, c) and np.array_equal(a, d)
    copied = unpack_quaternion_features(tiny_dataset.sequences("train", Provenance.COPIED_MIC)[0])
    assert np.array_equal(copied[0], unpack_quaternion_features(four)[0])


def test_copied_channel_is_configurable(tiny_dataset_config):
    dataset = build_dataset(tiny_dataset_config.model_copy(update={"copied_channel": 2, "n_train": 1}))
    four = unpack_quaternion_features(dataset.sequences("train", Provenance.FOUR_MIC)[0])
    copied = unpack_quaternion_features(dataset.sequences("train", Provenance.COPIED_MIC)[0])
    assert np.array_equal(copied[0], four[2])


def test_frame_count_of_tiny_scenes(tiny_dataset):
    seq = tiny_dataset.sequences("test", Provenance.FOUR_MIC)[0]
    assert seq.num_frames == 28
    assert seq.num_features == tiny_dataset.num_features == 8
    assert tiny_dataset.input_dim(Provenance.COPIED_MIC, ModelKind.LSTM) == 8
    assert tiny_dataset.input_dim(Provenance.COPIED_MIC, ModelKind.QLSTM) == 32


def test_same_seed_same_dataset(tiny_dataset_config, tiny_dataset):
    again = build_dataset(tiny_dataset_config)
    assert again.scene_seeds == tiny_dataset.scene_seeds
    for provenance in Provenance:
        assert_same_sequences(again.sequences("train", provenance), tiny_dataset.sequences("train", provenance))


def test_seed_override_changes_scenes(tiny_dataset_config, tiny_dataset):
    other = build_dataset(tiny_dataset_config, seed=99)
    assert other.scene_seeds["train"] != tiny_dataset.scene_seeds["train"]


def test_save_load_round_trip(tiny_dataset, tmp_path):
    out = tmp_path / "saved"
    save_dataset(tiny_dataset, out)
    loaded = load_dataset(out)
    assert loaded.seed == tiny_dataset.seed
    assert loaded.config == tiny_dataset.config
    for split in ("train", "valid", "test"):
        for provenance in Provenance:
            assert_same_sequences(loaded.sequences(split, provenance), tiny_dataset.sequences(split, provenance))


def test_manifest_is_byte_identical_across_saves(tiny_dataset_config, tiny_dataset):
    out = tiny_dataset_config.output_dir
    save_dataset(tiny_dataset, out)
    first = (out / MANIFEST).read_bytes()
    save_dataset(build_dataset(tiny_dataset_config), out)
    assert (out / MANIFEST).read_bytes() == first
    manifest = json.loads(first)
    assert manifest["format"] == "qlstm-multimic/dataset/v1"
    assert sorted(manifest["files"]) == sorted(
        f"{split}.{p.value}" for split in ("train", "valid", "test") for p in Provenance
    )


def test_save_needs_existing_parent(tiny_dataset, tmp_path):
    with pytest.raises(DataError):
        save_dataset(tiny_dataset, tmp_path / "missing" / "data")


def test_load_without_manifest(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path)


def test_load_rejects_foreign_manifest(tmp_path):
    (tmp_path / MANIFEST).write_text(json.dumps({"format": "something/else"}))
    with pytest.raises(DataError):
        load_dataset(tmp_path)


def test_load_rejects_corrupt_manifest(tmp_path):
    (tmp_path / MANIFEST).write_text("{not json")
    with pytest.raises(DataError):
        load_dataset(tmp_path)
