"""Paired multi-provenance datasets and their on-disk container.

Every scene is rendered once and featurized three ways (four_mic, copied_mic,
beamformed), so item k of a split is the same scene in every provenance.

Layout of a dataset directory:

    manifest.json                 config, seeds, split item lists (sorted keys)
    <split>.<provenance>.npz      arrays <item>.a, <item>.b, <item>.c, <item>.d
                                  ([T, F] float64) and <item>.labels ([T] int64)
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from qlstm_multimic.core.tensor import PLANES, QuaternionTensor
from qlstm_multimic.data.beamforming import delay_and_sum
from qlstm_multimic.data.features import cmvn, fbank
from qlstm_multimic.data.packing import (
    Example,
    FeatureSequence,
    copied_mic_control,
    input_width,
    pack_quaternion_features,
)
from qlstm_multimic.data.scene import synth_scene
from qlstm_multimic.models.config import DatasetConfig, ModelKind, Provenance
from qlstm_multimic.utils.error_handling import DataError
from qlstm_multimic.utils.seeding import child_seeds
from qlstm_multimic.utils.serialization import load_named_arrays, save_named_arrays

logger = logging.getLogger(__name__)

DATASET_FORMAT = "qlstm-multimic/dataset/v1"
MANIFEST = "manifest.json"
SPLITS = ("train", "valid", "test")


@dataclass
class Dataset:
    config: DatasetConfig
    seed: int
    scene_seeds: dict[str, list[int]]
    items: dict[str, dict[Provenance, list[FeatureSequence]]] = field(default_factory=dict)

    @property
    def num_features(self) -> int:
        return self.config.fbank.n_filters

    def sequences(self, split: str, provenance: Provenance) -> list[FeatureSequence]:
        if split not in self.items:
            raise DataError(f"unknown split {split!r}; expected one of {', '.join(SPLITS)}")
        return self.items[split][Provenance(provenance)]

    def examples(self, split: str, provenance: Provenance, kind: ModelKind) -> list[Example]:
        """(real features, labels) pairs ready for batching."""
        return [(s.real_features(kind), s.labels) for s in self.sequences(split, provenance)]

    def input_dim(self, provenance: Provenance, kind: ModelKind) -> int:
        return input_width(kind, provenance, self.num_features)


def _item_name(index: int) -> str:
    return f"item{index:04d}"


def _features(wave: np.ndarray, cfg: DatasetConfig) -> np.ndarray:
    feats = fbank(wave, cfg.fbank, cfg.scene.sample_rate)
    return cmvn(feats) if cfg.normalize else feats


def featurize_scene(cfg: DatasetConfig, seed: int) -> dict[Provenance, FeatureSequence]:
    """Render one scene into all three provenances."""
    scene = synth_scene(cfg.scene, seed, cfg.fbank)
    labels = scene.frame_labels
    per_mic = [_features(channel, cfg) for channel in scene.channels]
    beamformed = _features(delay_and_sum(scene, cfg.ref_channel), cfg)
    return {
        Provenance.FOUR_MIC: pack_quaternion_features(per_mic, labels),
        Provenance.COPIED_MIC: copied_mic_control(per_mic[cfg.copied_channel], labels),
        Provenance.BEAMFORMED: copied_mic_control(beamformed, labels, Provenance.BEAMFORMED),
    }


def build_dataset(cfg: DatasetConfig, seed: Optional[int] = None) -> Dataset:
    """Generate train/valid/test splits in every provenance."""
    root = cfg.seed if seed is None else seed
    sizes = {"train": cfg.n_train, "valid": cfg.n_valid, "test": cfg.n_test}
    dataset = Dataset(config=cfg, seed=root, scene_seeds={})
    for split, split_seed in zip(SPLITS, child_seeds(root, len(SPLITS))):
        seeds = child_seeds(split_seed, sizes[split])
        dataset.scene_seeds[split] = seeds
        rendered = [featurize_scene(cfg, s) for s in seeds]
        dataset.items[split] = {p: [r[p] for r in rendered] for p in Provenance}
        logger.info("built %s split: %d scenes", split, len(seeds))
    return dataset


def save_dataset(dataset: Dataset, out_dir: Path) -> Path:
    """Write the manifest and one archive per split and provenance.

    Raises:
        DataError: If the parent of out_dir does not exist
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(exist_ok=True)
    except FileNotFoundError as e:
        raise DataError(f"parent directory of {out_dir} does not exist") from e

    files = {}
    for split in SPLITS:
        for provenance in Provenance:
            arrays: dict[str, np.ndarray] = {}
            for index, seq in enumerate(dataset.items[split][provenance]):
                name = _item_name(index)
                for plane, values in zip(PLANES, seq.frames.components):
                    arrays[f"{name}.{plane}"] = values
                arrays[f"{name}.labels"] = seq.labels.astype(np.int64)
            filename = f"{split}.{provenance.value}.npz"
            save_named_arrays(out_dir / filename, arrays)
            files[f"{split}.{provenance.value}"] = filename

    manifest = {
        "format": DATASET_FORMAT,
        "config": dataset.config.model_dump(mode="json"),
        "seed": dataset.seed,
        "num_features": dataset.num_features,
        "provenances": [p.value for p in Provenance],
        "splits": {
            split: {
                "items": [_item_name(i) for i in range(len(dataset.scene_seeds[split]))],
                "scene_seeds": dataset.scene_seeds[split],
            }
            for split in SPLITS
        },
        "files": files,
    }
    path = out_dir / MANIFEST
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote dataset to %s", out_dir)
    return path


def load_dataset(path: Path) -> Dataset:
    """Read a dataset directory written by save_dataset.

    Raises:
        DataError: If the manifest or an archive is missing or malformed
    """
    path = Path(path)
    manifest_path = path / MANIFEST
    if not manifest_path.is_file():
        raise DataError(f"no dataset manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"corrupt manifest {manifest_path}: {e}") from e
    if manifest.get("format") != DATASET_FORMAT:
        raise DataError(f"{manifest_path} is not a {DATASET_FORMAT} manifest")

    try:
        cfg = DatasetConfig.model_validate(manifest["config"])
        dataset = Dataset(
            config=cfg,
            seed=int(manifest["seed"]),
            scene_seeds={s: list(manifest["splits"][s]["scene_seeds"]) for s in SPLITS},
        )
        for split in SPLITS:
            names = manifest["splits"][split]["items"]
            dataset.items[split] = {}
            for provenance in Provenance:
                arrays, _ = load_named_arrays(path / manifest["files"][f"{split}.{provenance.value}"])
                dataset.items[split][provenance] = [
                    FeatureSequence(
                        QuaternionTensor(*(arrays[f"{name}.{plane}"] for plane in PLANES)),
                        arrays[f"{name}.labels"].astype(np.int64),
                        provenance,
                    )
                    for name in names
                ]
    except (KeyError, ValueError) as e:
        raise DataError(f"malformed dataset at {path}: {e}") from e
    return dataset
