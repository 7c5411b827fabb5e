"""gen-data: synthesize and featurize a paired dataset."""

import logging
from pathlib import Path
from typing import Any, Optional

from qlstm_multimic.commands.common import load_config
from qlstm_multimic.data.dataset import SPLITS, build_dataset, save_dataset
from qlstm_multimic.models.config import DatasetConfig, Provenance

logger = logging.getLogger(__name__)


def cmd_gen_data(
    config_path: Optional[Path], seed: Optional[int] = None, out: Optional[Path] = None
) -> dict[str, Any]:
    """Build the dataset described by `config_path` and write it to disk.

    Args:
        config_path: JSON DatasetConfig (None for defaults)
        seed: Replaces the config's seed
        out: Replaces the config's output_dir

    Returns:
        Summary with the output directory, manifest path and split sizes
    """
    cfg = load_config(config_path, DatasetConfig, {"seed": seed, "output_dir": out})
    dataset = build_dataset(cfg)
    manifest = save_dataset(dataset, cfg.output_dir)
    return {
        "output_dir": str(cfg.output_dir),
        "manifest": str(manifest),
        "seed": dataset.seed,
        "splits": {split: len(dataset.scene_seeds[split]) for split in SPLITS},
        "provenances": [p.value for p in Provenance],
        "num_features": dataset.num_features,
    }
