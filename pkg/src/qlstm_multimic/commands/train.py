"""train: run one training job on a saved dataset."""

import logging
from pathlib import Path
from typing import Optional

from qlstm_multimic.commands.common import load_config
from qlstm_multimic.config import get_settings
from qlstm_multimic.data.dataset import load_dataset
from qlstm_multimic.models.config import TrainConfig
from qlstm_multimic.models.results import RunMetrics
from qlstm_multimic.training.loop import train_loop

logger = logging.getLogger(__name__)


def run_training(cfg: TrainConfig) -> RunMetrics:
    """Load cfg.dataset and train on its train/valid splits, scoring the best checkpoint on test."""
    dataset = load_dataset(cfg.dataset)
    kind, provenance = cfg.model, cfg.provenance
    logger.info("training %s on %s features from %s", kind.value, provenance.value, cfg.dataset)
    return train_loop(
        cfg,
        train=dataset.examples("train", provenance, kind),
        valid=dataset.examples("valid", provenance, kind),
        test=dataset.examples("test", provenance, kind),
        input_dim=dataset.input_dim(provenance, kind),
        check_finite=get_settings().debug_checks,
    )


def cmd_train(
    config_path: Path, seed: Optional[int] = None, out: Optional[Path] = None
) -> RunMetrics:
    cfg = load_config(config_path, TrainConfig, {"seed": seed, "output_dir": out})
    return run_training(cfg)
