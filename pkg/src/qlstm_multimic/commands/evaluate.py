"""eval: score a checkpoint on one dataset split."""

import logging
from pathlib import Path
from typing import Optional

from qlstm_multimic.config import get_settings
from qlstm_multimic.data.dataset import load_dataset
from qlstm_multimic.models.config import ModelKind, Provenance
from qlstm_multimic.models.results import EvalReport
from qlstm_multimic.training.checkpoint import read_model_checkpoint
from qlstm_multimic.training.evaluation import evaluate
from qlstm_multimic.utils.error_handling import shape_mismatch

logger = logging.getLogger(__name__)


def cmd_eval(
    checkpoint: Path,
    dataset_dir: Path,
    split: str = "test",
    provenance: Optional[Provenance] = None,
    permute_labels: bool = False,
    seed: int = 0,
) -> EvalReport:
    """Frame accuracy and confusion counts of `checkpoint` on `split`.

    The provenance defaults to the one the checkpoint was trained on. With
    permute_labels, frame labels are shuffled (seeded by `seed`) as a
    chance-level control.

    Raises:
        CheckpointError: If the checkpoint cannot be read
        ShapeError: If the dataset's feature width differs from the checkpoint's
    """
    model, header, _ = read_model_checkpoint(checkpoint, get_settings().debug_checks)
    kind = ModelKind(header["model"])
    provenance = Provenance(provenance or header.get("provenance", Provenance.FOUR_MIC))
    dataset = load_dataset(dataset_dir)

    width = dataset.input_dim(provenance, kind)
    if width != model.input_dim:
        raise shape_mismatch(f"{provenance.value} feature width for this checkpoint", model.input_dim, width)

    result = evaluate(
        model,
        dataset.examples(split, provenance, kind),
        model.cfg.num_classes,
        batch_size=int(header.get("batch_size", 8)),
        permute_seed=seed if permute_labels else None,
    )
    logger.info("%s/%s on %s: frame accuracy %.4f", kind.value, provenance.value, split, result.frame_accuracy)
    return EvalReport(
        split=split,
        model=kind,
        provenance=provenance,
        n_frames=result.n_frames,
        loss=result.loss,
        frame_accuracy=result.frame_accuracy,
        confusion=result.confusion.tolist(),
        permuted_labels=permute_labels,
    )
