"""Frame accuracy, loss and confusion counts of a network on labeled sequences."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn

from qlstm_multimic.data.packing import Example
from qlstm_multimic.nn.losses import softmax_cross_entropy
from qlstm_multimic.training.batching import iterate_batches
from qlstm_multimic.utils.error_handling import DataError


@dataclass(frozen=True)
class EvalResult:
    loss: float
    frame_accuracy: float
    confusion: np.ndarray  # [true, predicted]
    n_frames: int


def permute_frame_labels(examples: list[Example], seed: int) -> list[Example]:
    """Shuffle frame labels across the whole split, keeping each sequence's length."""
    labels = np.concatenate([y for _, y in examples])
    shuffled = np.random.default_rng(seed).permutation(labels)
    out, start = [], 0
    for x, y in examples:
        out.append((x, shuffled[start : start + len(y)]))
        start += len(y)
    return out


@torch.no_grad()
def evaluate(
    model: nn.Module,
    examples: list[Example],
    num_classes: int,
    batch_size: int = 8,
    permute_seed: Optional[int] = None,
) -> EvalResult:
    """Score `model` in inference mode.

    With `permute_seed` set, labels are first shuffled across frames as a
    chance-level control.

    Raises:
        DataError: If there are no examples
    """
    if not examples:
        raise DataError("cannot evaluate on an empty split")
    if permute_seed is not None:
        examples = permute_frame_labels(examples, permute_seed)

    model.eval()
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    loss_sum, frames = 0.0, 0
    for batch in iterate_batches(examples, batch_size):
        logits = model(batch.features, batch.lengths)
        loss, posteriors = softmax_cross_entropy(logits, batch.labels, batch.mask)
        valid = batch.mask > 0
        predicted = posteriors.argmax(dim=-1)[valid].numpy()
        truth = batch.labels[valid].numpy()
        np.add.at(confusion, (truth, predicted), 1)
        loss_sum += float(loss) * batch.n_frames
        frames += batch.n_frames

    correct = int(np.trace(confusion))
    return EvalResult(
        loss=loss_sum / frames,
        frame_accuracy=correct / frames,
        confusion=confusion,
        n_frames=frames,
    )
