"""Padding of variable-length sequences into time-major minibatches."""

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
import torch

from qlstm_multimic.data.packing import Example
from qlstm_multimic.utils.error_handling import DataError, shape_mismatch


@dataclass(frozen=True)
class SequenceBatch:
    """Time-major batch: features [T, B, F], labels [T, B], mask [T, B], lengths [B]."""

    features: torch.Tensor
    labels: torch.Tensor
    mask: torch.Tensor
    lengths: torch.Tensor

    @property
    def n_frames(self) -> int:
        return int(self.lengths.sum())

    @property
    def batch_size(self) -> int:
        return int(self.lengths.shape[0])


def collate(examples: list[Example]) -> SequenceBatch:
    """Pad examples to the longest one; padded frames get mask 0 and label 0.

    Raises:
        DataError: If the list is empty or an example has no frames
        ShapeError: If feature widths differ or labels do not match frames
    """
    if not examples:
        raise DataError("cannot collate an empty batch")
    width = examples[0][0].shape[1]
    lengths = []
    for x, y in examples:
        if x.ndim != 2 or x.shape[0] == 0:
            raise DataError(f"example features must be a non-empty [T, F] matrix, got {x.shape}")
        if x.shape[1] != width:
            raise shape_mismatch("feature width", width, x.shape[1])
        if y.shape != (x.shape[0],):
            raise shape_mismatch("label count", (x.shape[0],), y.shape)
        lengths.append(x.shape[0])

    steps, size = max(lengths), len(examples)
    features = np.zeros((steps, size, width), dtype=np.float64)
    labels = np.zeros((steps, size), dtype=np.int64)
    mask = np.zeros((steps, size), dtype=np.float64)
    for b, (x, y) in enumerate(examples):
        features[: x.shape[0], b] = x
        labels[: x.shape[0], b] = y
        mask[: x.shape[0], b] = 1.0
    return SequenceBatch(
        features=torch.from_numpy(features),
        labels=torch.from_numpy(labels),
        mask=torch.from_numpy(mask),
        lengths=torch.tensor(lengths, dtype=torch.long),
    )


def iterate_batches(
    examples: list[Example], batch_size: int, rng: Optional[np.random.Generator] = None
) -> Iterator[SequenceBatch]:
    """Yield batches in order, or in an order shuffled by `rng`."""
    order = np.arange(len(examples)) if rng is None else rng.permutation(len(examples))
    for start in range(0, len(order), batch_size):
        yield collate([examples[i] for i in order[start : start + batch_size]])
