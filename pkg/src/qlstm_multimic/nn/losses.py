"""Frame-level softmax cross-entropy."""

from typing import Optional

import torch

from qlstm_multimic.utils.error_handling import DomainError, shape_mismatch


def softmax_cross_entropy(
    logits: torch.Tensor,
    labels: torch.Tensor,
    mask: Optional[torch.Tensor] = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Mean over valid frames of -log softmax(logits)[label].

    Args:
        logits: Real logits [..., K]
        labels: Integer labels with the leading shape of logits
        mask: Optional 0/1 frame weights with the same shape as labels; padded
            frames carry 0 and may hold any label value

    Returns:
        (scalar loss, per-frame posteriors [..., K])

    Raises:
        DomainError: If a valid frame has a label outside [0, K) or no frame is valid
        ShapeError: If labels do not match the leading logits shape
    """
    num_classes = logits.shape[-1]
    if tuple(labels.shape) != tuple(logits.shape[:-1]):
        raise shape_mismatch("label shape", tuple(logits.shape[:-1]), tuple(labels.shape))
    if mask is not None and tuple(mask.shape) != tuple(labels.shape):
        raise shape_mismatch("mask shape", tuple(labels.shape), tuple(mask.shape))

    valid = torch.ones_like(labels, dtype=torch.bool) if mask is None else mask > 0
    if not bool(valid.any()):
        raise DomainError("cross-entropy needs at least one valid frame")
    checked = labels[valid]
    if bool(((checked < 0) | (checked >= num_classes)).any()):
        bad = int(checked[(checked < 0) | (checked >= num_classes)][0])
        raise DomainError(f"label {bad} outside [0, {num_classes})")

    log_probs = torch.log_softmax(logits, dim=-1)
    picked = log_probs.gather(-1, labels.clamp(0, num_classes - 1).long().unsqueeze(-1)).squeeze(-1)
    weights = valid.to(logits.dtype)
    loss = -(picked * weights).sum() / weights.sum()
    return loss, log_probs.exp()
