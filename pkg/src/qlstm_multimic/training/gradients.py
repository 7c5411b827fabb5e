"""Backpropagation through time and finite-difference verification.

Gradients come from torch's reverse-mode tape over the unrolled network.
Quaternion parameters are stored as four real planes, so every quaternion
weight is differentiated through its four real components.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import torch
from torch import nn

from qlstm_multimic.models.results import GradCheckReport
from qlstm_multimic.nn.losses import softmax_cross_entropy
from qlstm_multimic.training.batching import SequenceBatch
from qlstm_multimic.utils.error_handling import DataError, NumericalError, shape_mismatch

logger = logging.getLogger(__name__)

LossFn = Callable[..., tuple[torch.Tensor, torch.Tensor]]


@dataclass(frozen=True)
class GradientSet:
    """One real gradient array per named parameter array."""

    grads: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        for name, g in self.grads.items():
            if not np.isfinite(g).all():
                raise NumericalError(f"non-finite gradient in {name}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.grads[name]

    def names(self) -> list[str]:
        return list(self.grads)

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.grads.values())))

    def check_congruent(self, model: nn.Module) -> None:
        params = dict(model.named_parameters())
        if set(params) != set(self.grads):
            raise shape_mismatch("gradient names", sorted(params), sorted(self.grads))
        for name, p in params.items():
            if tuple(p.shape) != self.grads[name].shape:
                raise shape_mismatch(f"gradient {name}", tuple(p.shape), self.grads[name].shape)

    @classmethod
    def from_model(cls, model: nn.Module) -> "GradientSet":
        grads = {}
        for name, p in model.named_parameters():
            grads[name] = (
                np.zeros(tuple(p.shape)) if p.grad is None else p.grad.detach().cpu().numpy().copy()
            )
        return cls(grads)


def batch_loss(
    model: nn.Module, batch: SequenceBatch, loss_fn: LossFn = softmax_cross_entropy
) -> torch.Tensor:
    logits = model(batch.features, batch.lengths)
    loss, _ = loss_fn(logits, batch.labels, batch.mask)
    return loss


def backward(
    model: nn.Module,
    batch: SequenceBatch,
    loss_fn: LossFn = softmax_cross_entropy,
    training: bool = False,
    loss_scale: float = 1.0,
) -> tuple[float, GradientSet]:
    """Loss of one batch and its gradient with respect to every parameter.

    The model's `.grad` fields are left populated so an optimizer can step.

    Raises:
        DataError: If the batch holds no frames
        NumericalError: If the loss is not finite
    """
    if batch.n_frames == 0:
        raise DataError("backward needs a non-empty batch")
    model.train(training)
    model.zero_grad(set_to_none=True)
    loss = batch_loss(model, batch, loss_fn) * loss_scale
    if not torch.isfinite(loss):
        raise NumericalError(f"non-finite loss {float(loss)}")
    loss.backward()
    return float(loss.detach()), GradientSet.from_model(model)


def grad_check(
    factory: Callable[[int], tuple[nn.Module, SequenceBatch]],
    tolerance: float = 1e-4,
    step: float = 1e-5,
    seed: int = 0,
    perturb: Optional[Callable[[GradientSet], GradientSet]] = None,
    loss_fn: LossFn = softmax_cross_entropy,
) -> GradCheckReport:
    """Compare reverse-mode gradients with central differences on every scalar.

    rel = |g_a - g_n| / max(|g_a|, |g_n|, 1e-8); the check passes when the
    largest rel is at most `tolerance`. The network runs in inference mode so
    dropout does not disturb the differences. `perturb` lets a caller corrupt
    the analytic gradients before comparison.
    """
    model, batch = factory(seed)
    _, analytic = backward(model, batch, loss_fn, training=False)
    if perturb is not None:
        analytic = perturb(analytic)

    worst = (0.0, "", 0)
    n_checked = 0
    model.eval()
    with torch.no_grad():
        for name, param in model.named_parameters():
            flat = param.data.view(-1)
            g_analytic = analytic[name].reshape(-1)
            for index in range(flat.numel()):
                original = float(flat[index])
                flat[index] = original + step
                plus = float(batch_loss(model, batch, loss_fn))
                flat[index] = original - step
                minus = float(batch_loss(model, batch, loss_fn))
                flat[index] = original

                g_a = float(g_analytic[index])
                g_n = (plus - minus) / (2.0 * step)
                rel = abs(g_a - g_n) / max(abs(g_a), abs(g_n), 1e-8)
                if rel > worst[0] or not worst[1]:
                    worst = (rel, name, index)
                n_checked += 1

    report = GradCheckReport(
        max_rel_error=worst[0],
        worst_param=worst[1],
        worst_index=worst[2],
        passed=worst[0] <= tolerance,
        tolerance=tolerance,
        step=step,
        n_checked=n_checked,
    )
    logger.info(
        "gradcheck: %d scalars, max rel error %.3e at %s[%d] -> %s",
        n_checked,
        report.max_rel_error,
        report.worst_param,
        report.worst_index,
        "pass" if report.passed else "FAIL",
    )
    return report
