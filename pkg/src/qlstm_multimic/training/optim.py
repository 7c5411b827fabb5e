"""RMSProp updates and the validation-driven learning-rate schedule."""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import torch
from torch import nn

from qlstm_multimic.training.gradients import GradientSet
from qlstm_multimic.utils.error_handling import DomainError

logger = logging.getLogger(__name__)

DEFAULT_DECAY = 0.99
DEFAULT_EPS = 1e-8
DEFAULT_LR = 1.6e-3


@dataclass(frozen=True)
class OptimizerState:
    """Snapshot of RMSProp: running mean-square accumulators and hyper-parameters."""

    accumulators: dict[str, np.ndarray]
    decay: float
    eps: float
    learning_rate: float
    steps: int


class RMSProp:
    """Plain RMSProp (no momentum, no centering, no weight decay) over a module.

    acc <- decay·acc + (1 - decay)·g²;  p <- p - lr·g / (sqrt(acc) + eps)
    """

    def __init__(
        self,
        model: nn.Module,
        learning_rate: float = DEFAULT_LR,
        decay: float = DEFAULT_DECAY,
        eps: float = DEFAULT_EPS,
    ):
        if learning_rate <= 0:
            raise DomainError(f"learning rate must be positive, got {learning_rate}")
        self.model = model
        self.decay = decay
        self.eps = eps
        self.steps = 0
        self._named = list(model.named_parameters())
        self._torch = torch.optim.RMSprop(
            [p for _, p in self._named],
            lr=learning_rate,
            alpha=decay,
            eps=eps,
            momentum=0.0,
            weight_decay=0.0,
            centered=False,
        )

    @property
    def learning_rate(self) -> float:
        return float(self._torch.param_groups[0]["lr"])

    @learning_rate.setter
    def learning_rate(self, value: float) -> None:
        if value <= 0:
            raise DomainError(f"learning rate must be positive, got {value}")
        for group in self._torch.param_groups:
            group["lr"] = value

    def step(self, grads: Optional[GradientSet] = None) -> None:
        """Apply one update from `grads`, or from the parameters' `.grad` fields."""
        if grads is not None:
            grads.check_congruent(self.model)
            for name, p in self._named:
                p.grad = torch.from_numpy(np.array(grads[name], dtype=np.float64))
        self._torch.step()
        self.steps += 1

    def accumulators(self) -> dict[str, np.ndarray]:
        out = {}
        for name, p in self._named:
            state = self._torch.state.get(p, {})
            acc = state.get("square_avg")
            out[name] = np.zeros(tuple(p.shape)) if acc is None else acc.detach().cpu().numpy().copy()
        return out

    def snapshot(self) -> OptimizerState:
        return OptimizerState(
            accumulators=self.accumulators(),
            decay=self.decay,
            eps=self.eps,
            learning_rate=self.learning_rate,
            steps=self.steps,
        )

    def restore(self, accumulators: dict[str, np.ndarray], steps: int) -> None:
        """Reload accumulators written by `accumulators()`."""
        self.steps = steps
        if steps == 0:
            return
        for name, p in self._named:
            self._torch.state[p] = {
                "step": torch.tensor(float(steps)),
                "square_avg": torch.from_numpy(np.array(accumulators[name], dtype=np.float64)),
            }


def rmsprop_step(optimizer: RMSProp, grads: GradientSet) -> OptimizerState:
    """Apply one RMSProp update to the optimizer's module; returns the new state.

    Raises:
        ShapeError: If grads do not mirror the module's parameters
    """
    optimizer.step(grads)
    return optimizer.snapshot()


@dataclass(frozen=True)
class LRSchedule:
    """Learning rate halved whenever the validation loss goes up."""

    initial_lr: float = DEFAULT_LR
    halvings: int = 0
    prev_val_loss: Optional[float] = None

    @property
    def current_lr(self) -> float:
        return self.initial_lr / 2**self.halvings


def lr_schedule_step(s: LRSchedule, epoch_val_loss: float) -> LRSchedule:
    """Record one epoch's validation loss, halving the rate if it increased."""
    if s.prev_val_loss is not None and epoch_val_loss > s.prev_val_loss:
        s = replace(s, halvings=s.halvings + 1)
        logger.info(
            "validation loss rose %.6f -> %.6f, learning rate halved to %.3e",
            s.prev_val_loss,
            epoch_val_loss,
            s.current_lr,
        )
    return replace(s, prev_val_loss=epoch_val_loss)
