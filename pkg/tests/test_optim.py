"""Tests for RMSProp and the learning-rate schedule."""

import math

import numpy as np
import pytest
import torch
from torch import nn

from qlstm_multimic.training.gradients import GradientSet
from qlstm_multimic.training.optim import LRSchedule, RMSProp, lr_schedule_step, rmsprop_step
from qlstm_multimic.utils.error_handling import DomainError, ShapeError


class Scalar(nn.Module):
    def __init__(self, value: float = 0.5):
        super().__init__()
        self.w = nn.Parameter(torch.tensor([value], dtype=torch.float64))


def grads_of(value: float) -> GradientSet:
    return GradientSet({"w": np.array([value])})


class TestRMSProp:
    def test_two_steps_match_hand_recurrence(self):
        model = Scalar(0.5)
        opt = RMSProp(model, learning_rate=1.6e-3, decay=0.99, eps=1e-8)
        rmsprop_step(opt, grads_of(1.0))
        state = rmsprop_step(opt, grads_of(1.0))

        acc1 = 0.01
        p1 = 0.5 - 1.6e-3 / (math.sqrt(acc1) + 1e-8)
        acc2 = 0.99 * acc1 + 0.01
        p2 = p1 - 1.6e-3 / (math.sqrt(acc2) + 1e-8)
        assert abs(model.w.item() - p2) <= 1e-12
        assert abs(state.accumulators["w"][0] - acc2) <= 1e-12
        assert state.steps == 2

    def test_zero_gradient_leaves_parameters(self):
        model = Scalar(0.5)
        opt = RMSProp(model)
        rmsprop_step(opt, grads_of(2.0))
        before, acc_before = model.w.item(), opt.accumulators()["w"][0]
        state = rmsprop_step(opt, grads_of(0.0))
        assert model.w.item() == before
        assert state.accumulators["w"][0] == pytest.approx(0.99 * acc_before, rel=1e-15)

    def test_constant_gradient_step_approaches_lr(self):
        model = Scalar(0.0)
        opt = RMSProp(model, learning_rate=1e-3)
        for _ in range(2000):
            rmsprop_step(opt, grads_of(0.3))
        before = model.w.item()
        rmsprop_step(opt, grads_of(0.3))
        assert before - model.w.item() == pytest.approx(1e-3, rel=1e-3)

    def test_accumulators_are_nonnegative(self, rng):
        model = nn.Linear(3, 2, dtype=torch.float64)
        opt = RMSProp(model)
        for _ in range(3):
            grads = GradientSet({name: rng.standard_normal(tuple(p.shape)) for name, p in model.named_parameters()})
            state = rmsprop_step(opt, grads)
        assert all(np.all(acc >= 0.0) for acc in state.accumulators.values())

    def test_shape_mismatch(self):
        opt = RMSProp(Scalar())
        with pytest.raises(ShapeError):
            opt.step(GradientSet({"w": np.zeros(2)}))

    def test_learning_rate_must_be_positive(self):
        with pytest.raises(DomainError):
            RMSProp(Scalar(), learning_rate=0.0)
        opt = RMSProp(Scalar())
        with pytest.raises(DomainError):
            opt.learning_rate = -1.0

    def test_restore_continues_identically(self):
        reference, resumed = Scalar(0.5), Scalar(0.5)
        ref_opt = RMSProp(reference)
        for g in (1.0, -0.5):
            ref_opt.step(grads_of(g))
        snapshot = ref_opt.snapshot()

        with torch.no_grad():
            resumed.w.copy_(reference.w)
        res_opt = RMSProp(resumed)
        res_opt.restore(snapshot.accumulators, snapshot.steps)
        ref_opt.step(grads_of(0.25))
        res_opt.step(grads_of(0.25))
        assert resumed.w.item() == reference.w.item()


class TestLRSchedule:
    def run(self, losses, initial=1.6e-3):
        schedule, rates = LRSchedule(initial_lr=initial), []
        for loss in losses:
            schedule = lr_schedule_step(schedule, loss)
            rates.append(schedule.current_lr)
        return schedule, rates

    def test_halves_after_increase_only(self):
        schedule, rates = self.run([3.0, 2.5, 2.6])
        assert rates == [1.6e-3, 1.6e-3, 0.8e-3]
        assert schedule.halvings == 1

    def test_decreasing_losses_never_halve(self):
        schedule, _ = self.run([3.0, 2.0, 1.5, 1.0])
        assert schedule.halvings == 0
        assert schedule.current_lr == 1.6e-3

    def test_two_increases(self):
        schedule, _ = self.run([3.0, 3.1, 3.2])
        assert schedule.current_lr == 1.6e-3 / 4
        assert schedule.prev_val_loss == 3.2

    def test_equal_loss_is_not_an_increase(self):
        schedule, _ = self.run([2.0, 2.0])
        assert schedule.halvings == 0

    def test_rate_is_non_increasing(self, rng):
        _, rates = self.run(list(rng.uniform(0.0, 1.0, 30)))
        assert all(b <= a for a, b in zip(rates, rates[1:]))
