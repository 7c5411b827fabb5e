"""Tests for backpropagation through time and the finite-difference check."""

import numpy as np
import pytest
import torch

from qlstm_multimic.commands.gradcheck import cmd_gradcheck, double_entry, tiny_factory
from qlstm_multimic.models.config import ModelKind, NetworkConfig
from qlstm_multimic.nn.losses import softmax_cross_entropy
from qlstm_multimic.nn.recurrent import build_model
from qlstm_multimic.training.batching import collate
from qlstm_multimic.training.gradients import GradientSet, backward, grad_check
from qlstm_multimic.utils.error_handling import ConfigValidationError, DataError, NumericalError, ShapeError


def small_batch(rng, steps=(5, 3), width=8, classes=3):
    return collate([(rng.standard_normal((t, width)), rng.integers(0, classes, t)) for t in steps])


def test_softmax_gradient_closed_form(rng):
    logits = torch.from_numpy(rng.standard_normal((4, 3))).requires_grad_(True)
    labels = torch.tensor([2, 0, 1, 1])
    loss, posteriors = softmax_cross_entropy(logits, labels)
    loss.backward()
    onehot = np.eye(3)[labels.numpy()]
    expected = (posteriors.detach().numpy() - onehot) / 4
    assert np.max(np.abs(logits.grad.numpy() - expected)) <= 1e-12


def test_gradients_cover_every_parameter(rng):
    model = build_model(ModelKind.QLSTM, NetworkConfig(num_layers=2, hidden=2, num_classes=3), 8)
    loss, grads = backward(model, small_batch(rng))
    assert np.isfinite(loss)
    grads.check_congruent(model)
    assert grads.global_norm() > 0.0


def test_loss_scale_is_linear(rng):
    model = build_model(ModelKind.QLSTM, NetworkConfig(num_layers=2, hidden=2, num_classes=3), 8, seed=3)
    batch = small_batch(rng)
    loss, grads = backward(model, batch)
    scaled_loss, scaled = backward(model, batch, loss_scale=3.0)
    assert scaled_loss == pytest.approx(3.0 * loss, rel=1e-12)
    for name in grads.names():
        assert np.allclose(scaled[name], 3.0 * grads[name], rtol=1e-12, atol=1e-15)


def test_padding_frames_do_not_contribute(rng):
    model = build_model(ModelKind.LSTM, NetworkConfig(num_layers=1, hidden=3, num_classes=3), 8, seed=1)
    batch = small_batch(rng, steps=(3, 6))
    loss, grads = backward(model, batch)
    features = batch.features.clone()
    features[3:, 0] = 50.0
    noisy = type(batch)(features, batch.labels, batch.mask, batch.lengths)
    noisy_loss, noisy_grads = backward(model, noisy)
    assert noisy_loss == pytest.approx(loss, abs=1e-12)
    for name in grads.names():
        assert np.allclose(noisy_grads[name], grads[name], rtol=0.0, atol=1e-12)


def test_empty_batch_rejected(rng):
    model = build_model(ModelKind.LSTM, NetworkConfig(num_layers=1, hidden=2, num_classes=3), 8)
    batch = small_batch(rng, steps=(2,))
    empty = type(batch)(batch.features, batch.labels, batch.mask * 0, torch.tensor([0]))
    with pytest.raises(DataError):
        backward(model, empty)


def test_non_finite_loss_rejected(rng):
    model = build_model(ModelKind.LSTM, NetworkConfig(num_layers=1, hidden=2, num_classes=3), 8)
    batch = small_batch(rng, steps=(2,))
    poisoned = type(batch)(torch.full_like(batch.features, float("nan")), batch.labels, batch.mask, batch.lengths)
    with pytest.raises(NumericalError):
        backward(model, poisoned)


def test_gradient_set_rejects_non_finite():
    with pytest.raises(NumericalError):
        GradientSet({"w": np.array([1.0, np.inf])})


def test_gradient_set_congruence(rng):
    model = build_model(ModelKind.LSTM, NetworkConfig(num_layers=1, hidden=2, num_classes=3), 8)
    with pytest.raises(ShapeError):
        GradientSet({"head.weight": np.zeros((3, 4))}).check_congruent(model)


class TestGradCheck:
    @pytest.mark.parametrize("kind", [ModelKind.QLSTM, ModelKind.LSTM])
    def test_tiny_networks_pass(self, kind):
        report = grad_check(tiny_factory(kind), tolerance=1e-4, step=1e-5, seed=0)
        assert report.passed, report
        assert report.max_rel_error <= 1e-4
        assert report.n_checked > 0

    def test_corrupted_gradient_is_reported(self):
        target = "layers.0.fwd.fx.weight_a"
        report = grad_check(tiny_factory(ModelKind.QLSTM), perturb=double_entry(target))
        assert not report.passed
        assert report.worst_param == target
        assert report.max_rel_error == pytest.approx(0.5, rel=1e-3)

    def test_command_report_serializes_pass_field(self):
        report = cmd_gradcheck("tiny-lstm", inject_fault="head.weight")
        dumped = report.model_dump(by_alias=True)
        assert dumped["pass"] is False
        assert dumped["worst_param"] == "head.weight"

    def test_unknown_fault_target(self):
        with pytest.raises(ConfigValidationError):
            cmd_gradcheck("tiny-qlstm", inject_fault="no.such.param")

    def test_unknown_preset(self):
        with pytest.raises(ConfigValidationError):
            cmd_gradcheck("huge")
