"""Tests for the epoch loop, checkpoints and evaluation."""

import json

import numpy as np
import pytest

from qlstm_multimic.commands.evaluate import cmd_eval
from qlstm_multimic.commands.train import run_training
from qlstm_multimic.data.dataset import load_dataset
from qlstm_multimic.models.config import ModelKind, NetworkConfig, Provenance, TrainConfig
from qlstm_multimic.nn.recurrent import build_model
from qlstm_multimic.training.batching import collate, iterate_batches
from qlstm_multimic.training.checkpoint import DROPOUT_RNG_KEY, OPTIMIZER_PREFIX, read_model_checkpoint
from qlstm_multimic.training.evaluation import evaluate, permute_frame_labels
from qlstm_multimic.training.loop import BEST_CHECKPOINT, LAST_CHECKPOINT, METRICS_FILE, train_loop
from qlstm_multimic.utils.error_handling import CheckpointError, DataError, ShapeError
from qlstm_multimic.utils.serialization import load_checkpoint


@pytest.fixture
def make_config(tiny_dataset_dir, tmp_path):
    def make(name: str = "run", **overrides) -> TrainConfig:
        values = dict(
            model=ModelKind.QLSTM,
            provenance=Provenance.FOUR_MIC,
            network=NetworkConfig(num_layers=1, hidden=2, dropout_rate=0.0),
            epochs=2,
            batch_size=4,
            seed=3,
            dataset=tiny_dataset_dir,
            output_dir=tmp_path / name,
        )
        values.update(overrides)
        return TrainConfig(**values)

    return make


def toy_examples(rng, count=6, steps=7, width=8, classes=4):
    return [(rng.standard_normal((steps, width)), rng.integers(0, classes, steps)) for _ in range(count)]


class TestBatching:
    def test_collate_pads_and_masks(self, rng):
        batch = collate([(rng.standard_normal((3, 2)), np.array([1, 2, 3])), (rng.standard_normal((1, 2)), np.array([2]))])
        assert tuple(batch.features.shape) == (3, 2, 2)
        assert batch.mask[:, 1].tolist() == [1.0, 0.0, 0.0]
        assert batch.labels[1:, 1].tolist() == [0, 0]
        assert batch.n_frames == 4
        assert batch.batch_size == 2

    def test_collate_rejects_empty(self):
        with pytest.raises(DataError):
            collate([])

    def test_collate_rejects_mixed_widths(self, rng):
        with pytest.raises(ShapeError):
            collate([(rng.standard_normal((2, 3)), np.zeros(2)), (rng.standard_normal((2, 4)), np.zeros(2))])

    def test_batches_cover_every_example(self, rng):
        examples = toy_examples(rng, count=7)
        sizes = [b.batch_size for b in iterate_batches(examples, 3, np.random.default_rng(0))]
        assert sizes == [3, 3, 1]


class TestTrainLoop:
    def test_two_epochs_write_history_and_checkpoints(self, make_config):
        cfg = make_config()
        metrics = run_training(cfg)
        assert [r.epoch for r in metrics.epochs] == [1, 2]
        assert all(np.isfinite([r.train_loss, r.val_loss]).all() for r in metrics.epochs)
        lines = (cfg.output_dir / METRICS_FILE).read_text().splitlines()
        assert len(lines) == 2
        assert set(json.loads(lines[0])) == {"epoch", "lr", "train_loss", "val_loss", "val_frame_accuracy", "wall_time_s"}
        for name in (BEST_CHECKPOINT, LAST_CHECKPOINT, "run.json", "config.json"):
            assert (cfg.output_dir / name).is_file()
        assert metrics.test is not None
        assert sum(map(sum, metrics.test.confusion)) == metrics.test.n_frames

    def test_same_seed_gives_identical_metrics(self, make_config):
        first, second = make_config("a"), make_config("b")
        run_training(first)
        run_training(second)
        assert (first.output_dir / METRICS_FILE).read_bytes() == (second.output_dir / METRICS_FILE).read_bytes()
        best_a, _ = load_checkpoint(first.output_dir / BEST_CHECKPOINT)
        best_b, _ = load_checkpoint(second.output_dir / BEST_CHECKPOINT)
        assert best_a.keys() == best_b.keys()
        for name in best_a:
            assert np.array_equal(best_a[name], best_b[name])

    def test_different_seeds_differ(self, make_config):
        a = run_training(make_config("a", seed=1))
        b = run_training(make_config("b", seed=2))
        assert a.epochs[0].train_loss != b.epochs[0].train_loss

    def test_resume_matches_uninterrupted_run(self, make_config):
        network = NetworkConfig(num_layers=2, hidden=2, dropout_rate=0.2)
        full = make_config("full", epochs=3, network=network)
        run_training(full)

        partial = make_config("partial", epochs=2, network=network)
        run_training(partial)
        resumed = make_config(
            "partial", epochs=3, network=network, resume_from=partial.output_dir / LAST_CHECKPOINT
        )
        run_training(resumed)

        assert (full.output_dir / METRICS_FILE).read_bytes() == (resumed.output_dir / METRICS_FILE).read_bytes()
        final_full, _ = load_checkpoint(full.output_dir / LAST_CHECKPOINT)
        final_resumed, _ = load_checkpoint(resumed.output_dir / LAST_CHECKPOINT)
        for name in final_full:
            assert np.array_equal(final_full[name], final_resumed[name]), name

    def test_resume_rejects_other_model(self, make_config):
        first = make_config("first")
        run_training(first)
        other = make_config("other", model=ModelKind.LSTM, resume_from=first.output_dir / LAST_CHECKPOINT)
        with pytest.raises(CheckpointError):
            run_training(other)

    def test_last_checkpoint_carries_optimizer_state(self, make_config):
        cfg = make_config()
        run_training(cfg)
        arrays, header = load_checkpoint(cfg.output_dir / LAST_CHECKPOINT)
        assert any(name.startswith(OPTIMIZER_PREFIX) for name in arrays)
        assert DROPOUT_RNG_KEY in arrays
        assert header["epoch"] == 2
        assert header["optimizer_steps"] == 2 * 2  # 6 training scenes in batches of 4
        assert len(header["history"]) == 2

    def test_learning_rate_follows_schedule(self, make_config):
        metrics = run_training(make_config(epochs=4))
        records = metrics.epochs
        assert records[0].lr == 1.6e-3
        assert records[1].lr == records[0].lr
        for k in range(2, len(records)):
            rose = records[k - 1].val_loss > records[k - 2].val_loss
            assert records[k].lr == (records[k - 1].lr / 2 if rose else records[k - 1].lr)

    def test_toy_rule_loss_decreases(self, rng, tmp_path):
        def coherent(count):
            examples = []
            for _ in range(count):
                x = rng.standard_normal((9, 8))
                examples.append((x, (x[:, [0, 2, 4, 6]].sum(axis=1) > 0).astype(np.int64)))
            return examples

        cfg = TrainConfig(
            network=NetworkConfig(num_layers=1, hidden=2, dropout_rate=0.0, num_classes=2),
            epochs=5,
            initial_lr=5e-4,
            batch_size=12,
            seed=0,
            dataset=tmp_path,
            output_dir=tmp_path / "toy",
        )
        metrics = train_loop(cfg, train=coherent(12), valid=coherent(4), input_dim=8)
        losses = [r.train_loss for r in metrics.epochs]
        assert all(later < earlier for earlier, later in zip(losses, losses[1:])), losses

    def test_empty_split_rejected(self, make_config, rng):
        with pytest.raises(DataError):
            train_loop(make_config(), train=[], valid=toy_examples(rng, width=32), input_dim=32)

    def test_width_mismatch_rejected(self, make_config, rng):
        with pytest.raises(ShapeError):
            train_loop(make_config(), train=toy_examples(rng, width=8), valid=toy_examples(rng, width=8), input_dim=32)

    def test_missing_parent_directory(self, make_config, rng, tmp_path):
        cfg = make_config(output_dir=tmp_path / "missing" / "run")
        with pytest.raises(DataError):
            train_loop(cfg, train=toy_examples(rng, width=32), valid=toy_examples(rng, width=32), input_dim=32)

    def test_real_lstm_on_copied_input(self, make_config):
        cfg = make_config(model=ModelKind.LSTM, provenance=Provenance.COPIED_MIC, network=NetworkConfig(num_layers=1, hidden=4, dropout_rate=0.0))
        metrics = run_training(cfg)
        model, header, _ = read_model_checkpoint(cfg.output_dir / BEST_CHECKPOINT)
        assert model.input_dim == 8
        assert header["provenance"] == "copied_mic"
        assert metrics.test.provenance is Provenance.COPIED_MIC


class TestEvaluation:
    def test_eval_reproduces_best_validation_accuracy(self, make_config, tiny_dataset_dir):
        cfg = make_config(epochs=3)
        metrics = run_training(cfg)
        report = cmd_eval(cfg.output_dir / BEST_CHECKPOINT, tiny_dataset_dir, split="valid")
        assert report.frame_accuracy == metrics.best_val_frame_accuracy
        assert report.loss == pytest.approx(metrics.best_val_loss, abs=1e-12)

    def test_eval_defaults_to_training_provenance(self, make_config, tiny_dataset_dir):
        cfg = make_config(provenance=Provenance.BEAMFORMED)
        run_training(cfg)
        report = cmd_eval(cfg.output_dir / BEST_CHECKPOINT, tiny_dataset_dir)
        assert report.provenance is Provenance.BEAMFORMED
        assert report.split == "test"

    def test_lstm_checkpoint_rejects_other_width(self, make_config, tiny_dataset_dir):
        cfg = make_config(model=ModelKind.LSTM, provenance=Provenance.COPIED_MIC, network=NetworkConfig(num_layers=1, hidden=3, dropout_rate=0.0))
        run_training(cfg)
        with pytest.raises(ShapeError):
            cmd_eval(cfg.output_dir / BEST_CHECKPOINT, tiny_dataset_dir, provenance=Provenance.FOUR_MIC)

    def test_permuted_labels_keep_frame_counts(self, rng):
        examples = toy_examples(rng, count=4, steps=5)
        permuted = permute_frame_labels(examples, seed=0)
        assert [len(y) for _, y in permuted] == [5] * 4
        original = np.sort(np.concatenate([y for _, y in examples]))
        assert np.array_equal(np.sort(np.concatenate([y for _, y in permuted])), original)
        assert all(x is px for (x, _), (px, _) in zip(examples, permuted))

    def test_permuted_eval_report(self, make_config, tiny_dataset_dir):
        cfg = make_config()
        run_training(cfg)
        report = cmd_eval(cfg.output_dir / BEST_CHECKPOINT, tiny_dataset_dir, permute_labels=True, seed=5)
        assert report.permuted_labels
        assert sum(map(sum, report.confusion)) == report.n_frames

    def test_random_model_scores_chance(self, rng):
        model = build_model(ModelKind.QLSTM, NetworkConfig(num_layers=1, hidden=2, dropout_rate=0.0), 8, seed=2)
        result = evaluate(model, toy_examples(rng, count=40, steps=50), num_classes=4)
        assert result.n_frames == 2000
        assert abs(result.frame_accuracy - 0.25) <= 0.05

    def test_evaluate_empty_split(self, make_config):
        model, _, _ = read_model_checkpoint(self._trained(make_config))
        with pytest.raises(DataError):
            evaluate(model, [], 4)

    def test_missing_checkpoint(self, tiny_dataset_dir, tmp_path):
        with pytest.raises(CheckpointError):
            cmd_eval(tmp_path / "nope.npz", tiny_dataset_dir)

    @staticmethod
    def _trained(make_config):
        cfg = make_config(epochs=1)
        run_training(cfg)
        return cfg.output_dir / BEST_CHECKPOINT


def test_dataset_examples_match_training_width(tiny_dataset_dir):
    dataset = load_dataset(tiny_dataset_dir)
    x, y = dataset.examples("train", Provenance.FOUR_MIC, ModelKind.QLSTM)[0]
    assert x.shape[1] == dataset.input_dim(Provenance.FOUR_MIC, ModelKind.QLSTM) == 32
    assert y.shape == (x.shape[0],)
