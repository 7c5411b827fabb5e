"""Epoch loop: minibatch RMSProp, validation-driven LR halving, checkpoints, metrics."""

import logging
import time
from pathlib import Path
from typing import Any, Optional

import numpy as np
import torch

from qlstm_multimic.data.packing import Example
from qlstm_multimic.models.config import TrainConfig
from qlstm_multimic.models.results import EpochRecord, EvalReport, RunMetrics
from qlstm_multimic.nn.recurrent import build_model, load_network_arrays
from qlstm_multimic.training.batching import iterate_batches
from qlstm_multimic.training.checkpoint import read_model_checkpoint, split_checkpoint_arrays, write_model_checkpoint
from qlstm_multimic.training.evaluation import evaluate
from qlstm_multimic.training.gradients import backward
from qlstm_multimic.training.optim import RMSProp, LRSchedule, lr_schedule_step
from qlstm_multimic.utils.error_handling import CheckpointError, DataError, DomainError, shape_mismatch
from qlstm_multimic.utils.seeding import child_seeds
from qlstm_multimic.utils.serialization import load_checkpoint

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
BEST_CHECKPOINT = "best.npz"
LAST_CHECKPOINT = "last.npz"


def _validate_split(name: str, examples: list[Example], input_dim: int, num_classes: int) -> None:
    if not examples:
        raise DataError(f"{name} split is empty")
    for x, y in examples:
        if x.ndim != 2 or x.shape[1] != input_dim:
            raise shape_mismatch(f"{name} feature width", input_dim, x.shape[-1])
        if y.size and (y.min() < 0 or y.max() >= num_classes):
            raise DomainError(f"{name} split has labels outside [0, {num_classes})")


def prepare_output_dir(path: Path) -> Path:
    """Create `path` (not its parents).

    Raises:
        DataError: If the parent directory does not exist
    """
    path = Path(path)
    try:
        path.mkdir(exist_ok=True)
    except FileNotFoundError as e:
        raise DataError(f"parent directory of {path} does not exist") from e
    return path


def train_loop(
    cfg: TrainConfig,
    train: list[Example],
    valid: list[Example],
    input_dim: int,
    test: Optional[list[Example]] = None,
    check_finite: bool = False,
) -> RunMetrics:
    """Train one network and write metrics.jsonl, best.npz and last.npz to cfg.output_dir.

    The checkpoint with the lowest validation loss is kept as best.npz; when a
    test split is given, that checkpoint is scored on it at the end.

    Raises:
        DataError: If a split is empty or the output directory cannot be created
        ShapeError: If feature widths do not match input_dim
        CheckpointError: If resume_from is incompatible with cfg
    """
    num_classes = cfg.network.num_classes
    _validate_split("train", train, input_dim, num_classes)
    _validate_split("valid", valid, input_dim, num_classes)
    if test is not None:
        _validate_split("test", test, input_dim, num_classes)
    out = prepare_output_dir(cfg.output_dir)

    model_seed, shuffle_seed = child_seeds(cfg.seed, 2)
    model = build_model(cfg.model, cfg.network, input_dim, model_seed, check_finite)
    optimizer = RMSProp(model, cfg.initial_lr, cfg.rmsprop_decay, cfg.rmsprop_eps)
    schedule = LRSchedule(initial_lr=cfg.initial_lr)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    history: list[EpochRecord] = []
    best: Optional[dict[str, Any]] = None
    start_epoch = 1

    if cfg.resume_from is not None:
        state = _resume(cfg, model, optimizer, input_dim)
        schedule = LRSchedule(**state["schedule"])
        shuffle_rng.bit_generator.state = state["shuffle_rng"]
        history = [EpochRecord.model_validate(r) for r in state["history"]]
        best = state.get("best")
        start_epoch = int(state["epoch"]) + 1
        logger.info("resumed from %s at epoch %d", cfg.resume_from, start_epoch)

    (out / "config.json").write_text(cfg.model_dump_json(indent=2) + "\n", encoding="utf-8")
    metrics_path = out / METRICS_FILE
    with metrics_path.open("w", encoding="utf-8") as handle:
        for record in history:
            handle.write(record.model_dump_json() + "\n")

    for epoch in range(start_epoch, cfg.epochs + 1):
        optimizer.learning_rate = schedule.current_lr
        started = time.perf_counter()
        loss_sum, frames = 0.0, 0
        for batch in iterate_batches(train, cfg.batch_size, shuffle_rng):
            loss, _ = backward(model, batch, training=True)
            if cfg.clip_norm is not None:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.clip_norm)
            optimizer.step()
            loss_sum += loss * batch.n_frames
            frames += batch.n_frames

        val = evaluate(model, valid, num_classes, cfg.batch_size)
        elapsed = time.perf_counter() - started
        record = EpochRecord(
            epoch=epoch,
            lr=schedule.current_lr,
            train_loss=loss_sum / frames,
            val_loss=val.loss,
            val_frame_accuracy=val.frame_accuracy,
            wall_time_s=elapsed if cfg.record_wall_time else 0.0,
        )
        history.append(record)
        with metrics_path.open("a", encoding="utf-8") as handle:
            handle.write(record.model_dump_json() + "\n")
        logger.info(
            "epoch %d/%d lr=%.3e train_loss=%.4f val_loss=%.4f val_acc=%.4f (%.1fs)",
            epoch,
            cfg.epochs,
            record.lr,
            record.train_loss,
            record.val_loss,
            record.val_frame_accuracy,
            elapsed,
        )

        if best is None or val.loss < best["val_loss"]:
            best = {"epoch": epoch, "val_loss": val.loss, "val_frame_accuracy": val.frame_accuracy}
            write_model_checkpoint(out / BEST_CHECKPOINT, model, _header(cfg, epoch, best))

        schedule = lr_schedule_step(schedule, val.loss)
        write_model_checkpoint(
            out / LAST_CHECKPOINT,
            model,
            {
                **_header(cfg, epoch, best),
                "schedule": {
                    "initial_lr": schedule.initial_lr,
                    "halvings": schedule.halvings,
                    "prev_val_loss": schedule.prev_val_loss,
                },
                "optimizer_steps": optimizer.steps,
                "shuffle_rng": shuffle_rng.bit_generator.state,
                "history": [r.model_dump(mode="json") for r in history],
            },
            optimizer.accumulators(),
        )

    metrics = RunMetrics(
        epochs=history,
        best_epoch=None if best is None else best["epoch"],
        best_val_loss=None if best is None else best["val_loss"],
        best_val_frame_accuracy=None if best is None else best["val_frame_accuracy"],
    )
    if test is not None and best is not None:
        best_model, _, _ = read_model_checkpoint(out / BEST_CHECKPOINT, check_finite)
        result = evaluate(best_model, test, num_classes, cfg.batch_size)
        metrics.test = EvalReport(
            split="test",
            model=cfg.model,
            provenance=cfg.provenance,
            n_frames=result.n_frames,
            loss=result.loss,
            frame_accuracy=result.frame_accuracy,
            confusion=result.confusion.tolist(),
        )
    (out / "run.json").write_text(metrics.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return metrics


def _header(cfg: TrainConfig, epoch: int, best: Optional[dict[str, Any]]) -> dict[str, Any]:
    return {
        "provenance": cfg.provenance.value,
        "epoch": epoch,
        "batch_size": cfg.batch_size,
        "seed": cfg.seed,
        "best": best,
    }


def _resume(cfg: TrainConfig, model, optimizer: RMSProp, input_dim: int) -> dict[str, Any]:
    arrays, header = load_checkpoint(cfg.resume_from)
    if "history" not in header:
        raise CheckpointError(f"{cfg.resume_from} is not a resumable (last) checkpoint")
    if header.get("model") != cfg.model.value or header.get("input_dim") != input_dim:
        raise CheckpointError(
            f"checkpoint holds {header.get('model')} with input width {header.get('input_dim')}, "
            f"config asks for {cfg.model.value} with {input_dim}"
        )
    if header.get("network") != cfg.network.model_dump(mode="json"):
        raise CheckpointError("checkpoint network shape differs from the config")
    network, accumulators, dropout_state = split_checkpoint_arrays(arrays)
    load_network_arrays(model, network)
    optimizer.restore(accumulators, int(header["optimizer_steps"]))
    if dropout_state is not None:
        model.dropout_generator.set_state(torch.from_numpy(dropout_state.astype(np.uint8)))
    return header
