"""Model checkpoints: parameter arrays plus the header needed to rebuild the network."""

from pathlib import Path
from typing import Any, Optional

import numpy as np
import torch

from qlstm_multimic.models.config import ModelKind, NetworkConfig
from qlstm_multimic.nn.recurrent import SequenceClassifier, build_model, load_network_arrays, network_arrays
from qlstm_multimic.utils.error_handling import CheckpointError, ShapeError
from qlstm_multimic.utils.serialization import load_checkpoint, save_checkpoint

OPTIMIZER_PREFIX = "rmsprop."
DROPOUT_RNG_KEY = "rng.dropout"


def write_model_checkpoint(
    path: Path,
    model: SequenceClassifier,
    header: dict[str, Any],
    optimizer_arrays: Optional[dict[str, np.ndarray]] = None,
) -> Path:
    arrays = network_arrays(model)
    if optimizer_arrays:
        arrays.update({OPTIMIZER_PREFIX + name: acc for name, acc in optimizer_arrays.items()})
    arrays[DROPOUT_RNG_KEY] = model.dropout_generator.get_state().numpy().copy()
    state = {
        "model": model.kind.value,
        "network": model.cfg.model_dump(mode="json"),
        "input_dim": model.input_dim,
        **header,
    }
    return save_checkpoint(path, arrays, state)


def split_checkpoint_arrays(
    arrays: dict[str, np.ndarray],
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray], Optional[np.ndarray]]:
    """Separate network, optimizer and RNG arrays of a checkpoint."""
    network, optimizer = {}, {}
    for name, value in arrays.items():
        if name.startswith(OPTIMIZER_PREFIX):
            optimizer[name[len(OPTIMIZER_PREFIX) :]] = value
        elif name != DROPOUT_RNG_KEY:
            network[name] = value
    return network, optimizer, arrays.get(DROPOUT_RNG_KEY)


def read_model_checkpoint(
    path: Path, check_finite: bool = False
) -> tuple[SequenceClassifier, dict[str, Any], dict[str, np.ndarray]]:
    """Rebuild the network stored at `path`.

    Returns:
        (model with loaded parameters, header, optimizer accumulators)

    Raises:
        CheckpointError: If the file is not a compatible checkpoint
    """
    arrays, header = load_checkpoint(path)
    try:
        kind = ModelKind(header["model"])
        cfg = NetworkConfig.model_validate(header["network"])
        model = build_model(kind, cfg, int(header["input_dim"]), check_finite=check_finite)
        network, optimizer, dropout_state = split_checkpoint_arrays(arrays)
        load_network_arrays(model, network)
    except (KeyError, ValueError, ShapeError) as e:
        raise CheckpointError(f"incompatible checkpoint {path}: {e}") from e
    if dropout_state is not None:
        model.dropout_generator.set_state(torch.from_numpy(np.ascontiguousarray(dropout_state, dtype=np.uint8)))
    return model, header, optimizer
