"""Named-array containers on disk.

Arrays go into a numpy .npz archive (little-endian npy records with shape
headers). An optional JSON header is stored as a uint8 array under
`__header__`; checkpoints use it for the format tag and run state.
"""

import json
import logging
import zipfile
from pathlib import Path
from typing import Any, Optional

import numpy as np

from qlstm_multimic.utils.error_handling import CheckpointError, DataError

logger = logging.getLogger(__name__)

HEADER_KEY = "__header__"
CHECKPOINT_FORMAT = "qlstm-multimic/checkpoint/v1"


def _little_endian(value: np.ndarray) -> np.ndarray:
    value = np.asarray(value)
    if value.dtype.byteorder == ">":
        value = value.astype(value.dtype.newbyteorder("<"))
    return value


def save_named_arrays(
    path: Path, arrays: dict[str, np.ndarray], header: Optional[dict[str, Any]] = None
) -> Path:
    """Write arrays (in dict order) plus an optional JSON header to `path`.

    Raises:
        DataError: If the parent directory is missing or a key is reserved
    """
    path = Path(path)
    if not path.parent.is_dir():
        raise DataError(f"output directory does not exist: {path.parent}")
    if HEADER_KEY in arrays:
        raise DataError(f"array name {HEADER_KEY!r} is reserved")

    payload = {name: _little_endian(value) for name, value in arrays.items()}
    if header is not None:
        encoded = json.dumps(header, sort_keys=True).encode("utf-8")
        payload[HEADER_KEY] = np.frombuffer(encoded, dtype=np.uint8)
    with path.open("wb") as handle:
        np.savez(handle, **payload)
    return path


def load_named_arrays(path: Path) -> tuple[dict[str, np.ndarray], Optional[dict[str, Any]]]:
    """Read arrays and the JSON header (None when absent) back from `path`.

    Raises:
        DataError: If the file is missing or not a readable archive
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such array container: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise DataError(f"corrupt array container {path}: {e}") from e

    header = None
    if HEADER_KEY in arrays:
        raw = arrays.pop(HEADER_KEY)
        try:
            header = json.loads(raw.tobytes().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise DataError(f"corrupt header in {path}: {e}") from e
    return arrays, header


def save_checkpoint(path: Path, arrays: dict[str, np.ndarray], state: dict[str, Any]) -> Path:
    """Write a checkpoint: parameter arrays plus a tagged header."""
    header = {"format": CHECKPOINT_FORMAT, **state}
    logger.debug("writing checkpoint %s (%d arrays)", path, len(arrays))
    return save_named_arrays(path, arrays, header)


def load_checkpoint(path: Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Read a checkpoint and verify its format tag.

    Raises:
        CheckpointError: If the file is unreadable or carries another format tag
    """
    try:
        arrays, header = load_named_arrays(path)
    except DataError as e:
        raise CheckpointError(str(e)) from e
    if header is None or header.get("format") != CHECKPOINT_FORMAT:
        found = None if header is None else header.get("format")
        raise CheckpointError(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint (format={found!r})")
    return arrays, header
