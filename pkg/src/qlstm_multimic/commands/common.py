"""Config file loading shared by the subcommands."""

import json
from pathlib import Path
from typing import Any, Optional, TypeVar

from pydantic import BaseModel, ValidationError

from qlstm_multimic.utils.error_handling import ConfigValidationError, translate_validation_error

ConfigT = TypeVar("ConfigT", bound=BaseModel)


def load_config(
    path: Optional[Path],
    model: type[ConfigT],
    overrides: Optional[dict[str, Any]] = None,
) -> ConfigT:
    """Parse a JSON config file into `model`, then apply CLI overrides.

    Overrides whose value is None are ignored. A missing path means "all
    defaults", which only works for models without required fields.

    Raises:
        ConfigValidationError: If the file is unreadable, not JSON, or fails validation
    """
    data: dict[str, Any] = {}
    source = model.__name__
    if path is not None:
        path = Path(path)
        source = str(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigValidationError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigValidationError(f"{path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigValidationError(f"{path} must hold a JSON object")

    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise translate_validation_error(e, source) from e


def canonical_json(config: BaseModel) -> str:
    """Canonical text of a config; parsing it and dumping again is byte-identical."""
    return config.model_dump_json(indent=2)
