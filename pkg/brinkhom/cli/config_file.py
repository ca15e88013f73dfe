import logging
import tomllib
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from brinkhom.core.exceptions import ConfigurationError
from brinkhom.schemas.config import RunConfig

logger = logging.getLogger(__name__)


def merge(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Recursive merge; override values win, nested sections are merged key by key."""
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def read_toml(path: str | Path) -> dict[str, Any]:
    source = Path(path)
    if not source.is_file():
        raise ConfigurationError(f"Config file not found: {source}")
    try:
        with source.open("rb") as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Cannot parse config file {source}: {e}") from None


def describe_validation_error(exc: ValidationError) -> str:
    errors = [f"{'.'.join(str(loc) for loc in error['loc']) or 'config'}: {error['msg']}" for error in exc.errors()]
    return "Invalid run configuration: " + "; ".join(errors)


def load_run_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Config file (optional) first, then flag overrides, then validation."""
    data = read_toml(path) if path is not None else {}
    data = merge(data, overrides or {})
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(describe_validation_error(e)) from None
    logger.debug(f"Resolved run config from {path or 'defaults'}")
    return config
