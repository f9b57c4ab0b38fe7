"""
Configuration loading for the CLI.

RootConfig comes from a JSON document (every block and field optional); process
settings such as the log level come from SPINSIM_* environment variables or a
.env file and can always be overridden by flags.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from spin_types.errors import ConfigError
from spin_types.types import RootConfig

logger = logging.getLogger(__name__)


class CliSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SPINSIM_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    out_dir: Path = Path("results")


def _format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<document>"
        lines.append(f"{path}: {item['msg']}")
    return "\n".join(lines)


def parse_config(text: Union[str, bytes]) -> RootConfig:
    try:
        return RootConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e


def load_config(path: Optional[Union[str, Path]]) -> RootConfig:
    """Read a UTF-8 JSON RootConfig; no path means all defaults"""
    if path is None:
        return RootConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"{path}: cannot read config: {e}") from e
    config = parse_config(text)
    logger.info(f"Loaded config from {path}")
    return config


def apply_overrides(config: RootConfig, overrides: Dict[str, Any]) -> RootConfig:
    """Return a re-validated copy with dotted keys ("sweep.base_seed") replaced"""
    data = config.model_dump()
    for dotted, value in overrides.items():
        if value is None:
            continue
        block, _, key = dotted.partition(".")
        data[block][key] = value
    try:
        return RootConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e
