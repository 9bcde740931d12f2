import configparser
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv
from loguru import logger
from pydantic import ValidationError

from models.config_models import RunConfig
from utils.error_handler import UsageError

SECTIONS = ("rotor", "wavepacket", "grid", "ensemble", "otoc", "output")


def load_environment() -> None:
    """Load .env (if present) into the process environment"""
    load_dotenv()


def env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={value!r}, using {default}")
        return default


def read_config_file(path: Union[str, Path]) -> Dict[str, Dict[str, str]]:
    """Parse an INI run configuration into {section: {key: raw value}}"""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys such as K are case-sensitive
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as e:
        raise UsageError(f"cannot read config file {path}: {e}", path=str(path))

    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise UsageError(f"unknown config sections {unknown}; allowed: {list(SECTIONS)}", path=str(path))
    return {section: dict(parser.items(section)) for section in parser.sections()}


def _merge(base: Dict[str, Dict[str, Any]], overlay: Dict[str, Dict[str, Any]]) -> Dict[str, Dict[str, Any]]:
    merged = {section: dict(values) for section, values in base.items()}
    for section, values in overlay.items():
        merged.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})
    return merged


def build_run_config(config_path: Optional[Union[str, Path]] = None,
                     overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> RunConfig:
    """Defaults < config file < command-line overrides; unknown keys are rejected"""
    layers: Dict[str, Dict[str, Any]] = {}
    if config_path:
        layers = read_config_file(config_path)
        logger.debug(f"Loaded config file {config_path}")
    layers = _merge(layers, overrides or {})
    try:
        return RunConfig(**layers)
    except ValidationError as e:
        raise UsageError(f"invalid configuration: {e}")
