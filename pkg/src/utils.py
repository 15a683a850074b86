"""Configuration, logging, and input fingerprint utilities."""

import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Any

import xxhash
import yaml

from src.errors import ConfigError

_LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
FALLBACK_CONFIG = "config/settings.example.yaml"


def load_config(config_path: str = "config/settings.yaml") -> dict[str, Any]:
    """Load configuration from a YAML file.

    Falls back to the shipped example settings when the file is missing.

    Raises:
        FileNotFoundError: If neither file exists.
        ConfigError: If the YAML cannot be parsed.
    """
    path = Path(config_path)
    if not path.exists():
        path = Path(FALLBACK_CONFIG)
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found at: {Path(config_path).absolute()}")

    with open(path, 'r', encoding='utf-8') as f:
        raw_content = f.read()

    try:
        config = yaml.safe_load(raw_content) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Error parsing YAML: {e}") from e

    for section in ("app", "engine", "output"):
        config.setdefault(section, {})
    return config


def setup_logger(config: dict[str, Any]) -> logging.Logger:
    """Configure the application logger with console and file handlers.

    The console handler writes to stderr so reports on stdout stay clean.
    """
    app_cfg = config.get('app', {})
    level_name = app_cfg.get('log_level', 'INFO')
    log_dir = app_cfg.get('log_dir', 'logs')

    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    logger = logging.getLogger("PlumbCalc")
    logger.setLevel(getattr(logging, level_name.upper(), logging.INFO))
    logger.handlers = []

    formatter = logging.Formatter(_LOG_FORMAT)

    c_handler = logging.StreamHandler(sys.stderr)
    c_handler.setFormatter(formatter)
    logger.addHandler(c_handler)

    date_str = datetime.now().strftime("%Y-%m-%d")
    log_file = os.path.join(log_dir, f"{date_str}_session.log")
    f_handler = logging.FileHandler(log_file, encoding='utf-8')
    f_handler.setFormatter(formatter)
    logger.addHandler(f_handler)

    return logger


def fingerprint(text: str) -> str:
    """xxHash64 hex digest of an input description."""
    return xxhash.xxh64(text.encode("utf-8")).hexdigest()


def config_digest(config: dict[str, Any]) -> str:
    """Fingerprint of the engine section, stable under key order."""
    return fingerprint(yaml.safe_dump(config.get("engine", {}), sort_keys=True))
