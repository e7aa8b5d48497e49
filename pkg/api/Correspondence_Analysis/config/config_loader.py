import copy
import logging
import os

import yaml

from utils.exceptions import ConfigError

current_dir = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.abspath(os.path.join(current_dir, os.pardir, os.pardir, os.pardir))

CONFIG_YAML_PATH = os.path.join(current_dir, 'settings.yaml')

logger = logging.getLogger(__name__)

CONFIG = {}


def _deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_yaml(path: str) -> dict:
    if not os.path.exists(path):
        logger.critical(f"Error: config file not found at '{path}'.")
        raise ConfigError(f"[Errno 2] No such file or directory: '{path}'")

    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw_config = yaml.safe_load(f) or {}  # Handle empty file case
    except yaml.YAMLError as exc:
        logger.critical(f"Error parsing config file '{path}': {exc}")
        raise ConfigError(f"Invalid YAML in '{path}': {exc}") from exc

    if not isinstance(raw_config, dict):
        raise ConfigError(f"Config file '{path}' must contain a mapping at top level.")
    return raw_config


def load_config(path: str | None = None) -> dict:
    """
    Loads the packaged settings.yaml and, if given, merges a user config file over it.

    Args:
        path (str | None): Optional YAML file whose sections override the defaults.

    Returns:
        dict: The merged configuration dictionary.

    Raises:
        ConfigError: If a config file is missing or cannot be parsed.
    """
    defaults = _read_yaml(CONFIG_YAML_PATH)
    if path is None:
        return defaults

    logger.info(f"Loading user configuration from '{path}'.")
    return _deep_merge(defaults, _read_yaml(path))


try:
    CONFIG.update(load_config())
except ConfigError as e:
    logger.critical(f"Packaged configuration could not be loaded: {e}")
    raise
