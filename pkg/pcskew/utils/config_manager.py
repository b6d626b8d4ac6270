"""
pcskew configuration manager

A JSON user store under ~/.pcskew/config.json with dot-path access, plus
loaders for per-run configuration files (JSON, YAML or key = value text).
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from ..errors import ConfigError, InputNotFoundError


logger = logging.getLogger(__name__)

THREADS_ENV = 'PC_COUNT_THREADS'

DEFAULT_CONFIG: Dict[str, Any] = {
    "version": "0.1.0",
    "estimate": {
        "alpha": 0.1,
        "test": "both",
        "max_k": None,
        "center": False,
        "standardize": False,
        "orientation": None,
        "delimiter": None,
        "header": False,
    },
    "baselines": {
        "include": True,
        "kn_alpha": 0.05,
        "variance_threshold": 0.8,
    },
    "alpha_sweep": {
        "alphas": [0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        "variance_thresholds": [0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95],
    },
    "simulate": {
        "case": "I",
        "d": 2000,
        "n": 100,
        "m": 3,
        "reps": 100,
        "seed": 20240101,
        "alpha": 0.1,
        "max_k": None,
        "kn_alpha": 0.05,
        "variance_threshold": 0.8,
        "rotate": False,
        "alphas": None,
        "estimators": ["triples", "dagostino", "bai_ng", "kritchman_nadler"],
    },
    "runtime": {
        "threads": None,
    },
}


def pcskew_home() -> Path:
    return Path.home() / '.pcskew'


def config_path() -> Path:
    return pcskew_home() / 'config.json'


def initialize_default_config(home: Optional[Path] = None) -> Dict[str, Any]:
    """Write the default configuration to the user store"""
    home = home or pcskew_home()
    home.mkdir(parents=True, exist_ok=True)
    config_file = home / 'config.json'

    config = copy.deepcopy(DEFAULT_CONFIG)
    with open(config_file, 'w') as f:
        json.dump(config, f, indent=2)

    logger.info(f"Created default configuration: {config_file}")
    return config


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config() -> Dict[str, Any]:
    """Defaults overlaid with the user store, if one exists"""
    config_file = config_path()
    if not config_file.exists():
        return copy.deepcopy(DEFAULT_CONFIG)

    try:
        with open(config_file) as f:
            stored = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Failed to load configuration {config_file}: {e}")
    return _merge(DEFAULT_CONFIG, stored)


def save_config(config: Dict[str, Any]) -> bool:
    config_file = config_path()
    try:
        config_file.parent.mkdir(parents=True, exist_ok=True)
        with open(config_file, 'w') as f:
            json.dump(config, f, indent=2)
        return True
    except OSError as e:
        logger.error(f"Failed to save configuration: {e}")
        return False


def get_config_value(key: str, default: Any = None) -> Any:
    """Get a configuration value by dot-separated key"""
    value: Any = load_config()
    try:
        for k in key.split('.'):
            value = value[k]
        return value
    except (KeyError, TypeError):
        return default


def set_config_value(key: str, value: Any) -> bool:
    """Set a configuration value by dot-separated key"""
    config = load_config()
    keys = key.split('.')
    target = config

    for k in keys[:-1]:
        if not isinstance(target.get(k), dict):
            target[k] = {}
        target = target[k]

    target[keys[-1]] = value
    return save_config(config)


def parse_value(raw: str) -> Any:
    """Interpret a command-line or key = value string as JSON where possible"""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _parse_key_value(text: str, source: Path) -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'", line=lineno)
        key, raw = (part.strip() for part in line.split('=', 1))
        result[key] = parse_value(raw)
    return result


def load_run_config(path) -> Dict[str, Any]:
    """Load a per-run configuration file: JSON, YAML or key = value lines"""
    path = Path(path)
    if not path.exists():
        raise InputNotFoundError(f"Configuration file not found: {path}", path=str(path))

    text = path.read_text(encoding='utf-8')
    if path.suffix == '.json':
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {path}: {e}")
    elif path.suffix in ('.yaml', '.yml'):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {path}: {e}")
    else:
        data = _parse_key_value(text, path)

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Configuration file {path} must contain a mapping")
    return data


def _belongs_elsewhere(key: str, section: str) -> bool:
    """True for section names and for keys only other sections define"""
    if isinstance(DEFAULT_CONFIG.get(key), dict):
        return True
    if key in DEFAULT_CONFIG.get(section, {}):
        return False
    return any(key in values for name, values in DEFAULT_CONFIG.items()
               if isinstance(values, dict) and name != section)


def effective_settings(section: str, overrides: Optional[Dict[str, Any]] = None,
                       config_file=None) -> Dict[str, Any]:
    """
    Settings for one command section. Precedence, lowest first: defaults,
    user store, the `--config` file, then explicit (non-None) overrides.
    A config file may hold the section's keys at top level or under the
    section name.
    """
    stored = load_config()
    settings = copy.deepcopy(stored.get(section, {}))
    if config_file is not None:
        file_values = load_run_config(config_file)
        if isinstance(file_values.get(section), dict):
            file_values = file_values[section]
        else:
            file_values = {k: v for k, v in file_values.items()
                           if not _belongs_elsewhere(k, section)}
        settings = _merge(settings, file_values)
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key] = value
    return settings


def resolve_threads(configured: Optional[int] = None) -> int:
    """Worker thread cap: PC_COUNT_THREADS, then configuration, then min(8, cpus)"""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
        if threads < 1:
            raise ConfigError(f"{THREADS_ENV} must be at least 1, got {threads}")
        return threads
    if configured:
        return max(1, int(configured))
    return min(8, os.cpu_count() or 1)
