"""
pcskew config command - Configuration management
"""

import json
import logging

from ..utils.config_manager import (
    config_path,
    get_config_value,
    initialize_default_config,
    load_config,
    parse_value,
    set_config_value,
)


logger = logging.getLogger(__name__)

_MISSING = object()


def handle(args):
    """Handle the config command"""
    if not args.config_action:
        logger.error("No config action specified")
        return 1

    if args.config_action == 'get':
        return _get_config(args.key)
    elif args.config_action == 'set':
        return _set_config(args.key, args.value)
    elif args.config_action == 'show':
        return _show_config()
    elif args.config_action == 'init':
        initialize_default_config()
        return 0
    else:
        logger.error(f"Unknown config action: {args.config_action}")
        return 1


def _get_config(key):
    """Get configuration value"""
    value = get_config_value(key, _MISSING)
    if value is _MISSING:
        logger.error(f"Configuration key '{key}' not found")
        return 1

    print(f"{key} = {json.dumps(value)}")
    return 0


def _set_config(key, value):
    """Set configuration value"""
    if set_config_value(key, parse_value(value)):
        logger.info(f"Set {key} = {value} in {config_path()}")
        return 0
    else:
        logger.error("Failed to save configuration")
        return 1


def _show_config():
    print(json.dumps(load_config(), indent=2, sort_keys=True))
    return 0
