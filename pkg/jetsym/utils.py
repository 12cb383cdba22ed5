"""
Utility functions for jetsym: settings, logging and small index helpers.
"""

import copy
import logging
import os
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Any, Dict, Iterator, Tuple

import yaml

DEFAULT_SETTINGS: Dict[str, Any] = {
    'max_terms': 5_000_000,
    'output_format': 'text',
    'log_level': 'WARNING',
    'reduction': {
        'multiplier_degree': 1,
        'derivatives': True,
    },
    'selftest': {
        'prolong_max_n': 3,
        'prolong_max_m': 3,
        'prolong_max_order': 4,
        'prolong_scalar_order': 6,
        'fdb_max_n': 3,
        'fdb_max_m': 3,
        'fdb_max_order': 5,
        'fdb_scalar_order': 7,
        'flatness_max_n': 3,
        'coset_max_size': 7,
    },
    'json': {
        'schema_version': 1,
    },
}


def config_path(filename: str) -> str:
    """
    Absolute path of a file shipped in the package config directory.

    Args:
        filename: Name of the file under jetsym/config

    Returns:
        Absolute path
    """
    return os.path.join(os.path.dirname(__file__), 'config', filename)


def load_yaml(filename: str) -> Dict[str, Any]:
    """
    Load a YAML document from the package config directory.

    Args:
        filename: Name of the file under jetsym/config

    Returns:
        Parsed document

    Raises:
        FileNotFoundError: If the file is not installed
    """
    with open(config_path(filename), 'r', encoding='utf-8') as f:
        return yaml.safe_load(f) or {}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


@lru_cache(maxsize=1)
def load_settings() -> Dict[str, Any]:
    """
    Load runtime settings from config/defaults.yaml and the environment.

    Falls back to the built-in defaults when the YAML file is missing.
    JETSYM_MAX_TERMS and JETSYM_LOG_LEVEL take precedence over the file.

    Returns:
        Settings dictionary
    """
    try:
        settings = _merge(DEFAULT_SETTINGS, load_yaml('defaults.yaml'))
    except FileNotFoundError:
        settings = copy.deepcopy(DEFAULT_SETTINGS)

    env_terms = os.environ.get('JETSYM_MAX_TERMS')
    if env_terms:
        try:
            settings['max_terms'] = int(float(env_terms))
        except ValueError:
            logging.getLogger(__name__).warning(
                "ignoring non-numeric JETSYM_MAX_TERMS=%r", env_terms)
    env_level = os.environ.get('JETSYM_LOG_LEVEL')
    if env_level:
        settings['log_level'] = env_level.upper()
    return settings


def max_terms() -> int:
    """Term cap applied to every polynomial the kernel builds."""
    return int(load_settings()['max_terms'])


def configure_logging(level: str = 'WARNING', use_rich: bool = True) -> None:
    """
    Install a handler on the jetsym logger.

    Uses rich.logging.RichHandler when rich is importable and a plain
    StreamHandler otherwise.

    Args:
        level: Logging level name
        use_rich: Prefer the rich handler
    """
    handler: logging.Handler
    if use_rich:
        try:
            from rich.logging import RichHandler
            handler = RichHandler(show_path=False, markup=False)
            handler.setFormatter(logging.Formatter('%(message)s'))
        except ImportError:
            use_rich = False
    if not use_rich:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))

    logger = logging.getLogger('jetsym')
    for existing in list(logger.handlers):
        logger.removeHandler(existing)
    logger.addHandler(handler)
    logger.setLevel(getattr(logging, str(level).upper(), logging.WARNING))


def multi_indices(n: int, length: int) -> Iterator[Tuple[int, ...]]:
    """
    Sorted multi-indices of a given length over the directions 1..n.

    Args:
        n: Number of directions
        length: Index length

    Returns:
        Iterator of non-decreasing tuples
    """
    return combinations_with_replacement(range(1, n + 1), length)


def canonical_pair(a: int, b: int) -> Tuple[int, int]:
    """Order a symmetric index pair."""
    return (a, b) if a <= b else (b, a)


def delta(a: int, b: int) -> int:
    """Kronecker symbol."""
    return 1 if a == b else 0
