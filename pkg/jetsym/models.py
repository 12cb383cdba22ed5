"""
Model systems shipped with jetsym.

The systems and their generators live in config/models.yaml in the same
text syntax the CLI reads from files, so every model also exercises the
parser.
"""

import logging
from functools import lru_cache
from typing import Any, Dict, List

from .exceptions import JetsymError
from .jets import PDESystem
from .parser import parse_fields, parse_system
from .prolongation import VectorField
from .symmetry import complete_skeleton
from .utils import load_yaml

logger = logging.getLogger(__name__)


@lru_cache(maxsize=1)
def load_models() -> Dict[str, Dict[str, Any]]:
    """
    Load config/models.yaml.

    Raises:
        JetsymError: If the model file is not installed
    """
    try:
        return load_yaml('models.yaml')
    except FileNotFoundError:
        raise JetsymError("model file config/models.yaml is missing from the installation")


def model_names() -> List[str]:
    return list(load_models())


def _entry(name: str) -> Dict[str, Any]:
    models = load_models()
    if name not in models:
        raise JetsymError(f"unknown model '{name}'; available: {', '.join(models)}")
    return models[name]


def model_system(name: str, complete: bool = True) -> PDESystem:
    """
    The system of a model, completed by cross differentiation unless
    `complete` is False.
    """
    system = parse_system(_entry(name)['system'])
    if complete:
        system = complete_skeleton(system)
        logger.debug("model %s: %d skeleton equations", name, len(system.skeleton))
    return system


def partial_system(name: str) -> PDESystem:
    """The partially given system of a model, before completion."""
    entry = _entry(name)
    if 'partial' not in entry:
        raise JetsymError(f"model '{name}' has no partial system")
    return parse_system(entry['partial'])


def model_fields(name: str) -> List[VectorField]:
    """Known symmetry generators of a model, in the jet space of its system."""
    entry = _entry(name)
    if 'fields' not in entry:
        raise JetsymError(f"model '{name}' has no generators")
    ctx = parse_system(entry['system']).ctx
    return parse_fields(entry['fields'], ctx=ctx)


def field_names(name: str) -> List[str]:
    return [f.name for f in model_fields(name)]
