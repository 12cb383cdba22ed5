"""
Shared builders for the jetsym tests.
"""

import os

import pytest

from jetsym.jets import JetContext
from jetsym.kernel import FuncSym

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long oracle grids, deselect with -m 'not slow'")


@pytest.fixture
def fixture_path():
    """Absolute path of a file under tests/fixtures."""
    def build(name):
        return os.path.join(FIXTURES, name)
    return build


@pytest.fixture
def scalar_ctx():
    return JetContext(1, 1, 2)


@pytest.fixture
def plane_ctx():
    return JetContext(2, 1, 2)


@pytest.fixture
def XY(scalar_ctx):
    """Formal X(x, y) and Y(x, y) on the scalar jet space."""
    base = (scalar_ctx.x(1), scalar_ctx.y(1))
    return FuncSym('X', (), base), FuncSym('Y', (), base)
