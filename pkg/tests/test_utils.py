"""
Tests for settings and index helpers.
"""

import logging

from jetsym import utils


def test_load_settings_defaults():
    """Test the shipped defaults."""
    settings = utils.load_settings()
    assert settings['output_format'] == 'text'
    assert settings['selftest']['coset_max_size'] == 7
    assert settings['json']['schema_version'] == 1


def test_environment_overrides(monkeypatch):
    """Test JETSYM_MAX_TERMS and JETSYM_LOG_LEVEL."""
    monkeypatch.setenv('JETSYM_MAX_TERMS', '1e4')
    monkeypatch.setenv('JETSYM_LOG_LEVEL', 'debug')
    utils.load_settings.cache_clear()
    try:
        assert utils.max_terms() == 10000
        assert utils.load_settings()['log_level'] == 'DEBUG'
    finally:
        monkeypatch.delenv('JETSYM_MAX_TERMS')
        monkeypatch.delenv('JETSYM_LOG_LEVEL')
        utils.load_settings.cache_clear()


def test_missing_defaults_file(monkeypatch):
    """Test the fallback to built-in defaults."""
    def missing(filename):
        raise FileNotFoundError(filename)

    monkeypatch.setattr(utils, 'load_yaml', missing)
    utils.load_settings.cache_clear()
    try:
        assert utils.load_settings()['max_terms'] == utils.DEFAULT_SETTINGS['max_terms']
    finally:
        monkeypatch.undo()
        utils.load_settings.cache_clear()


def test_configure_logging_plain():
    """Test the plain handler and level."""
    utils.configure_logging('info', use_rich=False)
    logger = logging.getLogger('jetsym')
    assert logger.level == logging.INFO
    assert len(logger.handlers) == 1


def test_index_helpers():
    """Test multi-indices, pairs and the Kronecker symbol."""
    assert list(utils.multi_indices(2, 2)) == [(1, 1), (1, 2), (2, 2)]
    assert utils.canonical_pair(3, 1) == (1, 3)
    assert utils.delta(2, 2) == 1
    assert utils.delta(1, 2) == 0
