"""
Tests for the self-test runner and its reports.
"""

import copy
import json

import pytest

from jetsym.exceptions import JetsymError
from jetsym.utils import load_settings
from jetsym.verify import check_names, generate_report, run_selftest, save_report


@pytest.fixture
def small_settings():
    settings = copy.deepcopy(load_settings())
    settings['selftest']['coset_max_size'] = 5
    return settings


def test_check_names():
    """Test that every check is registered once."""
    names = check_names()
    assert len(names) == len(set(names))
    assert 'prolongation_oracle' in names
    assert 'auxiliary_systems' in names


def test_run_selected_checks(small_settings):
    """Test a run restricted to two fast checks."""
    seen = []
    results = run_selftest(small_settings, only=['cosets', 'transfer'], progress=seen.append)
    assert results['valid']
    assert [c['name'] for c in results['checks']] == ['cosets', 'transfer']
    assert seen == ['cosets', 'transfer']
    assert all(c['status'] == 'pass' for c in results['checks'])
    assert results['errors'] == []


def test_determining_and_generators(small_settings):
    """Test the model checks."""
    results = run_selftest(small_settings, only=['determining_equations', 'generators'])
    assert results['valid'], results['errors']


def test_unknown_check(small_settings):
    """Test that misspelled check names are refused before running."""
    with pytest.raises(JetsymError):
        run_selftest(small_settings, only=['cosets', 'nonsense'])


def _results(valid=True):
    return {
        'valid': valid,
        'checks': [
            {'name': 'cosets', 'status': 'pass', 'detail': '12 shapes agree', 'seconds': 0.01},
            {'name': 'transfer', 'status': 'pass' if valid else 'fail', 'detail': 'x', 'seconds': 0.2},
        ],
        'errors': [] if valid else ['transfer: x'],
        'warnings': ['auxiliary_systems: inconclusive'],
    }


def test_text_report():
    """Test the text report for passing and failing runs."""
    report = generate_report(_results())
    assert 'SELFTEST REPORT' in report
    assert 'Checks passed: 2' in report
    assert '[PASS] cosets' in report
    assert 'auxiliary_systems: inconclusive' in report
    assert report.rstrip('=').rstrip().endswith('All checks passed.')
    failed = generate_report(_results(valid=False))
    assert '[FAIL] transfer' in failed
    assert 'Some checks FAILED.' in failed


def test_json_and_csv_reports():
    """Test the machine readable formats."""
    results = _results()
    assert json.loads(generate_report(results, 'json')) == results
    lines = generate_report(results, 'csv').split('\n')
    assert lines[0] == 'check,status,seconds,detail'
    assert lines[1] == 'cosets,pass,0.01,12 shapes agree'
    assert len(lines) == 3


def test_save_report(tmp_path):
    """Test writing a report to disk."""
    path = tmp_path / 'selftest.csv'
    save_report(_results(), str(path), 'csv')
    assert path.read_text(encoding='utf-8').startswith('check,status')
