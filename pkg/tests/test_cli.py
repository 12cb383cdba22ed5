"""
Tests for the command-line interface.
"""

import json

import pytest

from jetsym.cli import SessionConfig, main, render, run
from jetsym.exceptions import JetsymError


def _json_run(capsys, argv):
    status = main(argv + ['--format', 'json'])
    return status, json.loads(capsys.readouterr().out)


def test_prolong_compare_json(capsys):
    """Test the JSON envelope of a compared prolongation."""
    status, report = _json_run(capsys, ['prolong', '--n', '1', '--m', '1', '--kappa', '3', '--compare'])
    assert status == 0
    assert set(report) == {'schema_version', 'command', 'inputs', 'status', 'results', 'notes', 'timings'}
    assert report['schema_version'] == 1
    assert report['status'] == 'ok'
    (entry,) = report['results']
    assert entry['name'] == 'y[1,1,1]'
    assert entry['match'] is True


def test_prolong_text_marks_match(capsys):
    """Test that text output reports MATCH under each coefficient."""
    assert main(['prolong', '--n', '2', '--m', '1', '--order', '2', '--target', '1,2', '--compare']) == 0
    out = capsys.readouterr().out
    assert 'y[1,2] = ' in out
    assert 'MATCH' in out
    assert 'MISMATCH' not in out


def test_prolong_target_length(capsys):
    """Test that a target of the wrong length is a usage error."""
    assert main(['prolong', '--order', '2', '--target', '1']) == 2


def test_fdb_fifth_order_note(capsys):
    """Test the note on the fifth-order table."""
    status, report = _json_run(capsys, ['fdb', '--order', '5', '--compare'])
    assert status == 0
    assert report['results'][0]['name'] == 'h[1,1,1,1,1]'
    assert any('h5' in note for note in report['notes'])


def test_tangent_files(capsys, fixture_path):
    """Test tangency of the e5 generators read from files."""
    status, report = _json_run(capsys, ['tangent', '--system', fixture_path('e5.sys'),
                                        '--fields', fixture_path('e5.vf')])
    assert status == 0
    assert report['notes'] == ['10/10 tangent']


def test_tangent_failure(capsys, fixture_path, tmp_path):
    """Test that a non-symmetry gives exit status 1 and its defect."""
    fields = tmp_path / 'bad.vf'
    fields.write_text("A = { y: y^2 }\n", encoding='utf-8')
    status, report = _json_run(capsys, ['tangent', '--system', fixture_path('flat.sys'),
                                        '--fields', str(fields)])
    assert status == 1
    assert report['results'][0]['tangent'] is False
    assert report['results'][0]['defects'] == ['-2*y[1]^2']


def test_determine_model(capsys):
    """Test the determining equations of the flat model."""
    status, report = _json_run(capsys, ['determine', '--model', 'flat'])
    assert status == 0
    assert len(report['results']) == 4


def test_brackets_reference(capsys):
    """Test the flat commutator table against the stored one."""
    status, report = _json_run(capsys, ['brackets', '--model', 'flat'])
    assert status == 0
    assert len(report['results']) == 64
    assert 'table matches the reference' in report['notes']


def test_flat2_scalar(capsys, fixture_path):
    """Test the invariants of flat and non-flat scalar equations."""
    _, report = _json_run(capsys, ['flat2', '--system', fixture_path('cubic_flat.sys')])
    assert report['notes'] == ['flat']
    _, report = _json_run(capsys, ['flat2', '--system', fixture_path('nonflat.sys')])
    assert report['notes'] == ['not flat']
    assert report['results'][1] == {'name': 'I2', 'value': '12'}


def test_flat2_generic(capsys):
    """Test the generic run at n = 2."""
    status, report = _json_run(capsys, ['flat2', '--n', '2'])
    assert status == 0
    assert [r['name'] for r in report['results']] == ['family I', 'family II', 'family III', 'family IV']
    assert report['notes'] == ['collected and emitted families agree']


def test_selftest_only(capsys, tmp_path):
    """Test a restricted self-test with a CSV report."""
    path = tmp_path / 'report.csv'
    status, report = _json_run(capsys, ['selftest', '--only', 'cosets', '--quick', '--report', str(path)])
    assert status == 0
    assert [c['name'] for c in report['results']] == ['cosets']
    assert path.read_text(encoding='utf-8').startswith('check,status')


def test_output_file(tmp_path, capsys):
    """Test writing the report to a new directory."""
    target = tmp_path / 'out' / 'fdb.json'
    assert main(['fdb', '--order', '2', '--format', 'json', '--output', str(target)]) == 0
    report = json.loads(target.read_text(encoding='utf-8'))
    assert report['command'] == 'fdb'
    assert capsys.readouterr().out == ''


def test_usage_errors(capsys, fixture_path):
    """Test unknown models, missing files and unreadable inputs."""
    assert main(['tangent', '--model', 'nope']) == 2
    assert main(['tangent', '--system', fixture_path('missing.sys'), '--fields', fixture_path('e5.vf')]) == 2
    assert main(['brackets', '--fields', fixture_path('broken.vf')]) == 2


def test_session_config_validation():
    """Test rejected configurations."""
    with pytest.raises(JetsymError):
        SessionConfig('prolong', order=0)
    with pytest.raises(JetsymError):
        SessionConfig('prolong', output_format='html')
    with pytest.raises(JetsymError):
        SessionConfig('integrate')


def test_run_and_render():
    """Test running a configuration without the argument parser."""
    status, report = run(SessionConfig('fdb', order=2, inputs={'compare': True}))
    assert status == 0
    text = render(report, 'text')
    assert text.splitlines()[0].startswith('h[1,1] = ')
    assert 'MATCH' in text
