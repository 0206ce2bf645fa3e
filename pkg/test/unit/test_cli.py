import logging
import os
from unittest.mock import patch

import pytest

from corank.cli import EXIT_ERROR, EXIT_OK, EXIT_VIOLATION, CorankCli, main
from corank.field import PrimeField
from corank.matrix import read_matrix
from corank.rank import exact_rank


def _run(tmp_path, *argv):
    return CorankCli(list(argv) + ['-o', str(tmp_path)]).run()


def test_rank_reports_three_values(tmp_path, matrix_file, capsys):
    assert _run(tmp_path, 'rank', matrix_file) == EXIT_OK

    lines = capsys.readouterr().out.splitlines()
    assert lines == ['exact_rank: 2', 'combinatorial_rank: 2', 'structural_rank: 2']


def test_rank_with_witness(tmp_path, matrix_file, capsys):
    assert _run(tmp_path, 'rank', matrix_file, '--witness') == EXIT_OK

    lines = capsys.readouterr().out.splitlines()
    assert lines[-2:] == ['witness: 0 2', 'witness_neighborhood: 1']


def test_rank_of_zero_matrix(tmp_path, capsys):
    path = tmp_path / 'zero.txt'
    path.write_text(f'3 {PrimeField().q} prime-field\n', encoding='utf-8')

    assert _run(tmp_path, 'rank', str(path)) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ['exact_rank: 0', 'combinatorial_rank: 0', 'structural_rank: 0']


def test_rank_mode(tmp_path, capsys):
    path = tmp_path / 'k32.txt'
    path.write_text('5 7 prime-field\n' + ''.join(f'{i} {j} 1\n' for i in range(3) for j in (3, 4)), encoding='utf-8')

    assert _run(tmp_path, 'rank', str(path), '--s', '4', '--mode', 'exact') == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1] == 'structural_rank: 4'

    assert _run(tmp_path, 'rank', str(path), '--s', '4', '--mode', 'structural') == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1].startswith('structural_rank: failed')


def test_rank_exact_mode_is_capped(tmp_path):
    path = tmp_path / 'large.txt'
    path.write_text('23 7 prime-field\n', encoding='utf-8')

    assert _run(tmp_path, 'rank', str(path), '--mode', 'exact') == EXIT_ERROR
    assert _run(tmp_path, 'rank', str(path), '--mode', 'auto') == EXIT_OK


def test_rank_rejects_asymmetric_file(tmp_path):
    path = tmp_path / 'asymmetric.txt'
    path.write_text('2 8388593 prime-field\n0 1 5\n1 0 6\n', encoding='utf-8')

    assert _run(tmp_path, 'rank', str(path)) == EXIT_ERROR


def test_verbose_logs_debug(tmp_path, matrix_file):
    assert _run(tmp_path, 'rank', matrix_file, '-v') == EXIT_OK
    assert logging.getLogger('corank').level == logging.DEBUG

    assert _run(tmp_path, 'rank', matrix_file) == EXIT_OK
    assert logging.getLogger('corank').level == logging.INFO


def test_rank_missing_file(tmp_path):
    assert _run(tmp_path, 'rank', str(tmp_path / 'missing.txt')) == EXIT_ERROR


def test_check_prints_every_predicate(tmp_path, matrix_file, capsys):
    assert _run(tmp_path, 'check', matrix_file, '--p', '0.5') == EXIT_OK

    names = [line.split(':')[0] for line in capsys.readouterr().out.splitlines()]
    assert names == ['well_separated', 'locally_sparse', 'small_set_expander', 'good']


def test_sample_is_reproducible(tmp_path):
    first, second = tmp_path / 'first', tmp_path / 'second'
    assert _run(first, 'sample', '--n', '20', '--p', '0.2', '--seed', '4') == EXIT_OK
    assert _run(second, 'sample', '--n', '20', '--p', '0.2', '--seed', '4') == EXIT_OK

    for name in ('mask', 'weights', 'matrix', 'graph'):
        assert (first / f'{name}.txt').read_text(encoding='utf-8') == (second / f'{name}.txt').read_text(
            encoding='utf-8'
        )


def test_sample_then_rank(tmp_path, capsys):
    assert _run(tmp_path, 'sample', '--n', '15', '--c', '2', '--seed', '8') == EXIT_OK
    matrix_path = os.path.join(str(tmp_path), 'matrix.txt')
    expected = exact_rank(read_matrix(matrix_path))

    assert _run(tmp_path, 'rank', matrix_path) == EXIT_OK
    assert f'exact_rank: {expected}' in capsys.readouterr().out.splitlines()


@pytest.mark.parametrize(
    'argv',
    [
        ['sample', '--n', '10', '--p', '0', '--seed', '1'],
        ['sample', '--n', '10', '--seed', '1'],
        ['sample', '--n', '10', '--p', '0.2', '--c', '1', '--seed', '1'],
        ['sample', '--p', '0.2', '--seed', '1'],
    ],
)
def test_sample_rejects_parameters(tmp_path, argv):
    assert _run(tmp_path, *argv) == EXIT_ERROR


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('CORANK_SEED', '4')
    assert _run(tmp_path / 'env', 'sample', '--n', '10', '--p', '0.3') == EXIT_OK
    assert _run(tmp_path / 'flag', 'sample', '--n', '10', '--p', '0.3', '--seed', '4') == EXIT_OK

    assert (tmp_path / 'env' / 'matrix.txt').read_text(encoding='utf-8') == (
        tmp_path / 'flag' / 'matrix.txt'
    ).read_text(encoding='utf-8')


def test_missing_seed(tmp_path, monkeypatch):
    monkeypatch.delenv('CORANK_SEED', raising=False)

    assert _run(tmp_path, 'run', 'rank-agreement', '--n', '10', '--p', '0.3', '--trials', '2') == EXIT_ERROR


def test_run_writes_outputs(tmp_path):
    argv = ['run', 'rank-agreement', '--n', '10', '--p', '0.3', '--trials', '3', '--seed', '6', '--workers', '2']

    assert _run(tmp_path, *argv) == EXIT_OK
    assert os.path.isfile(os.path.join(str(tmp_path), 'rank-agreement-6.csv'))
    assert os.path.isfile(os.path.join(str(tmp_path), 'rank-agreement-6.summary.json'))
    assert os.path.isfile(os.path.join(str(tmp_path), 'logs', 'corank.log'))


def test_run_unknown_experiment(tmp_path):
    assert _run(tmp_path, 'run', 'rank', '--n', '10', '--p', '0.3', '--trials', '3', '--seed', '6') == EXIT_ERROR


def test_run_hypothesis_guard(tmp_path):
    argv = ['run', 'rank-agreement', '--n', '10', '--p', '0.6', '--trials', '1', '--seed', '6']

    assert _run(tmp_path, *argv) == EXIT_ERROR
    assert _run(tmp_path, *argv, '--override-hypotheses', '--redraw-masks', '0') == EXIT_OK


def test_run_with_injected_violation(tmp_path):
    argv = ['run', 'rank-agreement', '--n', '10', '--p', '0.3', '--trials', '2', '--seed', '6']

    with patch('corank.experiments.combinatorial_rank', return_value=0):
        assert _run(tmp_path, *argv) == EXIT_VIOLATION


def test_verify(tmp_path):
    config = tmp_path / 'campaign.yaml'
    config.write_text('experiment: saturation\nn: 8\np: 0.3\ns: 3\ntrials: 3\nseed: 2\n', encoding='utf-8')

    assert _run(tmp_path, 'verify', str(config)) == EXIT_OK
    assert os.path.isfile(os.path.join(str(tmp_path), 'saturation-2.manifest.json'))
    assert _run(tmp_path / 'again', 'verify', os.path.join(str(tmp_path), 'saturation-2.manifest.json')) == EXIT_OK


@pytest.mark.parametrize(
    'text',
    [
        'experiment: saturation\nn: 8\np: 0.3\ntrials: 0\nseed: 2\n',
        'experiment: [saturation\nn: 8\n',
        'experiment: rank\nn: 8\np: 0.3\ntrials: 2\nseed: 2\n',
        'experiment: saturation\nn: 8\np: 0.3\ntrials: 2\nseed: 2\nnested:\n  a: 1\n',
    ],
)
def test_verify_rejects_config(tmp_path, text):
    config = tmp_path / 'campaign.yaml'
    config.write_text(text, encoding='utf-8')

    assert _run(tmp_path, 'verify', str(config)) == EXIT_ERROR


def test_main_exits_with_status(tmp_path, matrix_file):
    with pytest.raises(SystemExit) as error:
        main(['rank', matrix_file, '-o', str(tmp_path)])

    assert error.value.code == EXIT_OK
