import json
import os

import pytest

from corank.errors import EmptyInputError
from corank.matrix import read_matrix
from corank.records import (
    CSV_COLUMNS,
    CampaignSummary,
    Expectation,
    RunManifest,
    TrialRecord,
    rate_summary,
    read_records_csv,
    write_failure_bundle,
    write_records_csv,
)


def _record(index, kind='trial', **values):
    return TrialRecord(experiment='rank-agreement', kind=kind, trial_index=index, seed=100 + index, **values)


def test_flag_joins_violations():
    record = _record(0)
    record.flag('witness-value')
    record.flag('exact-above-combinatorial')

    assert record.violation == 'witness-value;exact-above-combinatorial'


def test_to_row_formats_cells():
    row = _record(3, n=10, p=0.25, full_rank=True, singular=False).to_row()

    assert list(row) == list(CSV_COLUMNS)
    assert row['n'] == '10'
    assert row['p'] == '0.25'
    assert row['full_rank'] == 'true'
    assert row['singular'] == 'false'
    assert row['m'] == ''


def test_to_dict_leaves_out_artifacts(path_matrix):
    record = _record(0, artifacts={'matrix': path_matrix})

    assert 'artifacts' not in record.to_dict()
    assert record.to_dict()['wall_time'] == 0.0


def test_records_csv_is_sorted(tmp_path):
    path = str(tmp_path / 'records.csv')
    records = [_record(2), _record(0, kind='redraw'), _record(1), _record(0, m=2), _record(0, m=1)]

    write_records_csv(records, path)
    rows = read_records_csv(path)

    assert open(path, encoding='utf-8').readline().strip() == ','.join(CSV_COLUMNS)
    assert [(row['kind'], row['trial_index'], row['m']) for row in rows] == [
        ('redraw', '0', ''),
        ('trial', '0', '1'),
        ('trial', '0', '2'),
        ('trial', '1', ''),
        ('trial', '2', ''),
    ]


def test_records_csv_names_its_manifest(tmp_path):
    path = str(tmp_path / 'records.csv')

    write_records_csv([_record(1), _record(0)], path, manifest='rank-agreement-7.manifest.json')
    rows = read_records_csv(path)

    assert list(rows[0]) == list(CSV_COLUMNS) + ['manifest']
    assert {row['manifest'] for row in rows} == {'rank-agreement-7.manifest.json'}


def test_records_csv_leaves_out_wall_time(tmp_path):
    first, second = str(tmp_path / 'first.csv'), str(tmp_path / 'second.csv')
    write_records_csv([_record(0, wall_time=1.5)], first)
    write_records_csv([_record(0, wall_time=9.0)], second)

    assert open(first, encoding='utf-8').read() == open(second, encoding='utf-8').read()


def test_rate_summary():
    summary = rate_summary(50, 100)

    assert summary['rate'] == 0.5
    assert summary['std_error'] == pytest.approx(0.05)
    assert summary['ci_low'] == pytest.approx(1 - summary['ci_high'])
    assert summary['ci_low'] < 0.5 < summary['ci_high']
    assert rate_summary(0, 10)['ci_low'] == pytest.approx(0.0, abs=1e-12)
    assert rate_summary(10, 10)['ci_high'] == pytest.approx(1.0)


def test_rate_summary_zero_trials():
    with pytest.raises(EmptyInputError):
        rate_summary(0, 0)


def test_expectations():
    assert Expectation('agreement', 0.99, 0.98).met
    assert not Expectation('agreement', 0.9, 0.98).met
    assert Expectation('gap', 0.05, 0.1, '<=').met
    assert Expectation('gap', 0.05, 0.1, '<=').to_dict()['met'] is True


def test_campaign_summary():
    summary = CampaignSummary(
        'rank-agreement',
        10,
        metrics={'agreement': rate_summary(9, 10)},
        expectations=[Expectation('agreement', 0.9, 0.98), Expectation('constancy', 1.0, 0.99)],
    )

    assert [expectation.name for expectation in summary.missed] == ['agreement']
    assert summary.to_dict()['expectations'][1]['met'] is True
    assert summary.to_dict()['violations'] == 0


def test_run_manifest(tmp_path):
    path = str(tmp_path / 'run.manifest.json')
    manifest = RunManifest('run rank-agreement', {'experiment': 'rank-agreement', 'n': 10}, 7, '2026-01-01T00:00:00')

    manifest.write(path)
    document = json.load(open(path, encoding='utf-8'))

    assert document['parameters'] == {'experiment': 'rank-agreement', 'n': 10}
    assert document['master_seed'] == 7
    assert set(document['versions']) == {'corank', 'numpy', 'networkx', 'PyYAML', 'python'}


def test_write_failure_bundle(tmp_path, path_matrix):
    record = _record(4, violation='witness-value', artifacts={'matrix': path_matrix})

    bundle = write_failure_bundle(str(tmp_path), record)

    assert bundle == os.path.join(str(tmp_path), 'trial-4')
    assert read_matrix(os.path.join(bundle, 'matrix.txt')) == path_matrix
    document = json.load(open(os.path.join(bundle, 'bundle.json'), encoding='utf-8'))
    assert document['files'] == ['matrix.txt']
    assert document['record']['violation'] == 'witness-value'
    assert document['manifest'] is None

    write_failure_bundle(str(tmp_path), record, manifest='rank-agreement-7.manifest.json')
    document = json.load(open(os.path.join(bundle, 'bundle.json'), encoding='utf-8'))
    assert document['manifest'] == 'rank-agreement-7.manifest.json'
