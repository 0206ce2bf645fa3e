import math
import os
from unittest.mock import patch

import pytest

from corank.config import ExperimentConfig, load_config
from corank.errors import CapacityError
from corank.experiments import (
    ABOVE_KIND,
    BELOW_KIND,
    DIMENSION_KIND,
    GIVEN_KIND,
    ORACLE_KIND,
    REDRAW_KIND,
    TRIAL_KIND,
    ExperimentRunner,
    balanced_coefficients,
    campaign_weights,
    cycle_oracle_singular,
    run_campaign,
    run_coupon_threshold,
    run_dregular_singularity,
    run_linear_lo,
    run_rank_agreement,
    zero_row_probability,
)
from corank.graph import Graph


def _config(experiment='rank-agreement', **values):
    mapping = {'experiment': experiment, 'n': 12, 'trials': 4, 'p': 0.3, 'seed': 11, 'redraw_masks': 0}
    mapping.update(values)
    return ExperimentConfig.from_mapping({key: value for key, value in mapping.items() if value is not None})


def _rows(result):
    return [record.to_row() for record in result.records]


def test_rank_agreement_small():
    result = run_campaign(_config(redraw_masks=2, weight_redraws=3), workers=2)

    trials = [record for record in result.records if record.kind == TRIAL_KIND]
    redraws = [record for record in result.records if record.kind == REDRAW_KIND]
    assert len(trials) == 4
    assert len(redraws) == 2
    assert result.violations == 0
    assert all(record.brute_force_rank == record.combinatorial_rank for record in trials)
    assert all(record.exact_rank <= record.combinatorial_rank for record in result.records)
    assert result.summary.trials == 4
    assert 'weight_constancy' in result.summary.metrics


def test_records_do_not_depend_on_worker_count():
    config = _config(redraw_masks=2)

    assert _rows(run_campaign(config, workers=1)) == _rows(run_campaign(config, workers=4))


def test_seed_changes_records():
    assert _rows(run_campaign(_config(seed=1))) != _rows(run_campaign(_config(seed=2)))


def test_random_weight_model():
    result = run_campaign(_config(weight_model='random'))

    assert result.violations == 0
    assert campaign_weights(result.config).n == 12


def test_injected_violation_is_counted(tmp_path):
    with patch('corank.experiments.combinatorial_rank', return_value=0):
        result = run_campaign(_config(), location=str(tmp_path))

    assert result.violations == 4
    assert result.summary.violation_kinds['exact-above-combinatorial'] == 4
    assert os.path.isdir(result.outputs['bundles'])
    assert len(os.listdir(result.outputs['bundles'])) == 4


def test_outputs_and_manifest_rerun(tmp_path):
    first = run_campaign(_config(), location=str(tmp_path / 'first'))

    stem = 'rank-agreement-11'
    assert first.outputs['csv'] == os.path.join(str(tmp_path / 'first'), f'{stem}.csv')
    for name in ('csv', 'summary', 'manifest'):
        assert os.path.isfile(first.outputs[name])

    rerun = run_campaign(load_config(first.outputs['manifest']), location=str(tmp_path / 'second'))

    assert open(first.outputs['csv'], 'rb').read() == open(rerun.outputs['csv'], 'rb').read()
    header = open(first.outputs['csv'], encoding='utf-8').readline().strip()
    assert header.endswith(',manifest')
    assert open(first.outputs['csv'], encoding='utf-8').readlines()[1].strip().endswith(f',{stem}.manifest.json')


def test_dependency_classification_small():
    result = run_campaign(_config('dependency-classification', n=10, s=3))

    assert result.violations == 0
    assert all(record.dependent_sets is not None for record in result.records)
    assert all(record.structural_failure is not None for record in result.records)
    assert 'structural_agreement' in result.summary.metrics


def test_coupon_threshold_sides():
    summary = run_coupon_threshold(_config('coupon-threshold', n=60, p=None, trials=3))

    assert set(summary.metrics) == {BELOW_KIND, ABOVE_KIND}
    assert summary.metrics[BELOW_KIND]['p'] == pytest.approx(0.8 * math.log(60) / 60)
    assert summary.violations == 0


def test_coupon_threshold_given_probability():
    result = run_campaign(_config('coupon-threshold', n=30, p=0.05, trials=3))

    assert {record.kind for record in result.records} == {GIVEN_KIND}
    assert all(not (record.has_zero_row and record.full_rank) for record in result.records)


def test_zero_row_probability():
    n, p = 400, 0.8 * math.log(400) / 400

    assert zero_row_probability(n, p) == pytest.approx(1 - (1 - (1 - p) ** n) ** n)
    assert zero_row_probability(n, p, 'zero') > zero_row_probability(n, p)


def test_exposure_process_small():
    result = run_campaign(_config('exposure-process', n=8, trials=2, s=3))

    assert len(result.records) == 16
    assert result.violations == 0
    first = [record for record in result.records if record.trial_index == 0]
    assert [record.m for record in first] == list(range(1, 9))
    assert first[0].normal_pair is None
    assert all(record.normal_pair is not None for record in first[1:])
    assert all(record.y >= 0 for record in result.records)
    assert result.summary.trials == 2
    assert result.summary.metrics['goodness_params']['unfloored_k'] == pytest.approx(math.log(math.log(8)) / 0.6)


def test_diagonal_pairing_small():
    result = run_campaign(_config('diagonal-pairing', n=15, p=0.25))

    assert result.violations == 0
    assert all(record.paired_rank is not None for record in result.records)


def test_nonsymmetric_singularity_small():
    result = run_campaign(_config('nonsymmetric-singularity', n=30, p=0.3))

    assert result.violations == 0
    assert all(record.exact_rank <= record.combinatorial_rank for record in result.records)
    assert 'mean_row_column_mismatch' in result.summary.metrics


def test_dregular_cycles():
    summary = run_dregular_singularity(2, 12, 6, 5)

    assert summary.violations == 0
    assert summary.metrics['d'] == 2


def test_dregular_complete_graph_is_nonsingular():
    result = run_campaign(_config('dregular-singularity', n=6, p=None, d=5, trials=2))

    assert result.violations == 0
    assert all(record.exact_rank == 6 for record in result.records)


def test_cycle_oracle():
    assert cycle_oracle_singular(Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]))
    assert not cycle_oracle_singular(Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)]))


def test_saturation_small():
    result = run_campaign(_config('saturation', n=10, s=3))

    assert result.violations == 0
    assert all(record.saturated == (record.y == 0) for record in result.records)


def test_saturation_size_cap():
    with pytest.raises(CapacityError):
        run_campaign(_config('saturation', n=23))


def test_linear_lo_small():
    summary = run_linear_lo(_config('linear-lo', p=None, dimensions='4,16', lo_trials=3000, rho=0.5))

    assert set(summary.metrics['scaled_estimates']) == {4, 16}
    assert summary.metrics['oracle_gap_std_errors'] < 6
    assert summary.violations == 0


def test_linear_lo_units():
    result = run_campaign(_config('linear-lo', p=None, dimensions='4', lo_trials=100))

    assert [record.kind for record in result.records] == [DIMENSION_KIND, ORACLE_KIND]
    assert result.records[1].exact_probability is not None


def test_balanced_coefficients():
    assert balanced_coefficients(5) == [1, -1, 1, -1, 1]


def test_quadratic_lo_small():
    result = run_campaign(_config('quadratic-lo', n=6, p=0.4, trials=3, lo_trials=400))

    assert len(result.records) == 3
    estimated = [record for record in result.records if record.hit_probability is not None]
    assert all(record.exact_probability is not None for record in estimated)
    assert result.summary.metrics['skipped_zero_grids'] == 3 - len(estimated)


def test_run_as_switches_experiment():
    summary = run_rank_agreement(_config('saturation', n=8))

    assert summary.experiment == 'rank-agreement'


def test_runner_reraises_unit_failure():
    runner = ExperimentRunner(_config())

    with patch('corank.experiments.exact_rank', side_effect=RuntimeError('boom')):
        with pytest.raises(RuntimeError, match='boom'):
            runner.run()


@pytest.mark.slow
def test_rank_agreement_at_scale():
    n = 400
    config = _config(n=n, p=3 * math.log(n) / n, trials=200, redraw_masks=20, weight_redraws=5)

    summary = run_rank_agreement(config)

    assert summary.violations == 0
    assert summary.metrics['rank_agreement']['rate'] >= 0.98
    assert summary.metrics['weight_constancy']['rate'] >= 0.99


@pytest.mark.slow
def test_full_rank_threshold_at_scale():
    n = 400
    above = run_coupon_threshold(_config('coupon-threshold', n=n, p=1.2 * math.log(n) / n, trials=200))
    below = run_coupon_threshold(_config('coupon-threshold', n=n, p=0.8 * math.log(n) / n, trials=200))

    assert above.metrics[GIVEN_KIND]['full_rank']['rate'] >= 0.85
    gap = abs(below.metrics[GIVEN_KIND]['zero_row']['rate'] - below.metrics[GIVEN_KIND]['closed_form_zero_row'])
    assert gap <= 0.1


@pytest.mark.slow
def test_cycle_singularity_at_scale():
    summary = run_dregular_singularity(2, 40, 200, 17)

    assert summary.violations == 0
    assert summary.metrics['singular']['rate'] >= 0.5


@pytest.mark.slow
def test_linear_lo_scaling_at_scale():
    summary = run_linear_lo(_config('linear-lo', p=None, dimensions='100,400,1600', lo_trials=100000, rho=0.1))

    assert summary.metrics['scaling_ratio'] <= 3
    assert summary.metrics['oracle_gap_std_errors'] <= 4
