"""Seeded Monte Carlo campaigns.

Every campaign is a list of work units. A unit carries its own seed, derived
from the master seed and the unit's position, so any single trial can be
replayed from ``(config, trial_index)`` and the merged output does not depend
on how the workers were scheduled.
"""
import logging
import math
import os
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from fractions import Fraction
from threading import BoundedSemaphore, Thread
from typing import Callable, Dict, List, Optional

import networkx as nx

from corank.anticoncentration import cofactor_grid, estimate_linear_lo, estimate_quadratic_lo
from corank.anticoncentration import exact_linear_hit_probability, exact_quadratic_hit_probability
from corank.anticoncentration import quadratic_q_parameter
from corank.config import COUPON_THRESHOLD, DEPENDENCY_CLASSIFICATION, DIAGONAL_PAIRING, DREGULAR_SINGULARITY
from corank.config import EXPOSURE_PROCESS, LINEAR_LO, NONSYMMETRIC_SINGULARITY, QUADRATIC_LO, RANDOM_WEIGHTS
from corank.config import RANK_AGREEMENT, SATURATION, ExperimentConfig
from corank.constants import BRUTE_FORCE_CAP, DEFAULT_NUM_WORKERS, EXPECTED_CUBIC_SINGULARITY
from corank.constants import EXPECTED_CYCLE_SINGULARITY, EXPECTED_DIAGONAL_MATCH, EXPECTED_FULL_RANK
from corank.constants import EXPECTED_LO_SCALING_RATIO, EXPECTED_NONSYMMETRIC_SINGULARITY
from corank.constants import EXPECTED_ORACLE_STD_ERRORS, EXPECTED_QUADRATIC_ENVELOPE, EXPECTED_QUADRATIC_RATE
from corank.constants import EXPECTED_RANK_AGREEMENT, EXPECTED_STRUCTURAL_AGREEMENT, EXPECTED_WEIGHT_CONSTANCY
from corank.constants import EXPECTED_WITNESS_RATE, EXPECTED_ZERO_ROW_GAP
from corank.errors import CapacityError, StructuralFailureError
from corank.field import RationalField
from corank.graph import Graph, brute_force_combinatorial_rank, combinatorial_rank, deficiency_value, graph_of
from corank.graph import is_non_expanding, min_deficiency_witness, neighborhood, pattern_matching_rank
from corank.matrix import MIXED_DIAGONAL, NONZERO_DIAGONAL, ZERO_DIAGONAL, SparseSymMatrix, apply_mask
from corank.matrix import bernoulli_mask, general_mask, minor, random_weights, sparsify_general
from corank.matrix import with_zero_diagonal
from corank.predicates import GoodnessParams, is_normal_pair
from corank.rank import exact_rank
from corank.records import CampaignSummary, Expectation, RunManifest, TrialRecord, rate_summary
from corank.records import write_failure_bundle, write_json, write_records_csv
from corank.sampling import WEIGHT_STREAM, derive_seed, random_regular_graph
from corank.structure import EXACT_MODE, classify_dependencies, largest_unobstructed_size
from corank.structure import predicted_rank_structural

LOGGER = logging.getLogger(__name__)

TRIAL_KIND = 'trial'
REDRAW_KIND = 'redraw'
BELOW_KIND = 'below'
ABOVE_KIND = 'above'
GIVEN_KIND = 'given'
DIMENSION_KIND = 'dimension'
ORACLE_KIND = 'oracle'

# Unit keys keep the seed streams of different unit kinds apart
_KIND_KEYS = {
    TRIAL_KIND: 0,
    REDRAW_KIND: 1,
    BELOW_KIND: 2,
    ABOVE_KIND: 3,
    GIVEN_KIND: 4,
    DIMENSION_KIND: 5,
    ORACLE_KIND: 6,
}
_ESTIMATE_KEY = 7

ORACLE_COEFFICIENTS = (1, -1, 2, -2, 3, -3) * 2
EXACT_QUADRATIC_CAP = 16


@dataclass(frozen=True)
class WorkUnit:
    kind: str
    index: int
    seed: int
    p: Optional[float] = None


@dataclass
class CampaignResult:
    config: ExperimentConfig
    records: List[TrialRecord]
    summary: CampaignSummary
    outputs: Dict[str, str] = field(default_factory=dict)

    @property
    def violations(self):
        return self.summary.violations


@dataclass(frozen=True)
class Campaign:
    units: Callable
    trial: Callable
    summarize: Callable


def _unit(config, kind, index, p=None):
    if kind == TRIAL_KIND:
        seed = derive_seed(config.seed, index)
    else:
        seed = derive_seed(config.seed, _KIND_KEYS[kind], index)
    return WorkUnit(kind, index, seed, p)


def _trial_units(config):
    return [_unit(config, TRIAL_KIND, index) for index in range(config.trials)]


def campaign_weights(config):
    """The campaign-wide W; with the random weight model every trial draws its own instead."""
    return random_weights(config.n, config.diagonal_mode, derive_seed(config.seed, WEIGHT_STREAM), config.field)


def _trial_weights(config, unit, weights, diagonal_mode=None):
    diagonal_mode = diagonal_mode or config.diagonal_mode
    if config.weight_model == RANDOM_WEIGHTS:
        return random_weights(config.n, diagonal_mode, derive_seed(unit.seed, WEIGHT_STREAM), config.field)
    if diagonal_mode != weights.diagonal_mode:
        return replace(weights, diagonal_mode=diagonal_mode)
    return weights


def _record(config, unit, **values):
    values.setdefault('p', unit.p if unit.p is not None else config.probability)
    return TrialRecord(
        experiment=config.experiment,
        kind=unit.kind,
        trial_index=unit.index,
        seed=unit.seed,
        n=config.n,
        s=config.s,
        **values,
    )


def _check_rank_bound(record):
    if record.exact_rank > record.combinatorial_rank:
        record.flag('exact-above-combinatorial')


def _sampled_artifacts(config, weights, mask, matrix):
    return {'weights': weights.as_matrix(), 'mask': mask.as_matrix(config.field), 'matrix': matrix}


def _finish_summary(config, records, metrics, expectations, trials=None):
    violations = [record for record in records if record.violation]
    kinds = Counter(kind for record in violations for kind in record.violation.split(';'))
    return CampaignSummary(
        experiment=config.experiment,
        trials=trials if trials is not None else len(records),
        metrics=metrics,
        expectations=expectations,
        violations=len(violations),
        violation_kinds=dict(sorted(kinds.items())),
    )


def _of_kind(records, *kinds):
    return [record for record in records if record.kind in kinds]


# Rank agreement


def _rank_agreement_units(config):
    units = _trial_units(config)
    units.extend(_unit(config, REDRAW_KIND, index) for index in range(config.redraw_masks))
    return units


def _rank_agreement_trial(config, unit, weights):
    if unit.kind == REDRAW_KIND:
        return _weight_redraw_trial(config, unit)
    weights = _trial_weights(config, unit, weights)
    mask = bernoulli_mask(config.n, config.probability, unit.seed)
    matrix = apply_mask(weights, mask)
    graph = graph_of(matrix)
    record = _record(config, unit, exact_rank=exact_rank(matrix), combinatorial_rank=combinatorial_rank(graph))
    _check_rank_bound(record)

    witness = min_deficiency_witness(graph)
    record.witness_size = len(witness)
    record.witness_neighborhood_size = len(neighborhood(graph, witness))
    if deficiency_value(graph, witness) != record.combinatorial_rank:
        record.flag('witness-value')
    if config.n <= BRUTE_FORCE_CAP:
        record.brute_force_rank = brute_force_combinatorial_rank(graph)
        if record.brute_force_rank != record.combinatorial_rank:
            record.flag('matching-vs-enumeration')
    if record.violation or record.exact_rank != record.combinatorial_rank:
        record.artifacts = _sampled_artifacts(config, weights, mask, matrix)
    return [record]


def _weight_redraw_trial(config, unit):
    """Ranks of several independent W on one fixed mask."""
    mask = bernoulli_mask(config.n, config.probability, unit.seed)
    ranks = []
    bounds = []
    for redraw in range(config.weight_redraws):
        weights = random_weights(
            config.n, config.diagonal_mode, derive_seed(unit.seed, WEIGHT_STREAM, redraw), config.field
        )
        matrix = apply_mask(weights, mask)
        ranks.append(exact_rank(matrix))
        bounds.append(combinatorial_rank(graph_of(matrix)))
    record = _record(
        config,
        unit,
        exact_rank=ranks[0],
        combinatorial_rank=bounds[0],
        rank_constant=len(set(ranks)) == 1,
    )
    if any(rank > bound for rank, bound in zip(ranks, bounds)):
        record.flag('exact-above-combinatorial')
    if not record.rank_constant:
        LOGGER.debug(f'Mask {unit.index}: ranks {ranks} vary across weight redraws')
    return [record]


def _rank_agreement_summary(config, records):
    trials = _of_kind(records, TRIAL_KIND)
    agreement = rate_summary(sum(1 for r in trials if r.exact_rank == r.combinatorial_rank), len(trials))
    metrics = {
        'rank_agreement': agreement,
        'mean_corank': sum(config.n - r.exact_rank for r in trials) / len(trials),
    }
    expectations = [Expectation('rank_agreement', agreement['rate'], EXPECTED_RANK_AGREEMENT)]
    enumerated = [r for r in trials if r.brute_force_rank is not None]
    if enumerated:
        metrics['enumeration_agreement'] = rate_summary(
            sum(1 for r in enumerated if r.brute_force_rank == r.exact_rank), len(enumerated)
        )
    redraws = _of_kind(records, REDRAW_KIND)
    if redraws:
        constancy = rate_summary(sum(1 for r in redraws if r.rank_constant), len(redraws))
        metrics['weight_constancy'] = constancy
        expectations.append(Expectation('weight_constancy', constancy['rate'], EXPECTED_WEIGHT_CONSTANCY))
    return _finish_summary(config, records, metrics, expectations, trials=len(trials))


# Dependency classification


def _dependency_trial(config, unit, weights):
    weights = _trial_weights(config, unit, weights)
    mask = bernoulli_mask(config.n, config.probability, unit.seed)
    matrix = apply_mask(weights, mask)
    graph = graph_of(matrix)
    record = _record(config, unit, exact_rank=exact_rank(matrix), combinatorial_rank=combinatorial_rank(graph))
    _check_rank_bound(record)

    try:
        record.structural_rank = predicted_rank_structural(graph, config.s)
        record.structural_failure = False
        # N(T) is matched by T1, so n - |T \ T1| bounds the rank from above
        if record.exact_rank > record.structural_rank:
            record.flag('exact-above-structural')
    except StructuralFailureError as error:
        LOGGER.debug(f'Trial {unit.index}: structural decomposition stalled on {len(error.residual)} vertices')
        record.structural_failure = True

    if config.n <= BRUTE_FORCE_CAP:
        try:
            reports = classify_dependencies(matrix, config.s)
        except CapacityError as error:
            LOGGER.debug(f'Trial {unit.index}: dependency classification skipped: {error}')
            reports = None
        if reports is not None:
            record.dependent_sets = len(reports)
            record.witnessed_sets = sum(1 for report in reports if report.theorem_holds)
            for report in reports:
                witness = report.contained_witness
                if witness is None:
                    continue
                if not set(witness.vertices) <= set(report.dependent_rows) or not is_non_expanding(
                    graph, witness.vertices
                ):
                    record.flag('witness-containment')

    missed = record.structural_failure or record.structural_rank != record.exact_rank
    if record.dependent_sets is not None and record.witnessed_sets < record.dependent_sets:
        missed = True
    if missed or record.violation:
        record.artifacts = _sampled_artifacts(config, weights, mask, matrix)
    return [record]


def _dependency_summary(config, records):
    metrics = {
        'structural_agreement': rate_summary(
            sum(1 for r in records if r.structural_rank == r.exact_rank), len(records)
        ),
        'structural_failures': sum(1 for r in records if r.structural_failure),
        'full_rank': rate_summary(sum(1 for r in records if r.exact_rank == config.n), len(records)),
    }
    expectations = [
        Expectation('structural_agreement', metrics['structural_agreement']['rate'], EXPECTED_STRUCTURAL_AGREEMENT)
    ]
    classified = [r for r in records if r.dependent_sets is not None]
    if classified:
        witnessed = rate_summary(sum(1 for r in classified if r.witnessed_sets == r.dependent_sets), len(classified))
        metrics['witness_rate'] = witnessed
        expectations.append(Expectation('witness_rate', witnessed['rate'], EXPECTED_WITNESS_RATE))
    return _finish_summary(config, records, metrics, expectations)


# Coupon-collector threshold


def zero_row_probability(n, p, diagonal_mode=NONZERO_DIAGONAL):
    """Closed form of P(some row of Q(W, p) is zero), rows treated as independent."""
    diagonal_share = {NONZERO_DIAGONAL: 1.0, ZERO_DIAGONAL: 0.0, MIXED_DIAGONAL: 0.5}[diagonal_mode]
    row_zero = (1 - p) ** (n - 1) * (1 - p * diagonal_share)
    return 1 - (1 - row_zero) ** n


def _coupon_units(config):
    if config.probability is not None:
        sides = [(GIVEN_KIND, config.probability)]
    else:
        threshold = math.log(config.n) / config.n
        sides = [
            (BELOW_KIND, (1 - config.epsilon) * threshold),
            (ABOVE_KIND, min((1 + config.epsilon) * threshold, 1 - 1e-12)),
        ]
    return [_unit(config, kind, index, p) for kind, p in sides for index in range(config.trials)]


def _coupon_trial(config, unit, weights):
    weights = _trial_weights(config, unit, weights)
    mask = bernoulli_mask(config.n, unit.p, unit.seed)
    matrix = apply_mask(weights, mask)
    zero_rows = len(matrix.zero_rows())
    rank = exact_rank(matrix)
    record = _record(
        config,
        unit,
        exact_rank=rank,
        zero_rows=zero_rows,
        has_zero_row=zero_rows > 0,
        full_rank=rank == config.n,
    )
    if record.has_zero_row and record.full_rank:
        record.flag('zero-row-full-rank')
        record.artifacts = _sampled_artifacts(config, weights, mask, matrix)
    return [record]


def _coupon_summary(config, records):
    metrics = {}
    expectations = []
    for kind in (BELOW_KIND, ABOVE_KIND, GIVEN_KIND):
        side = _of_kind(records, kind)
        if not side:
            continue
        p = side[0].p
        zero_row = rate_summary(sum(1 for r in side if r.has_zero_row), len(side))
        full_rank = rate_summary(sum(1 for r in side if r.full_rank), len(side))
        closed_form = zero_row_probability(config.n, p, config.diagonal_mode)
        metrics[kind] = {'p': p, 'zero_row': zero_row, 'full_rank': full_rank, 'closed_form_zero_row': closed_form}
        if kind == ABOVE_KIND:
            expectations.append(Expectation(f'{kind}_full_rank', full_rank['rate'], EXPECTED_FULL_RANK))
        else:
            gap = abs(zero_row['rate'] - closed_form)
            expectations.append(Expectation(f'{kind}_zero_row_gap', gap, EXPECTED_ZERO_ROW_GAP, '<='))
    return _finish_summary(config, records, metrics, expectations)


# Vertex exposure


def _exposure_trial(config, unit, weights):
    weights = _trial_weights(config, unit, weights)
    mask = bernoulli_mask(config.n, config.probability, unit.seed)
    matrix = apply_mask(weights, mask)
    paired = apply_mask(with_zero_diagonal(weights), mask)
    params = GoodnessParams.derive(config.n, config.probability, config.s)
    track_u = config.n <= BRUTE_FORCE_CAP

    records = []
    previous_rank = 0
    previous_graph = None
    for m in range(1, config.n + 1):
        step = minor(matrix, m)
        graph = graph_of(step)
        record = _record(
            config,
            unit,
            m=m,
            exact_rank=exact_rank(step),
            combinatorial_rank=combinatorial_rank(graph),
            paired_rank=exact_rank(minor(paired, m)),
        )
        _check_rank_bound(record)
        if record.exact_rank - previous_rank not in (0, 1, 2):
            record.flag('rank-step')
        record.corank_match = record.exact_rank == record.paired_rank
        if previous_graph is not None:
            record.normal_pair = is_normal_pair(previous_graph, graph, params)
        if track_u:
            record.unobstructed_size = largest_unobstructed_size(graph, config.s - 1, mode=EXACT_MODE)
            record.y = record.unobstructed_size - record.exact_rank
            if record.y < 0:
                record.flag('negative-y')
        previous_rank = record.exact_rank
        previous_graph = graph
        records.append(record)

    if any(record.violation for record in records):
        records[-1].artifacts = _sampled_artifacts(config, weights, mask, matrix)
    return records


def _exposure_summary(config, records):
    trajectories = {}
    for record in records:
        trajectories.setdefault(record.trial_index, []).append(record)
    endpoints = [max(steps, key=lambda r: r.m) for steps in trajectories.values()]
    matched = rate_summary(
        sum(1 for steps in trajectories.values() if all(r.corank_match for r in steps)), len(trajectories)
    )
    paired_steps = [r for r in records if r.normal_pair is not None]
    metrics = {
        'trajectory_corank_match': matched,
        'endpoint_mean_rank': sum(r.exact_rank for r in endpoints) / len(endpoints),
        'goodness_params': GoodnessParams.derive(config.n, config.probability, config.s).to_dict(),
    }
    if paired_steps:
        metrics['normal_steps'] = rate_summary(sum(1 for r in paired_steps if r.normal_pair), len(paired_steps))
    tracked = [r.y for r in records if r.y is not None]
    if tracked:
        metrics['min_y'] = min(tracked)
        metrics['max_y'] = max(tracked)
    expectations = [Expectation('trajectory_corank_match', matched['rate'], EXPECTED_DIAGONAL_MATCH)]
    return _finish_summary(config, records, metrics, expectations, trials=len(trajectories))


# Diagonal pairing


def _pairing_trial(config, unit, weights):
    weights = _trial_weights(config, unit, weights, diagonal_mode=NONZERO_DIAGONAL)
    mask = bernoulli_mask(config.n, config.probability, unit.seed)
    matrix = apply_mask(weights, mask)
    paired = apply_mask(with_zero_diagonal(weights), mask)
    record = _record(
        config,
        unit,
        exact_rank=exact_rank(matrix),
        combinatorial_rank=combinatorial_rank(graph_of(matrix)),
        paired_rank=exact_rank(paired),
    )
    _check_rank_bound(record)
    if record.paired_rank > combinatorial_rank(graph_of(paired)):
        record.flag('exact-above-combinatorial')
    record.corank_match = record.exact_rank == record.paired_rank
    if not record.corank_match or record.violation:
        record.artifacts = _sampled_artifacts(config, weights, mask, matrix)
        record.artifacts['paired'] = paired
    return [record]


def _pairing_summary(config, records):
    matched = rate_summary(sum(1 for r in records if r.corank_match), len(records))
    return _finish_summary(
        config,
        records,
        {'corank_match': matched},
        [Expectation('corank_match', matched['rate'], EXPECTED_DIAGONAL_MATCH)],
    )


# Non-symmetric singularity


def _nonsymmetric_trial(config, unit, weights):
    matrix = sparsify_general(
        config.n,
        config.probability,
        unit.seed,
        derive_seed(unit.seed, WEIGHT_STREAM),
        config.field,
        config.diagonal_mode,
    )
    rank = exact_rank(matrix)
    zero_rows = len(matrix.zero_rows())
    zero_columns = len(matrix.zero_columns())
    record = _record(
        config,
        unit,
        exact_rank=rank,
        combinatorial_rank=pattern_matching_rank(matrix),
        singular=rank < config.n,
        zero_rows=zero_rows,
        zero_columns=zero_columns,
        row_column_mismatch=abs(zero_rows - zero_columns),
    )
    _check_rank_bound(record)
    if record.violation:
        mask = general_mask(config.n, config.probability, unit.seed)
        record.artifacts = {'matrix': matrix, 'mask': mask.as_matrix(config.field)}
    return [record]


def _nonsymmetric_summary(config, records):
    singular = rate_summary(sum(1 for r in records if r.singular), len(records))
    metrics = {
        'singular': singular,
        'mean_zero_rows': sum(r.zero_rows for r in records) / len(records),
        'mean_zero_columns': sum(r.zero_columns for r in records) / len(records),
        'mean_row_column_mismatch': sum(r.row_column_mismatch for r in records) / len(records),
    }
    expectations = [Expectation('singular', singular['rate'], EXPECTED_NONSYMMETRIC_SINGULARITY, '<=')]
    return _finish_summary(config, records, metrics, expectations)


# d-regular singularity


def cycle_oracle_singular(graph):
    """A disjoint union of cycles is singular iff some cycle length is divisible by 4."""
    return any(len(component) % 4 == 0 for component in nx.connected_components(graph.to_networkx()))


def _dregular_trial(config, unit, weights):
    edges = random_regular_graph(config.d, config.n, unit.seed)
    graph = Graph.from_edges(config.n, edges)
    rationals = RationalField()
    adjacency = SparseSymMatrix(config.n, rationals, {edge: Fraction(1) for edge in edges})
    rank = exact_rank(adjacency)
    record = _record(
        config,
        unit,
        p=None,
        exact_rank=rank,
        combinatorial_rank=combinatorial_rank(graph),
        singular=rank < config.n,
    )
    _check_rank_bound(record)
    if config.d == 2:
        record.cycle_oracle_singular = cycle_oracle_singular(graph)
        if record.cycle_oracle_singular != record.singular:
            record.flag('cycle-oracle')
    if config.d == config.n - 1 and config.n >= 2 and record.singular:
        record.flag('complete-graph-singular')
    if record.violation:
        record.artifacts = {'adjacency': adjacency}
    return [record]


def _dregular_summary(config, records):
    singular = rate_summary(sum(1 for r in records if r.singular), len(records))
    expectations = []
    if config.d == 2:
        expectations.append(Expectation('singular', singular['rate'], EXPECTED_CYCLE_SINGULARITY))
    elif config.d == 3:
        expectations.append(Expectation('singular', singular['rate'], EXPECTED_CUBIC_SINGULARITY, '<='))
    return _finish_summary(config, records, {'d': config.d, 'singular': singular}, expectations)


# Saturation


def _saturation_units(config):
    if config.n > BRUTE_FORCE_CAP:
        message = f'The saturation campaign enumerates subsets and is capped at n={BRUTE_FORCE_CAP}.'
        LOGGER.critical(message)
        raise CapacityError(message)
    return _trial_units(config)


def _saturation_trial(config, unit, weights):
    weights = _trial_weights(config, unit, weights)
    mask = bernoulli_mask(config.n, config.probability, unit.seed)
    matrix = apply_mask(weights, mask)
    graph = graph_of(matrix)
    record = _record(config, unit, exact_rank=exact_rank(matrix), combinatorial_rank=combinatorial_rank(graph))
    _check_rank_bound(record)
    record.unobstructed_size = largest_unobstructed_size(graph, config.s - 1, mode=EXACT_MODE)
    record.y = record.unobstructed_size - record.exact_rank
    record.saturated = record.y == 0
    if record.y < 0:
        record.flag('negative-y')
    if not record.saturated or record.violation:
        record.artifacts = _sampled_artifacts(config, weights, mask, matrix)
    return [record]


def _saturation_summary(config, records):
    saturated = rate_summary(sum(1 for r in records if r.saturated), len(records))
    return _finish_summary(
        config,
        records,
        {'saturated': saturated, 'mean_y': sum(r.y for r in records) / len(records)},
        [Expectation('saturated', saturated['rate'], EXPECTED_STRUCTURAL_AGREEMENT)],
    )


# Littlewood-Offord


def balanced_coefficients(dimension):
    """Alternating +1/-1, the extremal case of the linear envelope."""
    return [1 if index % 2 == 0 else -1 for index in range(dimension)]


def _linear_lo_units(config):
    units = [_unit(config, DIMENSION_KIND, index) for index in range(len(config.dimensions))]
    units.append(_unit(config, ORACLE_KIND, 0))
    return units


def _linear_lo_trial(config, unit, weights):
    if unit.kind == ORACLE_KIND:
        coefficients = list(ORACLE_COEFFICIENTS)
    else:
        coefficients = balanced_coefficients(config.dimensions[unit.index])
    estimate = estimate_linear_lo(
        coefficients, config.rho, config.lo_trials, derive_seed(unit.seed, _ESTIMATE_KEY), config.field
    )
    record = _record(
        config,
        unit,
        p=None,
        dimension=estimate.dimension,
        hit_probability=estimate.hit_probability,
        std_error=estimate.std_error,
        bound_value=estimate.bound_value,
    )
    if unit.kind == ORACLE_KIND:
        record.exact_probability = exact_linear_hit_probability(coefficients, config.rho, config.field)
    return [record]


def _oracle_gap(record):
    """Distance between estimate and exact value, in standard errors."""
    gap = abs(record.hit_probability - record.exact_probability)
    if record.std_error == 0:
        return 0.0 if gap == 0 else math.inf
    return gap / record.std_error


def _linear_lo_summary(config, records):
    dimensions = sorted(_of_kind(records, DIMENSION_KIND), key=lambda r: r.dimension)
    scaled = {r.dimension: r.hit_probability / r.bound_value for r in dimensions}
    metrics = {'scaled_estimates': scaled}
    expectations = []
    if min(scaled.values()) > 0:
        ratio = max(scaled.values()) / min(scaled.values())
    else:
        ratio = math.inf
    metrics['scaling_ratio'] = ratio
    expectations.append(Expectation('scaling_ratio', ratio, EXPECTED_LO_SCALING_RATIO, '<='))
    for record in _of_kind(records, ORACLE_KIND):
        gap = _oracle_gap(record)
        metrics['oracle_gap_std_errors'] = gap
        expectations.append(Expectation('oracle_gap_std_errors', gap, EXPECTED_ORACLE_STD_ERRORS, '<='))
    return _finish_summary(config, records, metrics, expectations)


def _quadratic_lo_units(config):
    if config.n > BRUTE_FORCE_CAP:
        message = f'Cofactor grids are capped at n={BRUTE_FORCE_CAP}.'
        LOGGER.critical(message)
        raise CapacityError(message)
    return _trial_units(config)


def _quadratic_lo_trial(config, unit, weights):
    weights = _trial_weights(config, unit, weights)
    mask = bernoulli_mask(config.n, config.probability, unit.seed)
    grid = cofactor_grid(apply_mask(weights, mask))
    q = quadratic_q_parameter(grid)
    record = _record(config, unit, dimension=q)
    if q == 0:
        LOGGER.debug(f'Trial {unit.index}: cofactor grid is zero, skipped')
        return [record]
    estimate = estimate_quadratic_lo(
        grid, config.rho, config.lo_trials, derive_seed(unit.seed, _ESTIMATE_KEY), config.field
    )
    record.hit_probability = estimate.hit_probability
    record.std_error = estimate.std_error
    record.bound_value = estimate.bound_value
    if config.n <= EXACT_QUADRATIC_CAP:
        record.exact_probability = exact_quadratic_hit_probability(grid, config.rho, config.field)
    return [record]


def _quadratic_lo_summary(config, records):
    estimated = [r for r in records if r.hit_probability is not None]
    metrics = {'skipped_zero_grids': len(records) - len(estimated)}
    expectations = []
    if estimated:
        within = rate_summary(
            sum(1 for r in estimated if r.hit_probability <= EXPECTED_QUADRATIC_ENVELOPE * r.bound_value),
            len(estimated),
        )
        metrics['within_envelope'] = within
        expectations.append(Expectation('within_envelope', within['rate'], EXPECTED_QUADRATIC_RATE))
        checked = [r for r in estimated if r.exact_probability is not None]
        if checked:
            metrics['oracle_agreement'] = rate_summary(
                sum(1 for r in checked if _oracle_gap(r) <= EXPECTED_ORACLE_STD_ERRORS), len(checked)
            )
    return _finish_summary(config, records, metrics, expectations)


CAMPAIGNS = {
    RANK_AGREEMENT: Campaign(_rank_agreement_units, _rank_agreement_trial, _rank_agreement_summary),
    DEPENDENCY_CLASSIFICATION: Campaign(_trial_units, _dependency_trial, _dependency_summary),
    COUPON_THRESHOLD: Campaign(_coupon_units, _coupon_trial, _coupon_summary),
    EXPOSURE_PROCESS: Campaign(_trial_units, _exposure_trial, _exposure_summary),
    DIAGONAL_PAIRING: Campaign(_trial_units, _pairing_trial, _pairing_summary),
    NONSYMMETRIC_SINGULARITY: Campaign(_trial_units, _nonsymmetric_trial, _nonsymmetric_summary),
    DREGULAR_SINGULARITY: Campaign(_trial_units, _dregular_trial, _dregular_summary),
    SATURATION: Campaign(_saturation_units, _saturation_trial, _saturation_summary),
    LINEAR_LO: Campaign(_linear_lo_units, _linear_lo_trial, _linear_lo_summary),
    QUADRATIC_LO: Campaign(_quadratic_lo_units, _quadratic_lo_trial, _quadratic_lo_summary),
}


class ExperimentRunner:
    def __init__(self, config, location=None, workers=None, command=None):
        # Parameter variables
        self.config = config
        self.location = location
        self.workers = workers or config.workers or DEFAULT_NUM_WORKERS
        self.command = command or f'run {config.experiment}'
        # Internal variables
        self.campaign = CAMPAIGNS[config.experiment]
        self.stem = f'{config.experiment}-{config.seed}'

    def run(self):
        """Run every unit of the campaign, summarize, and write the outputs when a location is set."""
        LOGGER.info(f'# {self.config.experiment} campaign started (seed {self.config.seed})...\n')
        start_time = datetime.now()
        started_at = datetime.now(timezone.utc).isoformat()

        weights = campaign_weights(self.config) if self.config.experiment != DREGULAR_SINGULARITY else None
        units = self.campaign.units(self.config)
        records = self.iterate_units(units, weights)
        summary = self.campaign.summarize(self.config, records)
        self.report(summary)

        outputs = {}
        if self.location:
            outputs = self.write_outputs(records, summary, started_at)

        execution_time = f'Execution time: {datetime.now() - start_time}.'
        LOGGER.info(f'{self.config.experiment} campaign complete! {execution_time}\n')
        return CampaignResult(self.config, records, summary, outputs)

    def iterate_units(self, units, weights):
        """Fan the units out over worker threads and merge their records in unit order."""
        thread_limiter = BoundedSemaphore(self.workers)
        results = {}
        failures = []
        thread_list = []

        for position, unit in enumerate(units):
            unit_thread = Thread(
                target=self.run_unit,
                args=(thread_limiter, unit, weights, position, results, failures),
            )
            thread_list.append(unit_thread)
            unit_thread.start()

        for thread in thread_list:
            thread.join()

        if failures:
            raise failures[0]
        return [record for position in sorted(results) for record in results[position]]

    def run_unit(self, thread_limiter, unit, weights, position, results, failures):
        thread_limiter.acquire()
        try:
            started = time.perf_counter()
            records = self.campaign.trial(self.config, unit, weights)
            elapsed = time.perf_counter() - started
            for record in records:
                record.wall_time = elapsed
                if record.violation:
                    LOGGER.error(f'{unit.kind} {unit.index} (seed {unit.seed}) violated: {record.violation}')
            results[position] = records
            LOGGER.debug(f'{unit.kind} {unit.index} finished in {elapsed:.3f}s')
        except Exception as error:
            LOGGER.error(f'{unit.kind} {unit.index} (seed {unit.seed}) failed: {error}')
            failures.append(error)
        finally:
            thread_limiter.release()

    def report(self, summary):
        for expectation in summary.expectations:
            if expectation.met:
                LOGGER.info(
                    f'{expectation.name}: {expectation.observed:.4f} (target {expectation.direction} '
                    f'{expectation.target})'
                )
            else:
                LOGGER.warning(
                    f'WARN {expectation.name}: {expectation.observed:.4f} misses target '
                    f'{expectation.direction} {expectation.target}'
                )
        if summary.violations:
            LOGGER.error(f'{summary.violations} hard-invariant violations: {summary.violation_kinds}')

    def write_outputs(self, records, summary, started_at):
        os.makedirs(self.location, exist_ok=True)
        outputs = {
            'csv': os.path.join(self.location, f'{self.stem}.csv'),
            'summary': os.path.join(self.location, f'{self.stem}.summary.json'),
            'manifest': os.path.join(self.location, f'{self.stem}.manifest.json'),
        }
        manifest_name = os.path.basename(outputs['manifest'])
        write_records_csv(records, outputs['csv'], manifest=manifest_name)

        flagged = [record for record in records if record.artifacts]
        if flagged:
            outputs['bundles'] = os.path.join(self.location, f'{self.stem}.bundles')
            for record in flagged:
                write_failure_bundle(outputs['bundles'], record, manifest=manifest_name)

        document = summary.to_dict()
        document['manifest'] = manifest_name
        write_json(document, outputs['summary'])

        manifest = RunManifest(
            command=self.command,
            parameters=self.config.to_dict(),
            master_seed=self.config.seed,
            started_at=started_at,
            finished_at=datetime.now(timezone.utc).isoformat(),
            outputs={name: os.path.basename(path) for name, path in outputs.items()},
        )
        manifest.write(outputs['manifest'])
        LOGGER.info(f'Results written to {outputs["csv"]}')
        return outputs


def run_campaign(config, location=None, workers=None, command=None):
    return ExperimentRunner(config, location=location, workers=workers, command=command).run()


def _run_as(experiment, config, **kwargs):
    if config.experiment != experiment:
        config = replace(config, experiment=experiment)
    return run_campaign(config, **kwargs).summary


def run_rank_agreement(config, **kwargs):
    return _run_as(RANK_AGREEMENT, config, **kwargs)


def run_dependency_classification(config, **kwargs):
    return _run_as(DEPENDENCY_CLASSIFICATION, config, **kwargs)


def run_coupon_threshold(config, **kwargs):
    return _run_as(COUPON_THRESHOLD, config, **kwargs)


def run_exposure_process(config, **kwargs):
    return _run_as(EXPOSURE_PROCESS, config, **kwargs)


def run_diagonal_pairing(config, **kwargs):
    return _run_as(DIAGONAL_PAIRING, config, **kwargs)


def run_nonsymmetric_singularity(config, **kwargs):
    return _run_as(NONSYMMETRIC_SINGULARITY, config, **kwargs)


def run_saturation(config, **kwargs):
    return _run_as(SATURATION, config, **kwargs)


def run_linear_lo(config, **kwargs):
    return _run_as(LINEAR_LO, config, **kwargs)


def run_quadratic_lo(config, **kwargs):
    return _run_as(QUADRATIC_LO, config, **kwargs)


def run_dregular_singularity(d, n, trials, seed, **kwargs):
    config = ExperimentConfig(experiment=DREGULAR_SINGULARITY, n=n, seed=seed, trials=trials, d=d)
    return run_campaign(config, **kwargs).summary
