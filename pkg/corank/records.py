"""Trial records, campaign summaries, run manifests and failure bundles.

Output files of one run share a stem ``<experiment>-<seed>``:

    <stem>.csv            one row per TrialRecord, CSV_COLUMNS then the manifest name
    <stem>.summary.json   the CampaignSummary
    <stem>.manifest.json  the RunManifest; re-running it reproduces the CSV byte for byte
    <stem>.bundles/       reproduction bundles of trials that broke an expectation
"""
import csv
import json
import logging
import math
import os
import platform
from dataclasses import dataclass, field, fields
from importlib import metadata
from typing import Any, Dict, List, Optional

from corank.errors import EmptyInputError
from corank.matrix import write_matrix

LOGGER = logging.getLogger(__name__)

WILSON_Z = 1.96

MANIFEST_COLUMN = 'manifest'

CSV_COLUMNS = (
    'experiment',
    'kind',
    'trial_index',
    'm',
    'seed',
    'n',
    'p',
    's',
    'exact_rank',
    'combinatorial_rank',
    'brute_force_rank',
    'structural_rank',
    'structural_failure',
    'unobstructed_size',
    'y',
    'saturated',
    'witness_size',
    'witness_neighborhood_size',
    'rank_constant',
    'paired_rank',
    'corank_match',
    'normal_pair',
    'zero_rows',
    'zero_columns',
    'row_column_mismatch',
    'has_zero_row',
    'full_rank',
    'singular',
    'cycle_oracle_singular',
    'dependent_sets',
    'witnessed_sets',
    'dimension',
    'hit_probability',
    'std_error',
    'bound_value',
    'exact_probability',
    'violation',
)


@dataclass
class TrialRecord:
    """One observation. ``wall_time`` and ``artifacts`` never reach the CSV, so reruns stay byte-identical."""

    experiment: str
    kind: str
    trial_index: int
    seed: int
    n: Optional[int] = None
    p: Optional[float] = None
    s: Optional[int] = None
    m: Optional[int] = None
    exact_rank: Optional[int] = None
    combinatorial_rank: Optional[int] = None
    brute_force_rank: Optional[int] = None
    structural_rank: Optional[int] = None
    structural_failure: Optional[bool] = None
    unobstructed_size: Optional[int] = None
    y: Optional[int] = None
    saturated: Optional[bool] = None
    witness_size: Optional[int] = None
    witness_neighborhood_size: Optional[int] = None
    rank_constant: Optional[bool] = None
    paired_rank: Optional[int] = None
    corank_match: Optional[bool] = None
    normal_pair: Optional[bool] = None
    zero_rows: Optional[int] = None
    zero_columns: Optional[int] = None
    row_column_mismatch: Optional[int] = None
    has_zero_row: Optional[bool] = None
    full_rank: Optional[bool] = None
    singular: Optional[bool] = None
    cycle_oracle_singular: Optional[bool] = None
    dependent_sets: Optional[int] = None
    witnessed_sets: Optional[int] = None
    dimension: Optional[int] = None
    hit_probability: Optional[float] = None
    std_error: Optional[float] = None
    bound_value: Optional[float] = None
    exact_probability: Optional[float] = None
    violation: str = ''
    wall_time: float = 0.0
    artifacts: Dict[str, Any] = field(default_factory=dict, repr=False)

    def flag(self, violation):
        """Record a hard-invariant violation; several are joined with ';'."""
        self.violation = f'{self.violation};{violation}' if self.violation else violation

    def to_row(self):
        return {column: _format_cell(getattr(self, column)) for column in CSV_COLUMNS}

    def to_dict(self):
        return {item.name: getattr(self, item.name) for item in fields(self) if item.name != 'artifacts'}


def _format_cell(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sort_key(record):
    return (record.kind, record.trial_index, record.m if record.m is not None else -1, record.dimension or 0)


def write_records_csv(records, path, manifest=None):
    """Rows sorted by ``sort_key``; a trailing manifest column names the run manifest when one is given."""
    columns = CSV_COLUMNS if manifest is None else CSV_COLUMNS + (MANIFEST_COLUMN,)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator='\n')
        writer.writeheader()
        for record in sorted(records, key=sort_key):
            row = record.to_row()
            if manifest is not None:
                row[MANIFEST_COLUMN] = manifest
            writer.writerow(row)


def read_records_csv(path):
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        return list(csv.DictReader(handle))


def rate_summary(successes, trials, z=WILSON_Z):
    """Rate with its binomial standard error and Wilson score interval."""
    if trials == 0:
        message = 'No summary can be formed from zero trials.'
        LOGGER.critical(message)
        raise EmptyInputError(message)
    rate = successes / trials
    denominator = 1 + z ** 2 / trials
    center = (rate + z ** 2 / (2 * trials)) / denominator
    half_width = z * math.sqrt(rate * (1 - rate) / trials + z ** 2 / (4 * trials ** 2)) / denominator
    return {
        'successes': successes,
        'trials': trials,
        'rate': rate,
        'std_error': math.sqrt(rate * (1 - rate) / trials),
        'ci_low': max(0.0, center - half_width),
        'ci_high': min(1.0, center + half_width),
    }


@dataclass
class Expectation:
    """A statistical target; missing it is logged as a warning and never changes the exit status."""

    name: str
    observed: float
    target: float
    direction: str = '>='

    @property
    def met(self):
        if self.direction == '>=':
            return self.observed >= self.target
        return self.observed <= self.target

    def to_dict(self):
        return {
            'name': self.name,
            'observed': self.observed,
            'target': self.target,
            'direction': self.direction,
            'met': self.met,
        }


@dataclass
class CampaignSummary:
    experiment: str
    trials: int
    metrics: Dict[str, Any] = field(default_factory=dict)
    expectations: List[Expectation] = field(default_factory=list)
    violations: int = 0
    violation_kinds: Dict[str, int] = field(default_factory=dict)

    @property
    def missed(self):
        return [expectation for expectation in self.expectations if not expectation.met]

    def to_dict(self):
        return {
            'experiment': self.experiment,
            'trials': self.trials,
            'metrics': self.metrics,
            'expectations': [expectation.to_dict() for expectation in self.expectations],
            'violations': self.violations,
            'violation_kinds': self.violation_kinds,
        }


def write_json(document, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(document, handle, indent=2, sort_keys=True, ensure_ascii=False)
        handle.write('\n')


def _package_version(name):
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return 'unknown'


def collect_versions():
    return {
        'corank': _package_version('corank'),
        'numpy': _package_version('numpy'),
        'networkx': _package_version('networkx'),
        'PyYAML': _package_version('PyYAML'),
        'python': platform.python_version(),
    }


@dataclass
class RunManifest:
    command: str
    parameters: Dict[str, Any]
    master_seed: int
    started_at: str
    finished_at: str = ''
    outputs: Dict[str, str] = field(default_factory=dict)
    versions: Dict[str, str] = field(default_factory=collect_versions)

    def to_dict(self):
        return {
            'command': self.command,
            'parameters': self.parameters,
            'master_seed': self.master_seed,
            'started_at': self.started_at,
            'finished_at': self.finished_at,
            'outputs': self.outputs,
            'versions': self.versions,
        }

    def write(self, path):
        write_json(self.to_dict(), path)


def write_failure_bundle(directory, record, manifest=None):
    """Persist what is needed to replay one trial: its seed, its record and every matrix it produced."""
    bundle_path = os.path.join(directory, f'{record.kind}-{record.trial_index}')
    os.makedirs(bundle_path, exist_ok=True)
    written = []
    for name, matrix in sorted(record.artifacts.items()):
        matrix_path = os.path.join(bundle_path, f'{name}.txt')
        write_matrix(matrix, matrix_path)
        written.append(os.path.basename(matrix_path))
    document = {'record': record.to_dict(), 'files': written, 'manifest': manifest}
    write_json(document, os.path.join(bundle_path, 'bundle.json'))
    LOGGER.info(f'Reproduction bundle written to {bundle_path}')
    return bundle_path
