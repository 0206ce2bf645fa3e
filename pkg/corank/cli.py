import argparse
import logging
import math
import os
import sys

from corank.config import EXPERIMENT_NAMES, ExperimentConfig, load_config, resolve_seed
from corank.constants import BRUTE_FORCE_CAP, DEFAULT_LOCATION, DEFAULT_NUM_WORKERS, DEFAULT_PRIME
from corank.errors import CorankError, ParameterError, StructuralFailureError
from corank.experiments import run_campaign
from corank.field import PrimeField
from corank.graph import combinatorial_rank, graph_of, min_deficiency_witness, neighborhood, write_graph
from corank.logger import Logger
from corank.matrix import DIAGONAL_MODES, NONZERO_DIAGONAL, apply_mask, bernoulli_mask, random_weights
from corank.matrix import read_matrix, write_matrix
from corank.predicates import GoodnessParams, evaluate_predicates
from corank.rank import exact_rank
from corank.sampling import WEIGHT_STREAM, derive_seed
from corank.structure import AUTO_MODE, EXACT_MODE, STRUCTURAL_MODE, UNOBSTRUCTED_MODES, build_decomposition
from corank.structure import largest_unobstructed_size

LOGGER = logging.getLogger('corank')

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_ERROR = 2

SAMPLE_FILES = ('mask', 'weights', 'matrix', 'graph')


def _add_output_arguments(parser):
    parser.add_argument(
        '-o',
        '--out',
        type=str,
        required=False,
        default=DEFAULT_LOCATION,
        help='The directory where results and logs are written.',
    )
    parser.add_argument(
        '-v',
        '--verbose',
        action='store_true',
        required=False,
        default=False,
        help='Pass this flag to log per-trial detail.',
    )


def _add_sampling_arguments(parser):
    parser.add_argument(
        '--n',
        type=int,
        required=False,
        default=None,
        help='The matrix size n.',
    )
    parser.add_argument(
        '--p',
        type=float,
        required=False,
        default=None,
        help='The sparsification probability p.',
    )
    parser.add_argument(
        '--c',
        type=float,
        required=False,
        default=None,
        help='Pass c instead of p to use p = c ln n / n.',
    )
    parser.add_argument(
        '--s',
        type=int,
        required=False,
        default=None,
        help='The obstruction parameter s.',
    )
    parser.add_argument(
        '--seed',
        type=int,
        required=False,
        default=None,
        help='The master seed; falls back to the CORANK_SEED environment variable.',
    )
    parser.add_argument(
        '--diagonal-mode',
        type=str,
        choices=DIAGONAL_MODES,
        required=False,
        default=None,
        help='Whether the diagonal of W is all zero, all nonzero, or mixed.',
    )
    parser.add_argument(
        '--prime',
        type=int,
        required=False,
        default=None,
        help='The prime modulus of the field the ranks are computed over.',
    )


def _add_campaign_arguments(parser):
    _add_sampling_arguments(parser)
    parser.add_argument(
        '--trials',
        type=int,
        required=False,
        default=None,
        help='The number of trials to run.',
    )
    parser.add_argument(
        '--workers',
        type=int,
        required=False,
        default=None,
        help='The number of concurrent worker threads.',
    )
    parser.add_argument(
        '--override-hypotheses',
        action='store_true',
        required=False,
        default=False,
        help='Pass this flag to run outside the hypotheses of the theorem under test.',
    )
    parser.add_argument(
        '--d',
        type=int,
        required=False,
        default=None,
        help='The degree of the d-regular campaign.',
    )
    parser.add_argument(
        '--rho',
        type=float,
        required=False,
        default=None,
        help='The indicator probability of the Littlewood-Offord campaigns.',
    )
    parser.add_argument(
        '--epsilon',
        type=float,
        required=False,
        default=None,
        help='The margin around the ln n / n threshold.',
    )
    parser.add_argument(
        '--weight-model',
        type=str,
        required=False,
        default=None,
        help='Pass "random" to draw a fresh weight matrix for every trial.',
    )
    parser.add_argument(
        '--weight-redraws',
        type=int,
        required=False,
        default=None,
        help='The number of weight matrices drawn per fixed mask.',
    )
    parser.add_argument(
        '--redraw-masks',
        type=int,
        required=False,
        default=None,
        help='The number of fixed masks used by the weight-independence check.',
    )
    parser.add_argument(
        '--lo-trials',
        type=int,
        required=False,
        default=None,
        help='The number of Monte Carlo trials per Littlewood-Offord estimate.',
    )
    parser.add_argument(
        '--dimensions',
        type=str,
        required=False,
        default=None,
        help='A comma separated list of dimensions D for the linear Littlewood-Offord campaign.',
    )


CAMPAIGN_FLAGS = (
    'n',
    'p',
    'c',
    's',
    'seed',
    'diagonal_mode',
    'prime',
    'trials',
    'workers',
    'd',
    'rho',
    'epsilon',
    'weight_model',
    'weight_redraws',
    'redraw_masks',
    'lo_trials',
    'dimensions',
)


class CorankCli:
    def __init__(self, argv=None):
        parser = argparse.ArgumentParser(
            description=(
                'Exact ranks of sparsified symmetric matrices, their combinatorial characterization, and seeded'
                ' campaigns that test it.'
            )
        )
        subparsers = parser.add_subparsers(dest='command')
        subparsers.required = True

        sample_parser = subparsers.add_parser('sample', help='Write one sampled W, mask, Q and G(Q).')
        _add_sampling_arguments(sample_parser)
        _add_output_arguments(sample_parser)

        rank_parser = subparsers.add_parser('rank', help='Report exact, combinatorial and structural ranks.')
        rank_parser.add_argument('matrix_path', type=str, help='A matrix in the exchange format.')
        rank_parser.add_argument(
            '--s',
            type=int,
            required=False,
            default=3,
            help='The obstruction parameter s of the structural decomposition.',
        )
        rank_parser.add_argument(
            '--mode',
            type=str,
            choices=UNOBSTRUCTED_MODES,
            required=False,
            default=AUTO_MODE,
            help='Enumerate subsets exactly, use the T / T1 decomposition, or pick exact when n is small enough.',
        )
        rank_parser.add_argument(
            '-w',
            '--witness',
            action='store_true',
            required=False,
            default=False,
            help='Pass this flag to also print a set S attaining the combinatorial rank.',
        )
        _add_output_arguments(rank_parser)

        check_parser = subparsers.add_parser('check', help='Evaluate every graph predicate on G(Q).')
        check_parser.add_argument('matrix_path', type=str, help='A matrix in the exchange format.')
        check_parser.add_argument(
            '--s',
            type=int,
            required=False,
            default=2,
            help='The obstruction parameter s.',
        )
        check_parser.add_argument(
            '--p',
            type=float,
            required=True,
            help='The probability the matrix was sampled with; sets the degree thresholds.',
        )
        _add_output_arguments(check_parser)

        verify_parser = subparsers.add_parser('verify', help='Run the campaign a configuration file describes.')
        verify_parser.add_argument('config_path', type=str, help='A flat YAML configuration or a run manifest.')
        verify_parser.add_argument(
            '--workers',
            type=int,
            required=False,
            default=None,
            help='The number of concurrent worker threads.',
        )
        _add_output_arguments(verify_parser)

        run_parser = subparsers.add_parser('run', help='Run a campaign configured by flags.')
        run_parser.add_argument('experiment', type=str, help=f'One of: {", ".join(EXPERIMENT_NAMES)}.')
        _add_campaign_arguments(run_parser)
        _add_output_arguments(run_parser)

        parser.parse_args(argv, namespace=self)

    def run(self):
        """Run the selected command and return its exit status."""
        Logger.setup_logging(LOGGER, self.out, level=logging.DEBUG if self.verbose else logging.INFO)
        try:
            return getattr(self, f'command_{self.command}')()
        except (CorankError, OSError) as error:
            LOGGER.critical(f'corank {self.command} failed: {error}')
            return EXIT_ERROR

    def command_sample(self):
        if self.n is None:
            raise ParameterError('sample needs --n.')
        if (self.p is None) == (self.c is None):
            raise ParameterError('sample needs exactly one of --p and --c.')
        seed = resolve_seed(self.seed)
        p = self.p if self.p is not None else self.c * math.log(self.n) / self.n
        field = PrimeField(self.prime or DEFAULT_PRIME)

        diagonal_mode = self.diagonal_mode or NONZERO_DIAGONAL
        weights = random_weights(self.n, diagonal_mode, derive_seed(seed, WEIGHT_STREAM), field)
        mask = bernoulli_mask(self.n, p, seed)
        matrix = apply_mask(weights, mask)

        os.makedirs(self.out, exist_ok=True)
        paths = {name: os.path.join(self.out, f'{name}.txt') for name in SAMPLE_FILES}
        write_matrix(mask.as_matrix(field), paths['mask'])
        write_matrix(weights.as_matrix(), paths['weights'])
        write_matrix(matrix, paths['matrix'])
        write_graph(graph_of(matrix), paths['graph'])
        LOGGER.info(f'Sample n={self.n}, p={p}, seed={seed} written to {self.out}')
        return EXIT_OK

    def command_rank(self):
        matrix = read_matrix(self.matrix_path)
        graph = graph_of(matrix)
        print(f'exact_rank: {exact_rank(matrix)}')
        print(f'combinatorial_rank: {combinatorial_rank(graph)}')
        print(f'structural_rank: {self._structural_rank(graph)}')
        if self.witness:
            witness = min_deficiency_witness(graph)
            print(f'witness: {" ".join(str(v) for v in witness)}')
            print(f'witness_neighborhood: {" ".join(str(v) for v in sorted(neighborhood(graph, witness)))}')
        return EXIT_OK

    def _structural_rank(self, graph):
        """The largest (s - 1)-unobstructed set; structural mode reports the T / T1 prediction instead."""
        mode = self.mode
        if mode == AUTO_MODE:
            mode = EXACT_MODE if graph.n <= BRUTE_FORCE_CAP else STRUCTURAL_MODE
        if mode == EXACT_MODE:
            return str(largest_unobstructed_size(graph, self.s - 1, mode=EXACT_MODE))
        try:
            decomposition = build_decomposition(graph, self.s)
        except StructuralFailureError as error:
            return f'failed ({error})'
        certified = '' if decomposition.certified else ' (structural estimate)'
        return f'{decomposition.predicted_rank}{certified}'

    def command_check(self):
        matrix = read_matrix(self.matrix_path)
        graph = graph_of(matrix)
        params = GoodnessParams.derive(graph.n, self.p, self.s)
        for name, outcome in evaluate_predicates(graph, params).items():
            line = f'{name}: {outcome.value}'
            if outcome.reason:
                line += f' ({outcome.reason})'
            if outcome.certificate is not None:
                line += f' certificate: {" ".join(str(v) for v in outcome.certificate)}'
            print(line)
        return EXIT_OK

    def command_verify(self):
        config = load_config(self.config_path)
        return self._run_config(config, f'verify {self.config_path}')

    def command_run(self):
        mapping = {'experiment': self.experiment}
        for flag in CAMPAIGN_FLAGS:
            value = getattr(self, flag)
            if value is not None:
                mapping[flag] = value
        if self.override_hypotheses:
            mapping['override_hypotheses'] = True
        config = ExperimentConfig.from_mapping(mapping)
        return self._run_config(config, f'run {self.experiment}')

    def _run_config(self, config, command):
        workers = self.workers or config.workers or DEFAULT_NUM_WORKERS
        result = run_campaign(config, location=self.out, workers=workers, command=command)
        if result.violations:
            LOGGER.error(f'{result.violations} trials violated a hard invariant.')
            return EXIT_VIOLATION
        return EXIT_OK


def main(argv=None):
    sys.exit(CorankCli(argv).run())


if __name__ == '__main__':
    main()
