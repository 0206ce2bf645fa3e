import os

DEFAULT_LOCATION = os.path.expanduser('~/corank')
DEFAULT_NUM_WORKERS = os.cpu_count() or 1
SEED_ENV_VAR = 'CORANK_SEED'

# Mersenne prime 2^61 - 1
DEFAULT_PRIME = (1 << 61) - 1
# Largest prime below 2^23; products of a 64-term dot product stay below 2^53
FAST_PRIME = 8388593

DEFAULT_ORACLE_CAP = 64
DEFAULT_ENUMERATION_CAP = 6
BRUTE_FORCE_CAP = 22
EXACT_GOODNESS_CAP = 18
CIRCUIT_SEARCH_BUDGET = 250000

# Sparse elimination hands the active block to a dense kernel past these bounds
DENSE_SWITCH_DENSITY = 0.1
DENSE_SWITCH_MIN_ORDER = 48
DENSE_BLOCK_SIZE = 64

DEFAULT_LO_TRIALS = 100000
LO_CHUNK_SIZE = 4096

DEFAULT_REGULAR_RETRIES = 10000
DEFAULT_EPSILON = 0.2
DEFAULT_WEIGHT_REDRAWS = 5
DEFAULT_REDRAW_MASKS = 20

# Desk-scale stand-ins for "almost surely"; missing one is a warning, never a failure
EXPECTED_RANK_AGREEMENT = 0.98
EXPECTED_WEIGHT_CONSTANCY = 0.99
EXPECTED_STRUCTURAL_AGREEMENT = 0.95
EXPECTED_WITNESS_RATE = 0.95
EXPECTED_DIAGONAL_MATCH = 0.95
EXPECTED_LO_SCALING_RATIO = 3.0
EXPECTED_QUADRATIC_ENVELOPE = 5.0
EXPECTED_QUADRATIC_RATE = 0.95
EXPECTED_FULL_RANK = 0.85
EXPECTED_ZERO_ROW_GAP = 0.1
EXPECTED_NONSYMMETRIC_SINGULARITY = 0.1
EXPECTED_CYCLE_SINGULARITY = 0.5
EXPECTED_CUBIC_SINGULARITY = 0.1
EXPECTED_ORACLE_STD_ERRORS = 4.0
