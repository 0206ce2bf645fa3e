"""Exact coefficient domains.

A coefficient is either a reduced representative of GF(q) (a Python ``int`` in
``[0, q)``) or a ``fractions.Fraction`` in lowest terms. Matrices carry the
field they were built over and every arithmetic step goes through it.
"""
import logging
from fractions import Fraction

from corank.constants import DEFAULT_PRIME
from corank.errors import ParameterError, ParseError

LOGGER = logging.getLogger(__name__)

PRIME_FIELD_MODE = 'prime-field'
RATIONAL_MODE = 'rational'
FIELD_MODES = (PRIME_FIELD_MODE, RATIONAL_MODE)

# Deterministic Miller-Rabin witnesses for every n < 3.3 * 10^24
_MILLER_RABIN_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_probable_prime(number):
    """Miller-Rabin; deterministic below 3.3 * 10^24."""
    if number < 2:
        return False
    for base in _MILLER_RABIN_BASES:
        if number % base == 0:
            return number == base
    odd, twos = number - 1, 0
    while odd % 2 == 0:
        odd //= 2
        twos += 1
    for base in _MILLER_RABIN_BASES:
        x = pow(base, odd, number)
        if x in (1, number - 1):
            continue
        for _ in range(twos - 1):
            x = x * x % number
            if x == number - 1:
                break
        else:
            return False
    return True


class PrimeField:
    mode = PRIME_FIELD_MODE
    zero = 0
    one = 1

    def __init__(self, q=DEFAULT_PRIME):
        if not is_probable_prime(q):
            message = f'Field modulus {q} is not prime.'
            LOGGER.critical(message)
            raise ParameterError(message)
        self.q = q

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self):
        return hash((self.mode, self.q))

    def __repr__(self):
        return f'PrimeField({self.q})'

    def normalize(self, value):
        if isinstance(value, Fraction):
            if value.denominator % self.q == 0:
                message = f'{value} has no image in GF({self.q}).'
                LOGGER.critical(message)
                raise ParameterError(message)
            return value.numerator * pow(value.denominator, -1, self.q) % self.q
        return int(value) % self.q

    def add(self, a, b):
        return (a + b) % self.q

    def sub(self, a, b):
        return (a - b) % self.q

    def mul(self, a, b):
        return a * b % self.q

    def neg(self, a):
        return -a % self.q

    def inv(self, a):
        if a % self.q == 0:
            raise ZeroDivisionError('zero has no inverse')
        return pow(a, -1, self.q)

    def div(self, a, b):
        return a * self.inv(b) % self.q

    def format_value(self, value):
        return str(value)

    def parse_value(self, text):
        if '/' in text:
            return self.normalize(Fraction(text))
        return self.normalize(int(text))

    def as_integer(self, value):
        return value


class RationalField:
    """Arbitrary-precision rationals; the oracle domain."""

    mode = RATIONAL_MODE
    q = 0
    zero = Fraction(0)
    one = Fraction(1)

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash(self.mode)

    def __repr__(self):
        return 'RationalField()'

    def normalize(self, value):
        return Fraction(value)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError('zero has no inverse')
        return 1 / a

    def div(self, a, b):
        return a / b

    def format_value(self, value):
        if value.denominator == 1:
            return str(value.numerator)
        return f'{value.numerator}/{value.denominator}'

    def parse_value(self, text):
        return Fraction(text)

    def as_integer(self, value):
        if value.denominator != 1:
            raise ValueError(f'{value} is not an integer')
        return value.numerator


def make_field(mode=PRIME_FIELD_MODE, q=DEFAULT_PRIME):
    if mode == PRIME_FIELD_MODE:
        return PrimeField(q)
    if mode == RATIONAL_MODE:
        return RationalField()
    message = f'Unknown coefficient mode "{mode}", expected one of {", ".join(FIELD_MODES)}.'
    LOGGER.critical(message)
    raise ParameterError(message)


def parse_field_header(tokens, line_number=1):
    """Build a field from the ``q mode`` part of an exchange-format header."""
    try:
        q = int(tokens[0])
        mode = tokens[1]
    except (IndexError, ValueError):
        raise ParseError('expected header "n q mode"', line_number)
    if mode not in FIELD_MODES:
        raise ParseError(f'unknown mode "{mode}"', line_number)
    try:
        return make_field(mode, q)
    except ParameterError as error:
        raise ParseError(str(error), line_number)
