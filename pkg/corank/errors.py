class CorankError(Exception):
    """Base class of every error raised by corank."""


class EmptyInputError(CorankError, ValueError):
    pass


class ParameterError(CorankError, ValueError):
    pass


class HypothesisViolationError(ParameterError):
    """A configuration lies outside a theorem's hypotheses and no override was given."""


class CapacityError(CorankError, ValueError):
    pass


class StructuralFailureError(CorankError, RuntimeError):
    def __init__(self, message, residual=()):
        super().__init__(message)
        self.residual = tuple(sorted(residual))


class ParseError(CorankError, ValueError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f'line {line_number}: {message}'
        super().__init__(message)
        self.line_number = line_number


class SamplingError(CorankError, RuntimeError):
    pass


class UsageError(CorankError, ValueError):
    def __init__(self, message, valid_names=()):
        super().__init__(message)
        self.valid_names = tuple(valid_names)
