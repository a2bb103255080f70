"""Exception hierarchy shared by the library and the command line."""


class McChaosError(Exception):
    """Base class for every error raised by this package."""

    kind = "error"


class InvalidArgument(McChaosError, ValueError):
    kind = "invalid-argument"


class AssemblyError(McChaosError):
    """A coefficient or forcing evaluation produced a non-finite value."""

    kind = "assembly-failure"

    def __init__(self, message, element=None, sample=None):
        self.element = element
        self.sample = sample
        where = []
        if sample is not None:
            where.append(f"sample {sample}")
        if element is not None:
            where.append(f"element {element}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class EvaluationError(McChaosError):
    kind = "evaluation-failure"


class ParseError(McChaosError):
    kind = "parse-failure"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SolverError(McChaosError):
    kind = "solver-failure"


class NumericalError(McChaosError):
    kind = "numerical-failure"


class UnsupportedBasis(McChaosError):
    kind = "unsupported-basis"
