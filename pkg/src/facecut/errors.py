"""Exception hierarchy.

Input problems (bad files, invalid states, infeasible requests) derive from
:class:`InputError`; failures of a numerical procedure derive from
:class:`NumericalFailure`. The CLI maps the two families to distinct exit codes.
"""


class FacecutError(Exception):
    """Base class for all library errors."""


class InputError(FacecutError):
    pass


class NumericalFailure(FacecutError):
    pass


class ValidationError(InputError):
    """A matrix or state violates its type invariants."""


class DimensionMismatch(InputError):
    pass


class ZeroMatrix(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


class SchemaError(InputError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class NotInSet(InputError):
    """The state does not satisfy the constraint set."""


class BadRank(InputError):
    pass


class BadFactorization(InputError):
    pass


class Infeasible(InputError):
    pass


class InputNotInCone(InputError):
    pass


class TailUnavailable(InputError):
    pass


class DirectionUnsupported(InputError):
    """A direction has components outside the support of the state."""


class DirectionZero(InputError):
    pass


class ExtremeMixedState(NumericalFailure):
    """A mixed state admits no value-preserving two-sided direction.

    Impossible for at most two constraints; occurs for three or more.
    """


class NumericalDependencyFailure(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass
