"""Exception hierarchy.

Errors fall into three families so callers (the CLI in particular) can map
them to exit codes without enumerating every class: bad inputs, numerical
failures, and unreachable frontier targets.
"""


class TbpError(Exception):
    """Base class for every error raised by this package."""


class InputError(TbpError, ValueError):
    """Malformed or inconsistent input data or configuration."""


class NumericalError(TbpError, ArithmeticError):
    """A computation produced a non-finite or ill-posed result."""


# --- market data -----------------------------------------------------------

class MissingColumn(InputError):
    def __init__(self, column, path=None):
        self.column = column
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {column!r}{where}")


class UnparsableRow(InputError):
    def __init__(self, line, reason):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class NonPositivePrice(InputError):
    def __init__(self, line, column, value):
        self.line = line
        self.column = column
        super().__init__(f"line {line}: non-positive {column} price {value!r}")


class DuplicateDate(InputError):
    def __init__(self, date):
        self.date = date
        super().__init__(f"duplicate date {date}")


class MisalignedCalendars(InputError):
    def __init__(self, asset):
        self.asset = asset
        super().__init__(f"asset {asset!r} covers a different month range")


class TooFewMonths(InputError):
    pass


# --- rnn core --------------------------------------------------------------

class ShapeMismatch(InputError):
    pass


class LengthMismatch(InputError):
    pass


class StaleCache(TbpError):
    """Backward pass requested on a cache produced by older parameters."""


class EmptyTrainSet(InputError):
    pass


class SchemaMismatch(InputError):
    pass


class CorruptFile(InputError):
    pass


class TrainingDiverged(NumericalError):
    pass


# --- evaluation / portfolio ------------------------------------------------

class EmptyRecords(InputError):
    pass


class MissingReturn(InputError):
    def __init__(self, asset):
        self.asset = asset
        super().__init__(f"no realized return for asset {asset!r}")


class MisalignedPredictions(InputError):
    pass


class ReturnBelowMinusOne(NumericalError):
    pass


# --- frontier --------------------------------------------------------------

class WindowTooShort(InputError):
    pass


class RankDeficient(NumericalError):
    pass


class GridMismatch(InputError):
    pass


class TargetOutOfRange(TbpError):
    """Target lies outside the frontier; ``nearest`` is the closest point."""

    def __init__(self, target, axis, nearest):
        self.target = target
        self.axis = axis
        self.nearest = nearest
        super().__init__(
            f"target {axis} {target!r} outside frontier range; nearest "
            f"achievable point theta={nearest.theta!r} risk={nearest.risk!r} "
            f"return={nearest.ret!r}"
        )


class NonBracketable(TbpError):
    """Frontier is not monotone around the target; several thetas match."""

    def __init__(self, target, axis, candidates):
        self.target = target
        self.axis = axis
        self.candidates = list(candidates)
        super().__init__(
            f"target {axis} {target!r} is bracketed by {len(self.candidates)} "
            f"frontier segments: thetas {self.candidates}"
        )
