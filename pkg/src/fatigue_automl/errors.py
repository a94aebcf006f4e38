"""Exception and warning types raised across the package."""


class FatigueAutoMLError(Exception):
    pass


# ingestion
class MissingColumn(FatigueAutoMLError):
    def __init__(self, name):
        super().__init__(f"missing column {name!r}")
        self.name = name


class ParseError(FatigueAutoMLError):
    def __init__(self, row, column, value=None):
        super().__init__(f"cannot parse {value!r} in column {column!r} at data row {row}")
        self.row = row
        self.column = column
        self.value = value


class RangeViolation(FatigueAutoMLError):
    """A cell outside its column's allowed range or level set."""

    def __init__(self, row, column, value):
        super().__init__(f"value {value!r} outside allowed domain of {column!r} at data row {row}")
        self.row = row
        self.column = column
        self.value = value

    def __eq__(self, other):
        return isinstance(other, RangeViolation) and (self.row, self.column, self.value) == (
            other.row,
            other.column,
            other.value,
        )

    def __hash__(self):
        return hash((self.row, self.column, str(self.value)))


class EmptyColumn(FatigueAutoMLError):
    def __init__(self, name):
        super().__init__(f"column {name!r} has no observed values")
        self.name = name


class SchemaMismatch(FatigueAutoMLError):
    pass


# preprocessing
class AllMissingColumn(FatigueAutoMLError):
    def __init__(self, name):
        super().__init__(f"column {name!r} has no observed training values to impute from")
        self.name = name


class DegenerateInput(FatigueAutoMLError):
    pass


# features / metrics
class ConstantColumn(FatigueAutoMLError):
    def __init__(self, name):
        super().__init__(f"column {name!r} is constant")
        self.name = name


class LengthMismatch(FatigueAutoMLError):
    pass


class EmptyBand(FatigueAutoMLError):
    pass


# learners
class WidthMismatch(FatigueAutoMLError):
    pass


class NonFiniteLoss(FatigueAutoMLError):
    pass


class NotIterative(FatigueAutoMLError):
    pass


class NotLinear(FatigueAutoMLError):
    pass


class InvalidHyperparameter(FatigueAutoMLError):
    pass


class TooFewRows(FatigueAutoMLError):
    pass


class SingularSystem(UserWarning):
    """Rank-deficient least-squares design; a minimum-norm solution was used."""


class BackgroundTooLarge(UserWarning):
    """Background sample was subsampled for the sampling-based explainer."""


class StageError(FatigueAutoMLError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage
