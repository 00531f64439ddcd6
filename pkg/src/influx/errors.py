"""Exception hierarchy for the arrivals-analysis pipeline.

Two broad families matter to callers: `ValidationError` (bad input or
parameters, CLI exit code 2) and `ConvergenceError` (an iterative fit gave
up, CLI exit code 3).
"""


class InfluxError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(InfluxError):
    """Input data or parameters violate a precondition."""


class ConvergenceError(InfluxError):
    """An iterative solver failed to converge."""


class MissingColumn(ValidationError):
    def __init__(self, name):
        super().__init__(f"required column {name!r} not found in header")
        self.name = name


class DateGap(ValidationError):
    def __init__(self, date):
        super().__init__(f"missing day {date.isoformat()} (dates must be consecutive)")
        self.date = date


class NegativeCount(ValidationError):
    def __init__(self, row):
        super().__init__(f"negative count at data row {row}")
        self.row = row


class NonIntegerCount(ValidationError):
    def __init__(self, row):
        super().__init__(f"non-integer count at data row {row}")
        self.row = row


class EmptySeries(ValidationError):
    def __init__(self):
        super().__init__("series contains no data rows")


class NotWholeWeeks(ValidationError):
    def __init__(self, remainder):
        super().__init__(f"retained series is not a whole number of weeks "
                         f"({remainder} day(s) left over)")
        self.remainder = remainder


class TooShort(ValidationError):
    pass


class SingularDesign(ValidationError):
    pass


class ZeroVariance(ValidationError):
    pass


class BadLag(ValidationError):
    pass


class BadWindow(ValidationError):
    pass


class BadParam(ValidationError):
    pass


class BadRank(ValidationError):
    pass


class NoCrossing(ValidationError):
    pass


class TooFewPoints(ValidationError):
    pass


class RankDeficient(ValidationError):
    pass


class InsufficientHistory(ValidationError):
    pass


class DegenerateData(ValidationError):
    pass


class UnstablePolynomial(InfluxError):
    """AR polynomial has roots on or inside the unit circle (unstable)."""


class NoConvergence(ConvergenceError):
    def __init__(self, what="fit", iterations=None):
        msg = f"{what} did not converge"
        if iterations is not None:
            msg += f" after {iterations} iterations"
        super().__init__(msg)
        self.iterations = iterations
