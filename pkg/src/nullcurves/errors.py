"""Exception types raised across the package."""


class NullCurveError(Exception):
    """Base class for all package errors."""


# domain
class DuplicatePuncture(NullCurveError, ValueError):
    pass


class NoAdmissibleRadius(NullCurveError):
    pass


class SampleCountMismatch(NullCurveError, ValueError):
    pass


class ZeroOnContour(NullCurveError):
    pass


class NonIntegralWinding(NullCurveError):
    pass


# quadric
class NotOnQuadric(NullCurveError, ValueError):
    pass


class NearOrigin(NullCurveError, ValueError):
    pass


class OutsideRetractionDomain(NullCurveError, ValueError):
    pass


class NoConvergence(NullCurveError):
    pass


class ZeroSpinor(NullCurveError, ValueError):
    pass


class SamplesTooCoarse(NullCurveError):
    pass


class DimensionNot3(NullCurveError, ValueError):
    pass


# weierstrass
class PoleAtSample(NullCurveError):
    pass


class NonzeroPeriods(NullCurveError):
    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class NonzeroRealPeriods(NonzeroPeriods):
    pass


class FlatData(NullCurveError):
    pass


class GNotHolomorphic(NullCurveError):
    pass


# convex integration
class BadMargin(NullCurveError, ValueError):
    pass


class Infeasible(NullCurveError):
    pass


class BudgetExceeded(NullCurveError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class StageError(NullCurveError):
    """Wraps an error raised inside one stage of a pipeline."""

    def __init__(self, stage, parameter, cause):
        super().__init__(f"stage {stage!r} failed for parameter {parameter!r}: {cause}")
        self.stage = stage
        self.parameter = parameter
        self.cause = cause


# spray
class BallExceeded(NullCurveError, ValueError):
    pass


class FlatOnLoop(NullCurveError):
    pass


class RankDeficient(NullCurveError):
    def __init__(self, message, rank=None, required=None):
        super().__init__(message)
        self.rank = rank
        self.required = required


class ClassChanged(NullCurveError):
    pass


# toolkit
class ParseError(NullCurveError, ValueError):
    def __init__(self, message, line=None, field=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.line = line
        self.field = field


class NonFiniteVertex(NullCurveError, ValueError):
    pass


class GridTooSmall(NullCurveError, ValueError):
    pass
