"""Exception hierarchy shared by every package"""


class PsseError(Exception):
    """Base class for all errors raised by the library"""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {
            "error": self.__class__.__name__,
            "message": str(self),
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    try:
        return value.tolist()
    except AttributeError:
        return str(value)


# grid
class CaseFormatError(PsseError):
    pass


class MissingBlock(CaseFormatError):
    pass


class MalformedRow(CaseFormatError):
    pass


class NoSlackBus(CaseFormatError):
    pass


class MultipleSlackBuses(CaseFormatError):
    pass


class DuplicateBusId(CaseFormatError):
    pass


class ZeroImpedanceBranch(PsseError):
    pass


class Diverged(PsseError):
    pass


class SingularJacobian(PsseError):
    pass


# shapes
class DimensionMismatch(PsseError, ValueError):
    pass


# measurement
class PlanLocationInvalid(PsseError):
    pass


class UnderdeterminedPlan(PsseError):
    pass


# solvers
class RankDeficient(PsseError):
    pass


class SingularGain(PsseError):
    pass


# training
class NonFiniteLoss(PsseError):
    pass


# forecasting
class SeriesTooShort(PsseError):
    pass


class IllConditioned(UserWarning):
    """Normal matrix too ill-conditioned for a plain least-squares fit"""


# pipeline
class ParseError(PsseError):
    pass


class ColumnMapInvalid(PsseError):
    pass


class DegenerateSeries(PsseError):
    pass


class DatasetGenerationError(Diverged):
    """Power flow failed at a generation step; `t` names the step"""

    def __init__(self, message, t=None, **details):
        super().__init__(message, t=t, **details)
        self.t = t


class SchemaMismatch(PsseError):
    pass


class CorruptFile(PsseError):
    pass


# reporting
class IoError(PsseError):
    pass
