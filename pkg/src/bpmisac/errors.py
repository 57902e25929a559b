class BpmIsacError(Exception):
    """Base class for package errors."""


class BeamSelectionError(BpmIsacError):
    """No admissible set of K beam pairs exists among the candidates."""


class InfeasibleAllocationError(BpmIsacError):
    """The communication MSE budget cannot be met even with zero sensing power."""


class NonMonotoneObjectiveError(BpmIsacError):
    """The alternating optimizer increased its objective beyond tolerance."""


class NumericalError(BpmIsacError):
    pass
