"""Exception types shared across the package."""


class CoroflowError(Exception):
    """Base class for all package errors."""


class ParseError(CoroflowError):
    """Malformed configuration text."""


class TopologyError(CoroflowError):
    """Vessel tree violates a structural invariant (cycle, orphan, bad labels)."""


class UnknownSegment(CoroflowError):
    pass


class UnknownBranch(CoroflowError):
    pass


class RangeError(CoroflowError):
    """Design point outside the admissible box for its physiologic state."""


class NumericalDivergence(CoroflowError):
    """A state variable became non-finite during time integration."""


class InsufficientData(CoroflowError):
    pass


class CflViolation(CoroflowError):
    """Sub-stepping cannot satisfy the advective/diffusive stability bounds."""


class MismatchError(CoroflowError):
    """Hemodynamic solution and vessel tree (or injection window) disagree."""


class EmptyWindow(CoroflowError):
    pass


class DegenerateSeries(CoroflowError):
    pass


class ZeroMass(CoroflowError):
    """Concentration series has non-positive integral; transit time undefined."""


class MissingBranch(CoroflowError):
    pass


class EmptyInput(CoroflowError):
    pass


class EmptyAfterFilter(CoroflowError):
    pass


class ShapeError(CoroflowError):
    """Tensor shape incompatible with the network specification."""


class NonFiniteLoss(CoroflowError):
    """Training loss became NaN/Inf; aborted with diagnostics."""


class CampaignError(CoroflowError):
    """Too many failed runs in a simulation campaign."""
