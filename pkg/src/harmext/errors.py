"""Exception types raised across the package."""


class HarmextError(Exception):
    """Base class for all package errors."""


class DegenerateCurve(HarmextError):
    """The curve speed vanishes (or nearly so) somewhere it is needed."""


class OrientationError(HarmextError):
    """A closed curve is traversed the wrong way round for an outward normal."""


class SelfIntersectingCurve(HarmextError):
    """The curve is not simple on the construction grid."""


class DivisionByZeroJet(HarmextError):
    """Reciprocal of a jet whose constant term vanishes."""


class InsufficientOrder(HarmextError):
    """Too few nonzero coefficients to fit a radius of convergence."""


class GridOnlyData(HarmextError):
    """An operation needs a coefficient representation but only samples exist."""


class OpenCurveUnsupported(HarmextError):
    """The operation is only defined on closed curves."""


class QuadratureFailure(HarmextError):
    """Adaptive quadrature did not reach its tolerance."""


class InversionFailure(HarmextError):
    """The flattening map could not be inverted at a point."""


class HypothesisNotDeclared(HarmextError):
    """A bound needs a declared property of the data that is missing."""


class InvariantViolation(HarmextError):
    """A computed quantity broke an inequality it must satisfy."""


class ConfigError(HarmextError):
    """Malformed job configuration."""


class StageError(HarmextError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
