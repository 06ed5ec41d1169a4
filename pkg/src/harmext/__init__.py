"""Harmonic extension of planar vector fields from analytic boundary curves."""

from .analytic import FourierSeries, PolySeries, RationalFunction
from .boundary import (
    BoundaryData,
    CompatibilityReport,
    GraphCauchyData,
    Verdict,
    compatibility,
    graph_F,
    graph_H,
    hilbert_matrix,
    hilbert_transform,
    theta,
)
from .curve import CurveKind, CurveModel, collar_width, frame_at, curve_jet
from .distance import DistanceProfile, NodeRecord, dstar, fourier_lower_bound, local_distance
from .errors import (
    ConfigError,
    DegenerateCurve,
    DivisionByZeroJet,
    GridOnlyData,
    HarmextError,
    HypothesisNotDeclared,
    InsufficientOrder,
    InvariantViolation,
    InversionFailure,
    OpenCurveUnsupported,
    OrientationError,
    QuadratureFailure,
    SelfIntersectingCurve,
    StageError,
)
from .extension import FieldSample, LocalSolution, PatchedExtension, eval_field, extend_on_grid, local_series
from .series import (
    LocalJet,
    MajorantParams,
    RadiusEstimate,
    RadiusMethod,
    brute_r0_oracle,
    lambda_coeff_det,
    lambda_jet,
    majorant_table,
    r0,
)

__version__ = "0.1.0"
