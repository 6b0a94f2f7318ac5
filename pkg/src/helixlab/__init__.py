"""Frenet apparatus and slant-helix detection for curves in E^n."""

__version__ = "0.1.0"

from .curves import (
    AnalyticCurve,
    SampledCurve,
    SplineCurve,
    UnitSpeedCurve,
    arc_length_reparameterize,
    derivative_jet,
    load_curve,
)
from .errors import (
    DegenerateCurve,
    DomainViolation,
    HelixLabError,
    InputError,
    NumericalError,
)
from .expr import Expression
from .frenet import FrenetApparatus, compute_apparatus, frenet_ode_residual, gram_schmidt_frame
from .slant import (
    DetectionReport,
    GSequence,
    compute_G_basis,
    detect_slant_helix,
    oracle_axis_svd,
    sigma_izumiya_takeuchi,
    solve_integration_constant,
)
from .synthesis import (
    CurvatureProfile,
    SynthesisRecord,
    constant_precession_curve,
    integrate_frenet_system,
    random_curvature_curve,
    synthesize_slant_helix,
    w_curve,
)
from .taylor import Taylor

__all__ = [
    "AnalyticCurve",
    "CurvatureProfile",
    "DegenerateCurve",
    "DetectionReport",
    "DomainViolation",
    "Expression",
    "FrenetApparatus",
    "GSequence",
    "HelixLabError",
    "InputError",
    "NumericalError",
    "SampledCurve",
    "SplineCurve",
    "SynthesisRecord",
    "Taylor",
    "UnitSpeedCurve",
    "arc_length_reparameterize",
    "compute_G_basis",
    "compute_apparatus",
    "constant_precession_curve",
    "derivative_jet",
    "detect_slant_helix",
    "frenet_ode_residual",
    "gram_schmidt_frame",
    "integrate_frenet_system",
    "load_curve",
    "oracle_axis_svd",
    "random_curvature_curve",
    "sigma_izumiya_takeuchi",
    "solve_integration_constant",
    "synthesize_slant_helix",
    "w_curve",
]
