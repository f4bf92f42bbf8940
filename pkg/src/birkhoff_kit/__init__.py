"""Exact Birkhoff polynomials, jet spans, torsion indices and domain bounds."""
from .birkhoff_solver import (
    BirkhoffPolynomial,
    birkhoff_limit,
    birkhoff_poly,
    is_coherent,
    newton_iterates,
    undetermined_coefficients_oracle,
    verify_solution,
)
from .correspondence import (
    ClearedSystem,
    Correspondence,
    clear_denominators,
    local_series,
    poincare_system,
    recenter,
    truncate_correspondence,
    truncation_family,
)
from .domain_geometry import (
    ConvergenceReport,
    PoleDiskDomain,
    ResonanceTubeDomain,
    cauchy_derivative_bound,
    convergence_report,
    diophantine_margin,
    pole_membership,
    tail_bound,
    term_bound,
    tube_membership,
)
from .errors import (
    BirkhoffKitError,
    ComputationError,
    IncoherentFamilyError,
    MonotonicityError,
    NotRegularError,
    PoleError,
    SingularJacobianError,
    TruncationError,
    ValidationError,
)
from .exact_algebra import (
    ExactScalar,
    PolyRational,
    SDElement,
    TruncatedSeries,
    parse_polynomial,
    poly_rational_expand,
    scalar,
    sd_validate,
    series_invert_unit,
    series_mul,
    series_substitute,
)
from .span_lab import (
    AffineSubspace,
    JetSpanChain,
    KMSCertificate,
    SpanChain,
    affine_span,
    image_span_sample,
    jet_span_map,
    kms_certificate,
    relative_jet_span,
    span_chain,
    torsion_index,
)
from .tracer import Polyline, TraceGrid, emit_plot, grid_eval, marching_squares, parse_csv

__version__ = "0.1.0"
