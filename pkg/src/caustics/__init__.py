"""Affine equidistants, Wigner caustics and centre symmetry sets of
smooth closed planar curves, with singularity detection and the
numerical verification of their structural counting laws."""

from .algebra import (
    SetDistanceReport,
    compose_lambda,
    diameter,
    hausdorff,
    reconstruct,
    reingest,
    verify_composition,
    verify_css_invariance,
)
from .curves import (
    CurveSpec,
    Jet2,
    LoopSegment,
    SampledCurve,
    TrigSeries,
    curve_spec_to_json,
    detect_loops,
    evaluate_jet,
    inflexion_parameters,
    param_curve,
    parse_curve_spec,
    polyline_curve,
    rotation_number,
    sample_curve,
    sampled_from_points,
    support_curve,
)
from .equidistants import (
    EquidistantBranch,
    EquidistantSet,
    css,
    css_curvature,
    equidistant,
    equidistant_curvature,
    equidistant_normal,
    tangent_parallel_count,
    wigner_caustic,
)
from .errors import (
    CausticsError,
    CurveSpecError,
    LiftError,
    RegularityError,
    RenderError,
    SingularPairError,
)
from .pairing import (
    PairFamily,
    ParallelPair,
    antipodal_pairs_convex,
    curved_side,
    matching_derivative,
    opposing_curvature,
    pair_families,
    parallel_partners,
)
from .report import RunCheck, RunReport
from .singular import (
    CurveArc,
    ExistenceReport,
    ExistenceWindow,
    ParityReport,
    SingularEvent,
    SpectrumFamily,
    cusp_events,
    css_cusp_events,
    existence_windows,
    inflexion_events,
    loop_existence_window,
    parity_report,
    singular_lambda_spectrum,
    spectrum_range,
    verify_existence,
)

__version__ = "0.1.0"
