"""quadlift: polynomial-system quadratization, rank-one semidefinite lifting,
and spectrahedron geometry at desk scale."""

from .encode import (
    PseudoSpecEncoding,
    StrictEquations,
    VariableLayout,
    build_encoding,
    check_rank_one_member,
    encode_compact,
    lift,
    lift_compact,
    normalize_relations,
    project,
    strict_to_equations,
)
from .errors import (
    DegreeError,
    DimensionMismatchError,
    LiftInfeasibleError,
    PolyParseError,
    QuadliftError,
    RelationError,
    TraceBoundError,
)
from .geometry import (
    SimplexWeights,
    caratheodory_combine,
    dist_to_hull,
    hull_distance,
    hull_membership,
    min_norm_point,
)
from .poly import (
    Polynomial,
    PolySystem,
    QuadCoeffs,
    Relation,
    parse_poly,
    print_poly,
    quad_coeffs,
)
from .quadratize import (
    QuadSystem,
    SubstitutionTable,
    lift_point,
    quadratize,
    verify_equivalence,
)
from .search import (
    QcqpInstance,
    RankOneLocus,
    boundary_rank_check,
    enumerate_rank_one,
    qcqp_check,
    trace_slice_pseudo_check,
)
from .spectra import (
    Pencil,
    SpectrahedronSpec,
    eigh,
    feasibility,
    frobenius,
    minimize_linear,
    pencil_to_slice,
    project_psd,
    rank_one_factor,
    slice_to_pencil,
)

__all__ = [
    "DegreeError",
    "DimensionMismatchError",
    "LiftInfeasibleError",
    "Pencil",
    "PolyParseError",
    "Polynomial",
    "PolySystem",
    "PseudoSpecEncoding",
    "QcqpInstance",
    "QuadCoeffs",
    "QuadSystem",
    "QuadliftError",
    "RankOneLocus",
    "Relation",
    "RelationError",
    "SimplexWeights",
    "SpectrahedronSpec",
    "StrictEquations",
    "SubstitutionTable",
    "TraceBoundError",
    "VariableLayout",
    "boundary_rank_check",
    "build_encoding",
    "caratheodory_combine",
    "check_rank_one_member",
    "dist_to_hull",
    "eigh",
    "encode_compact",
    "enumerate_rank_one",
    "feasibility",
    "frobenius",
    "hull_distance",
    "hull_membership",
    "lift",
    "lift_compact",
    "lift_point",
    "min_norm_point",
    "minimize_linear",
    "normalize_relations",
    "parse_poly",
    "pencil_to_slice",
    "print_poly",
    "project",
    "project_psd",
    "qcqp_check",
    "quad_coeffs",
    "quadratize",
    "rank_one_factor",
    "slice_to_pencil",
    "strict_to_equations",
    "trace_slice_pseudo_check",
    "verify_equivalence",
]

__version__ = "0.1.0"
