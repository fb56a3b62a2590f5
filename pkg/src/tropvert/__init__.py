"""tropvert: exact wall-crossing calculus in the tropical vertex group.

Scattering diagrams over truncated formal power series, their consistent
completions, the tropical curves hiding inside them, and the enumerative
invariants (relative Gromov-Witten numbers, multiple-cover contributions,
BPS counts) they encode.
"""

from tropvert.series import (
    RingContext,
    TruncatedSeries,
    exp_series,
    log_one_plus,
    log_series,
    primitive,
    rat,
    rat_str,
    wedge,
)
from tropvert.derivations import (
    LogDerivation,
    WallCrossing,
    act,
    apply_derivation,
    bracket,
    compose_and_log,
    compose_crossings,
    exp_action,
)
from tropvert.scattering import (
    GenericityError,
    LoopSpec,
    ScatteringDiagram,
    Wall,
    collide,
    diagram_from_json,
    diagram_to_json,
    loop_is_identity,
    minimalize,
    origin_loop,
    path_ordered_product,
    same_diagram,
    scatter_at_origin,
    scatter_by_perturbation,
)
from tropvert.tropical import (
    TropicalCurve,
    WeightData,
    aggregate_log_f,
    curve_from_ray,
    ntrop,
)
from tropvert.invariants import (
    BPSReport,
    GradedPartition,
    InsufficientOrderError,
    InvariantTable,
    OrderedPartition,
    bps_aggregate,
    bps_invert,
    commutator_coeffs,
    degeneration_check,
    gw_from_scattering,
    gw_graded,
    m_p_d,
    r_d,
    r_rd,
)

__version__ = "0.1.0"

__all__ = [
    "RingContext",
    "TruncatedSeries",
    "exp_series",
    "log_one_plus",
    "log_series",
    "primitive",
    "rat",
    "rat_str",
    "wedge",
    "LogDerivation",
    "WallCrossing",
    "act",
    "apply_derivation",
    "bracket",
    "compose_and_log",
    "compose_crossings",
    "exp_action",
    "GenericityError",
    "LoopSpec",
    "ScatteringDiagram",
    "Wall",
    "collide",
    "diagram_from_json",
    "diagram_to_json",
    "loop_is_identity",
    "minimalize",
    "origin_loop",
    "path_ordered_product",
    "same_diagram",
    "scatter_at_origin",
    "scatter_by_perturbation",
    "TropicalCurve",
    "WeightData",
    "aggregate_log_f",
    "curve_from_ray",
    "ntrop",
    "BPSReport",
    "GradedPartition",
    "InsufficientOrderError",
    "InvariantTable",
    "OrderedPartition",
    "bps_aggregate",
    "bps_invert",
    "commutator_coeffs",
    "degeneration_check",
    "gw_from_scattering",
    "gw_graded",
    "m_p_d",
    "r_d",
    "r_rd",
]
