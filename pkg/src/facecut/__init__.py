"""Faces of constrained quantum state spaces, pure-state decompositions and
energy-constrained optimization in finite dimension."""

from .core import (
    Constraint,
    ConstraintSet,
    DensityOperator,
    HermitianObservable,
    Kind,
    PureState,
    SubnormalizedState,
    expected_value,
    membership,
    support_projector,
)
from .decomposition import (
    Decomposition,
    bipartite_decompose,
    caratheodory_reduce,
    partial_trace,
    pure_decompose,
    split_once,
    step_to_boundary,
)
from .faces import (
    direction_space,
    face_dimension_unconstrained,
    face_membership,
    face_report,
    face_report_subnormalized,
    ri_membership,
    segment_oracle,
)
from .io import load_matrix, load_problem, save_matrix, save_problem
from .optimize import (
    KrausChannel,
    apply_channel,
    constrained_linear_max,
    enorm_dual,
    enorm_pure,
    min_output_entropy,
    von_neumann_entropy,
)

__version__ = "0.1.0"
