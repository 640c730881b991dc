"""Wold decompositions of isometries and doubly commuting tuples of isometries."""

from .exceptions import (
    ConsistencyError,
    DecompositionError,
    DomainError,
    GateError,
    InputError,
    ResourceError,
    WoldkitError,
)
from .subspace import (
    ToleranceConfig,
    Subspace,
    orthonormalize,
    kernel,
    range_space,
    image,
    join,
    intersect,
    orth_complement,
    subspace_minus,
    projector,
    principal_angles,
    subspace_distance,
    direct_sum_residual,
)
from .operators import (
    DefectReport,
    IsometryTuple,
    check_gate,
    defect_report,
    reducing_defect,
    restrict,
)
from .wold import (
    WoldDecomposition,
    shift_part,
    unitary_part_iterative,
    wandering_subspace,
    wold_decompose,
)
from .multi import (
    MultiWoldDecomposition,
    block_span,
    compare_decompositions,
    decompose_direct,
    decompose_recursive,
    generalized_wandering_identity,
    inner_core,
    partial_depth_agreement,
    slocinski_blocks,
    subsets,
    wandering_intersection,
)
from .fixtures import (
    FixtureSpec,
    build_fixture,
    build_mz_equivalence,
    build_polydisc,
    check_equivalence_conditions,
    joint_wandering,
)
from .estimators import MultiWoldDecomposer, WoldDecomposer

__version__ = "0.1.0"
