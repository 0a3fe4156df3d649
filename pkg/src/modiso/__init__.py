"""Closed points, invariants and isolation graphs of modular curves X_H."""

from .zmatrix import (
    ModulusMismatch,
    NotInvertible,
    ParseError,
    Residue,
    ZMatrix,
    format_matrix,
    mat_decode,
    mat_det,
    mat_encode,
    mat_inv,
    mat_mul,
    mat_reduce,
    parse_matrix,
    parse_matrix_list,
)
from .groups import (
    DoubleCoset,
    MatrixGroup,
    NotSubgroup,
    SubgroupLattice,
    TooLarge,
    closure,
    double_cosets,
    enumerate_subgroups_containing_minus_i,
    gl2,
    index,
    intersect_sl2,
    kernel_product_check,
    normalizer,
    plus_minus_identity,
    sl2,
    subset_product,
)
from .curves import (
    ClosedPointClass,
    CurveInvariants,
    InvalidAutomorphismGroup,
    closed_points_over_j,
    genus,
    geometric_components,
    inclusion_degree,
    map_point_conjugation,
    map_point_inclusion,
    point_degree,
)
from .galois import (
    DataError,
    ExceptionalJRow,
    GaloisImageRecord,
    borel,
    borel1,
    exceptional_row_for_j,
    exceptional_rows,
    image_at_level,
    level78_image,
    mod7_image,
)
from .isograph import (
    Edge,
    IsolationGraph,
    SurvivorReport,
    Vertex,
    build_full_graph,
    build_quotient_graph,
    condense_scc,
    export_dot,
    export_json,
    prune_riemann_roch,
    survivors_analysis,
)

__version__ = "0.1.0"
