"""Minimum- and maximum-entropy couplings of discrete distributions.

Local 2x2 mass-shifting descent to order-preserving (upper-triangular)
couplings, plus an exhaustive transportation-polytope vertex oracle for
small supports.
"""

from minent.probcore import (
    TOL_MASS,
    EntropyValue,
    ProbVector,
    SortedProbVector,
    cdf,
    entropy,
    h_c,
    h_c_interval_max,
    meet,
    sort_desc,
)
from minent.coupling import (
    Coupling,
    PermutationPair,
    are_equivalent,
    find_order_preserving_equivalent,
    independent,
    is_upper_triangular,
    joint_entropy,
    marginals,
    mutual_information,
    nw_corner,
    order_preserving_coupling,
    swap_cols,
    swap_rows,
)
from minent.localopt import (
    DescentTrace,
    TransformStep,
    TwoByTwo,
    clear_line,
    descend,
    lemma1_transform,
    lemma2_transform,
    min_entropy_2x2,
    scaling_identity_check,
    submatrix_update,
    unnormalized_entropy,
)
from minent.oracle import (
    OracleReport,
    VertexSet,
    enumerate_nw_vertices,
    enumerate_vertices,
    oracle_min,
    verify_independent_max,
    verify_main_theorem,
    verify_sandwich,
)

__version__ = "0.1.0"
