"""Distances and consensus for rooted mutation trees."""

from .consensus import (
    ConsensusReport,
    ConsensusTree,
    DistanceCache,
    closest_lower_bound,
    closest_score,
    consensus_report,
    mcat_consensus,
    median_lower_bound,
    median_score,
    midpoint_consensus,
    pairwise_distances,
)
from .distance import DistanceResult, MoveSequence, distance, isomorphic_mapping_distance, tree_distance
from .embed import TreeEmbedding, classical_mds
from .mcat import AlmostVTree, MCATSolution, align_contraction_roots, solve_mcat, solve_mcat_many
from .newick import (
    ContractionLabelError,
    IncompatibleCollectionError,
    MutationMatrix,
    NewickParseError,
    NotPerfectPhylogenyError,
    load_tree_set,
    matrix_to_tree,
    parse_newick,
    read_matrix_csv,
    serialize_newick,
    write_tree_set,
)
from .perm import (
    CycleSet,
    HeightError,
    Permutation,
    cycle_decomposition,
    cycles_to_tree,
    height2_distance,
    swap_distance,
    tree_to_cycles,
)
from .tree import (
    BracketSet,
    IllegalMoveError,
    IncomparableTreesError,
    MalformedTreeError,
    Move,
    Tree,
    apply_move,
    bracket_sets,
    contract,
    enumerate_moves,
    height,
    is_equal,
    neighbors,
    replay,
)

__all__ = [name for name in dir() if not name.startswith("_")]
