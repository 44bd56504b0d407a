"""All-nearest-neighbour joins over block-stored Delaunay-graph indexes."""

from .ann import (
    AnnResult,
    SideTotals,
    ann_join,
    ann_join_bestfirst,
    ann_join_unseeded,
    brute_force_ann,
    oracle_mismatches,
)
from .baseline import (
    RTreeIndex,
    RTreeNode,
    RTreeStore,
    build_rtree,
    rtree_ann,
    rtree_nn,
    serialize_rtree,
    write_rtree,
)
from .bench import ExperimentSpec, gen_uniform, run_sweep, standard_sweeps
from .errors import (
    AnnJoinError,
    DegenerateInput,
    DuplicatePoints,
    EmptyQuery,
    ExhaustedGraph,
    IoFailure,
    NonFiniteCoordinate,
    RecordTooLarge,
    UnknownPoint,
    UnknownStart,
    VerificationMismatch,
)
from .geom import (
    DelaunayIndex,
    PointRecord,
    build_delaunay,
    build_neighbour_graph,
    in_circle,
    load_points_csv,
    orientation,
    save_points_csv,
    squared_distance,
)
from .nnsearch import NnAnswer, SearchStats, nn_search, nn_search_bestfirst
from .store import (
    BlockStore,
    VoronoiFileRecord,
    read_index,
    record_size,
    serialize_index,
    write_index,
)

__version__ = "0.1.0"
