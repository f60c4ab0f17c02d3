"""Bisectors, Minkowski cells and lattice coverings for gauge (Minkowski) metrics."""
from .bisector import (
    PLChain,
    SInterval,
    bisector_2d_exact,
    classify_facets,
    continuity_probe,
    midpoint_closed_form,
    midpoint_map,
    piece_bound,
    piece_count,
    s_interval,
)
from .cell import (
    CellOracle,
    StarPolygon,
    cell_membership,
    cell_report,
    cell_volume,
    covering_radius,
    in_D,
    minkowski_cell_2d,
    relevant_vectors,
    verify_tiling,
)
from .covering import LatticeParam2D, OptimizationReport, density, feasibility, optimize
from .geometry import (
    Body,
    DiscBicone,
    EuclideanBall,
    GeometryError,
    Lattice,
    SymmetricPolytope,
    gauge,
    hausdorff_distance,
    minkowski_distance,
)

__version__ = "0.1.0"
