"""Steinhaus-type lattice point problems for general norms.

Find balls that contain exactly n points of a lattice window, under lp,
l_inf or a custom three-dimensional gauge, and probe the perturbation
condition that makes such balls exist.
"""
from .errors import (
    BudgetExhausted,
    HorizonError,
    PointFileError,
    SteinhausError,
    WindowTooLarge,
    WitnessSearchExhausted,
)
from .estimators import BallCounter, SPrimeScanner, SteinhausBallFinder
from .norms import (
    Custom3DParams,
    NormSpec,
    boundary_scale,
    edge_tangent_slope,
    example_surface_height,
    norm_eval,
    parse_norm,
)
from .pointset import (
    IndexedPointSet,
    PointSet,
    build_index,
    count_in_ball,
    count_in_ball_scan,
    lattice_window,
    load_points,
    save_points,
    sorted_distances,
)
from .search import (
    BallCertificate,
    SearchConfig,
    critical_scale,
    find_ball_growth,
    find_ball_sorted,
    split_shell,
    validate_certificate,
)
from .sprime import (
    ImpossibilityCertificate,
    NotFound,
    ScanReport,
    Witness,
    certify_no_witness_linf,
    find_witness,
    sprime_scan,
    strict_convexity_probe,
)

__version__ = "0.1.0"
