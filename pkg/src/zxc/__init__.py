"""Self-intersection statistics of periodic billiard flows and lattice walks."""

__version__ = "0.1.0"

from .billiard import (BilliardTable, CollisionState, Disk, HorizonViolation,
                       OverlappingObstacles, TangentialHit, billiard_map,
                       default_table, mean_free_path, run_orbit,
                       sample_mu_bar, table_from_triples, validate_table)
from .geometry import Point2, Segment, UnitVec
from .limitlab import (BprimeViolation, EmpiricalDistribution,
                       appendixA_check, appendixB_check, brownian_L2_oracle,
                       estimate_constants, ks_distance, localtime_props_check,
                       strong_convergence_check, theorem1_check,
                       theorem2_check, toy_theorem_check)
from .localtime import local_time, occupation_cross, occupation_square
from .seeding import derive_seed
from .selfcross import (OverlapDetected, TrajectoryArc, continuous_count,
                        nu_from_orbit, nu_n, nu_n_quotient)
from .zext import (BilliardSystem, DoublingToy, WalkPath, birkhoff_path,
                   llt_check, variance_estimate)

__all__ = [
    "__version__",
    "BilliardTable", "CollisionState", "Disk", "HorizonViolation",
    "OverlappingObstacles", "TangentialHit", "billiard_map", "default_table",
    "mean_free_path", "run_orbit", "sample_mu_bar", "table_from_triples",
    "validate_table",
    "Point2", "Segment", "UnitVec",
    "BprimeViolation", "EmpiricalDistribution", "appendixA_check",
    "appendixB_check", "brownian_L2_oracle", "estimate_constants",
    "ks_distance", "localtime_props_check", "strong_convergence_check",
    "theorem1_check", "theorem2_check", "toy_theorem_check",
    "local_time", "occupation_cross", "occupation_square",
    "derive_seed",
    "OverlapDetected", "TrajectoryArc", "continuous_count", "nu_from_orbit",
    "nu_n", "nu_n_quotient",
    "BilliardSystem", "DoublingToy", "WalkPath", "birkhoff_path", "llt_check",
    "variance_estimate",
]
