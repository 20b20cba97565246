"""Set-based multi-sensor estimation and confidence fusion with hybrid zonotopes."""

from .estimator import MeasurementSet, MotionModel, SensorEstimateState, predict, update
from .fusion import FeasibleSpace, FusedConfidenceSet, confidence_at, fuse, make_feasible_space, max_confidence_over
from .geometry import EmptySetError, contains_point, is_empty, support, vertices_2d, volume_2d
from .zonoset import (
    ConstrainedZonotope,
    HybridZonotope,
    Interval,
    affine_map,
    cartesian_product,
    generalized_intersection,
    make_interval,
    make_point,
    minkowski_sum,
    union_hybrid,
)

__version__ = "0.1.0"
