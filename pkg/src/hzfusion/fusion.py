"""Fusion of per-sensor estimates into a confidence-annotated hybrid zonotope.

The fused set lives in ``R^(dim + 1)``. Its last coordinate is a confidence
and, for a state ``x`` inside the feasible space, the largest confidence
paired with ``x`` is the average over all sensors of ``c_i`` for those
sensors whose estimate contains ``x`` (sensors not containing ``x`` add 0).

Construction: each sensor's estimate is lifted to ``X_i x {c_i}`` and united
with the background ``F x {0}``. A scaffold ``F x [0, 1]^n`` with an extra
coordinate summing the ``n`` confidence slots is then intersected with every
lifted union, slot ``i`` tied to sensor ``i``. Projecting out the slots and
dividing the sum by ``n`` gives the fused set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .geometry import EmptySetError, interval_hull, is_empty, support, support_point
from .zonoset import (
    ConstrainedZonotope,
    HybridZonotope,
    Interval,
    affine_map,
    cartesian_product,
    generalized_intersection,
    make_interval,
    make_point,
    to_record,
    union_hybrid,
)

CONTAINMENT_DIRECTIONS = 32


@dataclass(frozen=True)
class FeasibleSpace:
    set: ConstrainedZonotope

    def __post_init__(self):
        if self.set.n_cons:
            raise ValueError("feasible space must be an unconstrained zonotope")


@dataclass(frozen=True)
class FusedConfidenceSet:
    set: HybridZonotope
    n: int
    source_confidences: tuple = field(default_factory=tuple)

    @property
    def dim(self) -> int:
        """Dimension of the state space (the fused set has one more)."""
        return self.set.dim - 1

    def to_record(self) -> dict:
        rec = to_record(self.set)
        rec["n"] = self.n
        rec["source_confidences"] = [float(c) for c in self.source_confidences]
        return rec


def make_feasible_space(estimates, margin: float = 0.1) -> FeasibleSpace:
    """Interval hull of the estimates, grown by ``margin`` on every axis."""
    if not estimates:
        raise ValueError("need at least one estimate")
    if margin < 0:
        raise ValueError(f"margin must be nonnegative, got {margin}")
    dim = estimates[0].dim
    lo, hi = np.full(dim, np.inf), np.full(dim, -np.inf)
    for i, X in enumerate(estimates):
        if X.dim != dim:
            raise ValueError(f"estimate {i} has dimension {X.dim}, expected {dim}")
        try:
            box = interval_hull(X)
        except EmptySetError:
            raise EmptySetError(f"estimate {i} is empty") from None
        lo, hi = np.minimum(lo, box.lower), np.maximum(hi, box.upper)
    return FeasibleSpace(make_interval(lo - margin, hi + margin))


def _directions(k: int) -> np.ndarray:
    ang = np.arange(k) * (2 * np.pi / k)
    return np.column_stack([np.cos(ang), np.sin(ang)])


def _check_contained(X, F: FeasibleSpace, index: int):
    if X.dim == 2:
        dirs = _directions(CONTAINMENT_DIRECTIONS)
    else:
        dirs = np.vstack([np.eye(X.dim), -np.eye(X.dim)])
    for d in dirs:
        sx, sf = support(X, d), support(F.set, d)
        if sx > sf + 1e-7 * (1.0 + abs(sf)):
            raise ValueError(f"estimate {index} leaves the feasible space in direction {d.round(3).tolist()}")


def _clean_confidences(confidences) -> np.ndarray:
    c = np.asarray(confidences, dtype=float).reshape(-1)
    tol = TOL.confidence_clamp
    bad = np.flatnonzero(~np.isfinite(c) | (c < -tol) | (c > 1.0 + tol))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"confidence {i} is {c[i]}, outside [0, 1]")
    return np.clip(c, 0.0, 1.0)


def fuse(estimates, confidences, F: FeasibleSpace, check_containment: bool = True) -> FusedConfidenceSet:
    """Build the fused confidence set from ``n`` estimates and their confidences.

    Args:
        estimates: Constrained zonotopes, one per sensor.
        confidences: One value in ``[0, 1]`` per estimate.
        F: Feasible space containing every estimate.
        check_containment: Verify containment in ``F`` by support dominance.
    """
    n = len(estimates)
    if n == 0:
        raise ValueError("need at least one estimate")
    if len(confidences) != n:
        raise ValueError(f"{n} estimates but {len(confidences)} confidences")
    c = _clean_confidences(confidences)
    dim = F.set.dim
    for i, X in enumerate(estimates):
        if X.dim != dim:
            raise ValueError(f"estimate {i} has dimension {X.dim}, feasible space {dim}")
        if check_containment:
            _check_contained(X, F, i)

    # scaffold: (x, slots, sum of slots) with x in F and slots in [0, 1]^n
    lift = np.vstack([np.eye(dim + n), np.concatenate([np.zeros(dim), np.ones(n)])])
    H = affine_map(lift, None, cartesian_product(F.set, make_interval(np.zeros(n), np.ones(n))))

    background = cartesian_product(F.set, make_point([0.0]))
    for i, X in enumerate(estimates):
        branch = union_hybrid(cartesian_product(X, make_point([c[i]])), background)
        R = np.zeros((dim + 1, dim + n + 1))
        R[:dim, :dim] = np.eye(dim)
        R[dim, dim + i] = 1.0
        H = generalized_intersection(H, branch, R)

    proj = np.zeros((dim + 1, dim + n + 1))
    proj[:dim, :dim] = np.eye(dim)
    proj[dim, -1] = 1.0 / n
    return FusedConfidenceSet(affine_map(proj, None, H), n, tuple(float(v) for v in c))


def max_confidence_over(H: FusedConfidenceSet, region) -> float:
    """Largest confidence paired with some state in ``region``; 0 if none."""
    if region.dim != H.dim:
        raise ValueError(f"region has dimension {region.dim}, fused set covers {H.dim}")
    R = np.hstack([np.eye(H.dim), np.zeros((H.dim, 1))])
    restricted = generalized_intersection(H.set, region, R)
    axis = np.zeros(H.dim + 1)
    axis[-1] = 1.0
    try:
        value, _ = support_point(restricted, axis)
    except EmptySetError:
        return 0.0
    return float(np.clip(value, 0.0, 1.0))


def confidence_at(H: FusedConfidenceSet, x) -> float:
    return max_confidence_over(H, make_point(x))


def grid_axes(bounds: Interval, resolution) -> list[np.ndarray]:
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (bounds.dim,))
    if np.any(res < 2):
        raise ValueError("resolution must be at least 2 per axis")
    return [np.linspace(lo, hi, r) for lo, hi, r in zip(bounds.lower, bounds.upper, res)]


def confidence_grid(H: FusedConfidenceSet, bounds: Interval, resolution) -> np.ndarray:
    """Confidence on a regular grid, ``out[i, j] = C(x0[i], x1[j])``.

    Args:
        H: Fused confidence set.
        bounds: Box whose corners are grid nodes.
        resolution: Nodes per axis, an integer or one integer per axis.
    """
    if bounds.dim != H.dim:
        raise ValueError(f"bounds have dimension {bounds.dim}, fused set covers {H.dim}")
    axes = grid_axes(bounds, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.array([confidence_at(H, p) for p in pts])
    return vals.reshape(mesh[0].shape)


def write_grid_csv(path, grid: np.ndarray, bounds: Interval, resolution) -> None:
    """CSV matrix (rows follow the first axis) under a single header line."""
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (bounds.dim,))
    header = (
        f"# lower={' '.join(repr(float(v)) for v in bounds.lower)}; "
        f"upper={' '.join(repr(float(v)) for v in bounds.upper)}; "
        f"resolution={' '.join(str(int(r)) for r in res)}"
    )
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(grid):
            writer.writerow([repr(float(v)) for v in row])


def fused_is_empty(H: FusedConfidenceSet) -> bool:
    return is_empty(H.set)
