"""Brute-force reference computations used by ``selfcheck`` and the tests.

None of these go through the LP layer. A constrained zonotope is converted to
a vertex list by enumerating vertices of its factor polytope directly: a
vertex of ``{beta in [-1, 1]^e | A beta = b}`` has at least ``e - rank(A)``
coordinates at a bound, so fixing every such choice and solving the
remaining square system finds all of them. This is exponential and only
meant for small sets (``e`` up to about 12).
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .zonoset import ConstrainedZonotope, ZonoSet


def _pin_extremes(A: np.ndarray, b: np.ndarray, tol: float = 1e-9):
    """Fix factors forced to a bound by a row that can only be met at an extreme.

    Returns ``(fixed values with NaN for free factors, consistent)``.
    """
    e = A.shape[1]
    val = np.full(e, np.nan)
    changed = True
    while changed:
        changed = False
        free = np.isnan(val)
        rest = b - A[:, ~free] @ val[~free]
        reach = np.abs(A[:, free]).sum(axis=1)
        for r in range(A.shape[0]):
            scale = tol * (1.0 + abs(b[r]) + reach[r])
            if reach[r] <= scale:
                if abs(rest[r]) > 1e-8 * (1.0 + abs(b[r])):
                    return val, False
                continue
            if abs(rest[r]) > reach[r] + scale:
                return val, False
            if abs(abs(rest[r]) - reach[r]) <= scale:
                cols = np.flatnonzero(free & (np.abs(A[r]) > 0))
                val[cols] = np.sign(A[r, cols]) * np.sign(rest[r])
                changed = True
                break
    return val, True


def factor_vertices(A: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """All vertices of ``{beta in [-1, 1]^e | A beta = b}`` (possibly with repeats)."""
    e = A.shape[1]
    if A.shape[0]:
        val, ok = _pin_extremes(A, b, tol)
        if not ok:
            return np.zeros((0, e))
        fixed = ~np.isnan(val)
        if fixed.any():
            sub = factor_vertices(A[:, ~fixed], b - A[:, fixed] @ val[fixed], tol)
            out = np.tile(val, (len(sub), 1))
            out[:, ~fixed] = sub
            return out
    if e == 0:
        ok = np.all(np.abs(b) <= 1e-8 * (1 + np.abs(b)))
        return np.zeros((1 if ok else 0, 0))
    if A.shape[0] == 0:
        return np.array(list(itertools.product((-1.0, 1.0), repeat=e))).reshape(-1, e)
    r = np.linalg.matrix_rank(A)
    out = []
    for free in itertools.combinations(range(e), r):
        free = list(free)
        fixed = [j for j in range(e) if j not in free]
        Af = A[:, free]
        if np.linalg.matrix_rank(Af) < r:
            continue
        for signs in itertools.product((-1.0, 1.0), repeat=len(fixed)):
            rhs = b - A[:, fixed] @ np.array(signs) if fixed else b
            sol, *_ = np.linalg.lstsq(Af, rhs, rcond=None)
            if np.max(np.abs(Af @ sol - rhs), initial=0.0) > 1e-8 * (1 + np.abs(rhs).max(initial=0)):
                continue
            if np.any(np.abs(sol) > 1 + tol):
                continue
            beta = np.empty(e)
            beta[free] = sol
            beta[fixed] = signs
            out.append(beta)
    return np.array(out).reshape(-1, e)


def point_cloud(Z: ConstrainedZonotope) -> np.ndarray:
    """Image of the factor-polytope vertices; their hull is the set."""
    V = factor_vertices(Z.A, Z.b)
    return Z.center + V @ Z.generators.T


class PolytopeOracle:
    """Vectorized membership test for the convex hull of a point cloud."""

    def __init__(self, points: np.ndarray):
        pts = np.unique(np.round(np.asarray(points, dtype=float), 12), axis=0)
        self.empty = len(pts) == 0
        self.points = pts
        self.equations = None
        if self.empty:
            return
        dim = pts.shape[1]
        # work in the affine hull so that flat sets are handled too
        self.origin = pts.mean(axis=0)
        _, s, vt = np.linalg.svd(pts - self.origin, full_matrices=True)
        rank = int(np.sum(s > 1e-9 * max(1.0, s.max(initial=0.0))))
        self.basis = vt[:rank]
        self.normal_space = vt[rank:]
        local = (pts - self.origin) @ self.basis.T
        if rank == 0:
            self.equations = np.zeros((0, 1))
        elif rank == 1:
            lo, hi = local.min(), local.max()
            self.equations = np.array([[1.0, -hi], [-1.0, lo]])
        else:
            try:
                self.equations = ConvexHull(local).equations
            except QhullError:
                self.equations = ConvexHull(local, qhull_options="QJ").equations
        self.dim = dim

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        """Positive outside; max violation over facets and affine-hull offset."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.empty:
            return np.full(len(x), np.inf)
        d = x - self.origin
        off = np.linalg.norm(d @ self.normal_space.T, axis=1) if len(self.normal_space) else np.zeros(len(x))
        local = d @ self.basis.T
        if len(self.equations):
            facet = np.max(local @ self.equations[:, :-1].T + self.equations[:, -1], axis=1)
        else:
            facet = np.zeros(len(x))
        return np.maximum(off, facet) if len(self.normal_space) else facet

    def contains(self, x, tol: float = 1e-9) -> np.ndarray:
        return self.signed_distance(x) <= tol

    @property
    def volume(self) -> float:
        if self.empty or len(self.basis) < self.dim:
            return 0.0
        return float(ConvexHull(self.points).volume)


class SetOracle:
    """Union of polytope oracles, one per feasible binary leaf."""

    def __init__(self, X: ZonoSet):
        if isinstance(X, ConstrainedZonotope):
            leaves = [X]
        else:
            leaves = [X.leaf(xb) for xb in itertools.product((-1.0, 1.0), repeat=X.n_bin)]
        self.parts = [PolytopeOracle(point_cloud(Z)) for Z in leaves]
        self.parts = [p for p in self.parts if not p.empty]

    @property
    def empty(self) -> bool:
        return not self.parts

    def signed_distance(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if not self.parts:
            return np.full(len(x), np.inf)
        return np.min([p.signed_distance(x) for p in self.parts], axis=0)

    def contains(self, x, tol: float = 1e-9) -> np.ndarray:
        return self.signed_distance(x) <= tol


def bounding_rectangle(points: np.ndarray):
    """Minimum-area enclosing rectangle ``(rotation, lower, upper)`` of planar points.

    One side of the optimal rectangle is collinear with a hull edge, so every
    hull edge direction is tried. ``rotation`` maps world to rectangle frame.
    """
    pts = np.asarray(points, dtype=float)
    try:
        hull = pts[ConvexHull(pts).vertices]
    except (QhullError, ValueError):
        hull = pts
    best = None
    for a, b in zip(hull, np.roll(hull, -1, axis=0)):
        edge = b - a
        norm = np.linalg.norm(edge)
        if norm == 0.0:
            continue
        u = edge / norm
        rot = np.array([u, [-u[1], u[0]]])
        local = hull @ rot.T
        lo, hi = local.min(axis=0), local.max(axis=0)
        area = float(np.prod(hi - lo))
        if best is None or area < best[0]:
            best = (area, rot, lo, hi)
    if best is None:
        return np.eye(2), pts.min(axis=0), pts.max(axis=0)
    return best[1], best[2], best[3]


def monte_carlo_area(Z: ConstrainedZonotope, samples: int, rng: np.random.Generator) -> float:
    """Rejection-sampling estimate of a planar set's area.

    Samples are drawn in the minimum-area bounding rectangle, which a convex
    set fills to at least one half, so the relative standard error stays
    below ``1 / sqrt(samples)``.
    """
    oracle = PolytopeOracle(point_cloud(Z))
    if oracle.empty or len(oracle.basis) < 2:
        return 0.0
    rot, lo, hi = bounding_rectangle(oracle.points)
    box = float(np.prod(hi - lo))
    pts = rng.uniform(lo, hi, size=(samples, 2)) @ rot
    return box * float(np.mean(oracle.contains(pts)))


def pointwise_confidence(x, estimates, confidences, F) -> float:
    """Average over sensors of ``c_i`` if ``x`` lies in estimate ``i``; 0 outside ``F``."""
    x = np.asarray(x, dtype=float)
    if not PolytopeOracle(point_cloud(F)).contains(x)[0]:
        return 0.0
    hits = [c for X, c in zip(estimates, confidences) if PolytopeOracle(point_cloud(X)).contains(x)[0]]
    return float(sum(hits)) / len(estimates)


def fused_counts(gamma: int, gens, cons) -> tuple[int, int, int]:
    """Expected ``(continuous generators, binary generators, constraints)`` of a fused set."""
    n = len(gens)
    return (3 + gamma) * n + gamma + sum(gens), 2 * n, (4 + gamma) * n + sum(cons)


def random_constrained_zonotope(
    rng: np.random.Generator, dim: int = 2, max_gens: int = 6, max_cons: int = 3, scale: float = 1.0
) -> ConstrainedZonotope:
    """Random full-dimensional constrained zonotope.

    The right-hand side is ``A @ beta0`` with ``beta0`` well inside the box,
    so the factor polytope has nonempty relative interior.
    """
    e = int(rng.integers(dim, max_gens + 1))
    nc = int(rng.integers(0, min(max_cons, e - dim) + 1))
    G = rng.normal(size=(dim, e)) * scale
    while np.linalg.matrix_rank(G) < dim:
        G = rng.normal(size=(dim, e)) * scale
    A = rng.normal(size=(nc, e))
    beta0 = rng.uniform(-0.5, 0.5, size=e)
    return ConstrainedZonotope(rng.normal(size=dim) * scale, G, A, A @ beta0)
