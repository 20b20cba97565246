"""Queries on zonotopic sets: support, membership, emptiness, 2-D polygons.

Hybrid zonotopes are handled by enumerating binary assignments. Every
assignment ("leaf") whose purely-binary constraint rows hold is a constrained
zonotope, and each query solves one LP per leaf.
"""

from __future__ import annotations

import itertools
import threading
import weakref
from dataclasses import dataclass

import numpy as np

from .config import TOL
from .lp import BoxLpWorkspace, solve_lp
from .zonoset import ConstrainedZonotope, HybridZonotope, Interval, ZonoSet, lift_to_hybrid

MAX_BINARIES = 20


class EmptySetError(ValueError):
    """Raised by queries that are undefined on the empty set."""


@dataclass(frozen=True)
class VertexPolygon:
    vertices: np.ndarray  # (k, 2), counterclockwise
    closed: bool = True

    @property
    def area(self) -> float:
        return shoelace_area(self.vertices)

    def __len__(self):
        return len(self.vertices)


def _as_hybrid(X: ZonoSet) -> HybridZonotope:
    return X if isinstance(X, HybridZonotope) else lift_to_hybrid(X)


def binary_leaves(H: HybridZonotope) -> list[np.ndarray]:
    """Binary assignments not ruled out by rows without continuous terms."""
    p = H.n_bin
    if p == 0:
        return [np.zeros(0)]
    if p > MAX_BINARIES:
        raise ValueError(f"{p} binary factors is too many for exhaustive enumeration")
    combos = np.array(list(itertools.product((-1.0, 1.0), repeat=p)))
    pure = np.all(np.abs(H.Ac) <= 1e-14, axis=1) if H.n_gens else np.ones(H.n_cons, dtype=bool)
    if np.any(pure):
        resid = combos @ H.Ab[pure].T - H.b[pure]
        scale = 1.0 + np.abs(H.b[pure])
        combos = combos[np.all(np.abs(resid) <= 1e-9 * scale, axis=1)]
    return list(combos)


def _leaf_data(H: HybridZonotope, xb: np.ndarray):
    return H.center + H.Gb @ xb, H.b - H.Ab @ xb


def support_point(H: ZonoSet, direction, backend: str | None = None):
    """Return ``(max d.x, argmax x)`` over the set.

    Without an explicit backend, constrained zonotopes go through a cached
    warm-started simplex workspace and hybrid leaves through the default LP.
    """
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.size != H.dim:
        raise ValueError(f"direction has length {d.size}, set has dimension {H.dim}")
    if backend is None and _as_hybrid(H).n_bin == 0 and H.n_gens > 0:
        return _support_oracle(H, None)(d)
    H = _as_hybrid(H)
    best, arg = -np.inf, None
    obj = -(H.Gc.T @ d)
    for xb in binary_leaves(H):
        h, b = _leaf_data(H, xb)
        if H.n_gens == 0:
            if np.all(np.abs(b) <= TOL.membership) and float(d @ h) > best:
                best, arg = float(d @ h), h
            continue
        res = solve_lp(obj, H.Ac, b, backend=backend)
        if not res.feasible:
            continue
        val = float(d @ h) - res.value
        if val > best:
            best, arg = val, h + H.Gc @ res.x
    if arg is None:
        raise EmptySetError("support of an empty set")
    return best, arg


def support(H: ZonoSet, direction, backend: str | None = None) -> float:
    return support_point(H, direction, backend)[0]


def contains_point(H: ZonoSet, x, tol: float = TOL.membership, backend: str | None = None) -> bool:
    """True iff some admissible factor vector reproduces ``x`` within ``tol`` (inf-norm)."""
    H = _as_hybrid(H)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != H.dim:
        raise ValueError(f"point has length {x.size}, set has dimension {H.dim}")
    e, gamma = H.n_gens, H.dim
    # variables [beta, t]: minimize t with |h + Gc beta - x| <= t componentwise
    c = np.zeros(e + 1)
    c[-1] = 1.0
    A_ub = np.vstack([np.hstack([H.Gc, -np.ones((gamma, 1))]), np.hstack([-H.Gc, -np.ones((gamma, 1))])])
    A_eq = np.hstack([H.Ac, np.zeros((H.n_cons, 1))])
    lb = np.append(-np.ones(e), 0.0)
    ub = np.append(np.ones(e), np.inf)
    for xb in binary_leaves(H):
        h, b = _leaf_data(H, xb)
        if e == 0:
            if np.max(np.abs(h - x), initial=0.0) <= tol and np.all(np.abs(b) <= tol):
                return True
            continue
        b_ub = np.concatenate([x - h, h - x])
        res = solve_lp(c, A_eq, b, A_ub, b_ub, lb, ub, backend=backend)
        if res.feasible and res.value <= tol:
            return True
    return False


def is_empty(H: ZonoSet, backend: str | None = None) -> bool:
    if backend is None and _as_hybrid(H).n_bin == 0 and H.n_gens > 0:
        return not _workspace(H).feasible
    H = _as_hybrid(H)
    zero = np.zeros(H.n_gens)
    for xb in binary_leaves(H):
        _, b = _leaf_data(H, xb)
        if H.n_gens == 0:
            if np.all(np.abs(b) <= TOL.membership):
                return False
            continue
        if solve_lp(zero, H.Ac, b, backend=backend).feasible:
            return False
    return True


def interval_hull(H: ZonoSet, backend: str | None = None) -> Interval:
    gamma = H.dim
    probe = _support_oracle(H, backend)
    lo, hi = np.empty(gamma), np.empty(gamma)
    for i in range(gamma):
        unit = np.zeros(gamma)
        unit[i] = 1.0
        hi[i] = probe(unit)[0]
        lo[i] = -probe(-unit)[0]
    return Interval(np.minimum(lo, hi), np.maximum(lo, hi))


# -- planar polygons ------------------------------------------------------


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def shoelace_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def convex_hull_2d(points, tol: float = TOL.vertex_dedup) -> np.ndarray:
    """Monotone-chain hull, counterclockwise, collinear and duplicate points dropped."""
    pts = np.unique(np.round(np.asarray(points, dtype=float).reshape(-1, 2), 12), axis=0)
    if len(pts) == 0:
        return pts
    merged = [pts[0]]
    for p in pts[1:]:
        if np.all(np.linalg.norm(np.array(merged) - p, axis=1) > tol):
            merged.append(p)
    pts = np.array(sorted(map(tuple, merged)))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= tol * np.linalg.norm(out[-1] - out[-2]):
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3 or abs(shoelace_area(hull)) <= tol * tol:
        # collinear input: keep the two extreme points
        ends = [pts[0], pts[-1]]
        return np.array(ends if np.linalg.norm(ends[1] - ends[0]) > tol else ends[:1])
    return hull


_local = threading.local()


def _workspace(Z: ZonoSet) -> BoxLpWorkspace:
    # one cached workspace per set object and thread; sets are immutable
    cache = getattr(_local, "cache", None)
    if cache is None:
        cache = _local.cache = weakref.WeakKeyDictionary()
    ws = cache.get(Z)
    if ws is None:
        H = _as_hybrid(Z)
        ws = cache[Z] = BoxLpWorkspace(H.Ac, H.b)
    return ws


def _support_oracle(Z: ZonoSet, backend: str | None):
    """Support-point callable; warm-started simplex unless HiGHS is requested."""
    if backend == "highs":
        return lambda d: support_point(Z, d, backend)
    H = _as_hybrid(Z)
    if H.n_bin:
        return lambda d: support_point(H, d, backend)
    if H.n_gens == 0:
        return lambda d: support_point(H, d, "highs")
    ws = _workspace(Z)

    def probe(d):
        if not ws.feasible:
            raise EmptySetError("support of an empty set")
        res = ws.minimize(-(H.Gc.T @ d))
        x = H.center + H.Gc @ res.x
        return float(d @ x), x

    return probe


def vertices_2d(Z: ZonoSet, backend: str | None = None) -> VertexPolygon:
    """Vertices of a planar constrained zonotope by support-function search.

    Supports in eight compass directions seed the search. For each pair of
    neighbouring support points the set is probed along the outward normal of
    the chord joining them; a probe that does not clear the chord by more than
    ``vertex_chord * (1 + diameter)`` confirms the chord as an edge, otherwise
    the new point splits the pair and both halves are searched again.
    """
    if Z.dim != 2:
        raise ValueError(f"vertex enumeration needs a planar set, got dimension {Z.dim}")
    if isinstance(Z, HybridZonotope) and Z.n_bin:
        raise ValueError("vertex enumeration of hybrid zonotopes is per leaf only")

    probe = _support_oracle(Z, backend)
    angles = np.arange(8) * (np.pi / 4)
    dirs = [np.array([np.cos(a), np.sin(a)]) for a in angles]
    pts = [probe(d)[1] for d in dirs]  # raises EmptySetError
    diam = max(np.linalg.norm(p - q) for p in pts for q in pts)
    chord_tol = TOL.vertex_chord * (1.0 + diam)

    found = []

    def refine(da, pa, db, pb, depth):
        found.append(pa)
        if np.linalg.norm(pb - pa) <= TOL.vertex_dedup or depth > 60:
            return
        edge = pb - pa
        normal = np.array([edge[1], -edge[0]]) / np.linalg.norm(edge)
        # the chord normal lies between da and db for a convex set; guard anyway
        if _cross(da, normal) < -1e-12 or _cross(normal, db) < -1e-12:
            normal = (da + db) / np.linalg.norm(da + db)
        val, pm = probe(normal)
        if val - max(normal @ pa, normal @ pb) <= chord_tol:
            return
        refine(da, pa, normal, pm, depth + 1)
        refine(normal, pm, db, pb, depth + 1)

    for k in range(8):
        refine(dirs[k], pts[k], dirs[(k + 1) % 8], pts[(k + 1) % 8], 0)
    return VertexPolygon(convex_hull_2d(found))


def volume_2d(Z: ZonoSet, backend: str | None = None) -> float:
    """Area of a planar constrained zonotope; 0 for empty or degenerate sets."""
    if Z.dim != 2:
        raise ValueError(f"area is only defined here for planar sets, got dimension {Z.dim}")
    try:
        poly = vertices_2d(Z, backend)
    except EmptySetError:
        return 0.0
    return max(poly.area, 0.0)
