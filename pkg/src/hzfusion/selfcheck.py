"""Oracle suites comparing the set algebra and queries with brute force.

Each suite returns ``(passed, detail)``. Sizes default to a quick run; the
acceptance tests call the same functions with larger counts.
"""

from __future__ import annotations

import time

import numpy as np

from .fusion import confidence_at, fuse, make_feasible_space
from .geometry import contains_point, volume_2d
from .oracles import (
    PolytopeOracle,
    SetOracle,
    fused_counts,
    monte_carlo_area,
    point_cloud,
    pointwise_confidence,
    random_constrained_zonotope,
)
from .zonoset import (
    affine_map,
    cartesian_product,
    generalized_intersection,
    make_interval,
    minkowski_sum,
    union_hybrid,
)

OPERATIONS = ("affine_map", "cartesian_product", "minkowski_sum", "generalized_intersection", "union")
AMBIGUITY_BAND = 1e-6  # samples this close to the true boundary are skipped


def _small(rng, scale=1.0):
    return random_constrained_zonotope(rng, max_gens=4, max_cons=1, scale=scale)


def _shift_to(Z, point):
    return affine_map(np.eye(Z.dim), point - Z.center, Z)


def _operation_case(op: str, rng):
    """Random operands, the operation's result and a semantic membership oracle.

    The oracle maps sample points to signed distances (positive outside).
    """
    X1, X2 = _small(rng), _small(rng)
    o1, o2 = PolytopeOracle(point_cloud(X1)), PolytopeOracle(point_cloud(X2))
    if op == "affine_map":
        R = rng.normal(size=(2, 2))
        while abs(np.linalg.det(R)) < 0.2:
            R = rng.normal(size=(2, 2))
        s = rng.normal(size=2)
        Rinv = np.linalg.inv(R)
        # distances measured in the preimage; scaled back by the smallest singular value
        smin = np.linalg.svd(R, compute_uv=False).min()
        return affine_map(R, s, X1), lambda y: o1.signed_distance((y - s) @ Rinv.T) * smin
    if op == "cartesian_product":
        return cartesian_product(X1, X2), lambda x: np.maximum(
            o1.signed_distance(x[:, :2]), o2.signed_distance(x[:, 2:])
        )
    if op == "minkowski_sum":
        p1, p2 = point_cloud(X1), point_cloud(X2)
        osum = PolytopeOracle((p1[:, None, :] + p2[None, :, :]).reshape(-1, 2))
        return minkowski_sum(X1, X2), osum.signed_distance
    if op == "generalized_intersection":
        X2 = _shift_to(X2, o1.points.mean(axis=0))
        o2 = PolytopeOracle(point_cloud(X2))
        R = np.eye(2) if rng.random() < 0.5 else np.eye(2) + 0.3 * rng.normal(size=(2, 2))
        smax = np.linalg.svd(R, compute_uv=False).max()
        return generalized_intersection(X1, X2, R), lambda x: np.maximum(
            o1.signed_distance(x), o2.signed_distance(x @ R.T) / smax
        )
    if op == "union":
        X2 = _shift_to(X2, o1.points.mean(axis=0) + rng.normal(size=2) * 2.0)
        o2 = PolytopeOracle(point_cloud(X2))
        if rng.random() < 0.3:
            # union whose first operand is itself a union
            X3 = _small(rng)
            o3 = PolytopeOracle(point_cloud(X3))
            inner = union_hybrid(X1, X3)
            return union_hybrid(inner, X2), lambda x: np.minimum(
                np.minimum(o1.signed_distance(x), o3.signed_distance(x)), o2.signed_distance(x)
            )
        return union_hybrid(X1, X2), lambda x: np.minimum(o1.signed_distance(x), o2.signed_distance(x))
    raise ValueError(f"unknown operation {op!r}")


def membership_suite(
    rng, trials: int = 10, samples: int = 200, lp_samples: int = 10, tol: float = 1e-7, ops=OPERATIONS
):
    """Set-operation results versus semantic membership of their operands."""
    violations, checked = {}, 0
    for op in ops:
        bad = 0
        for _ in range(trials):
            Y, truth = _operation_case(op, rng)
            result = SetOracle(Y)
            pts = np.vstack([p.points for p in result.parts]) if result.parts else np.zeros((1, Y.dim))
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            pad = 0.25 * (hi - lo) + 0.1
            x = rng.uniform(lo - pad, hi + pad, size=(samples, Y.dim))
            dist = truth(x)
            keep = np.abs(dist) > AMBIGUITY_BAND
            x, inside = x[keep], dist[keep] <= 0
            checked += len(x)
            bad += int(np.sum(result.contains(x, tol) != inside))
            for k in rng.choice(len(x), size=min(lp_samples, len(x)), replace=False):
                bad += int(contains_point(Y, x[k], tol) != inside[k])
        violations[op] = bad
    total = sum(violations.values())
    return total == 0, f"{checked} samples, violations {violations}"


def volume_suite(rng, sets: int = 10, samples: int = 10**6, rtol: float = 0.01):
    """``volume_2d`` versus Monte-Carlo rejection estimates, plus the hexagon."""
    worst = 0.0
    for _ in range(sets):
        Z = random_constrained_zonotope(rng)
        mc = monte_carlo_area(Z, samples, rng)
        worst = max(worst, abs(volume_2d(Z) - mc) / mc)
    hexagon = make_interval([-1, -1], [1, 1])
    hexagon = minkowski_sum(hexagon, affine_map(np.array([[1.0], [1.0]]), None, make_interval([-1], [1])))
    hex_err = abs(volume_2d(hexagon) - 12.0)
    ok = worst <= rtol and hex_err <= 1e-6
    return ok, f"worst relative error {worst:.2e} (limit {rtol:g}), hexagon error {hex_err:.1e}"


def random_estimates(rng, n: int, max_gens: int = 6, max_cons: int = 3):
    return [random_constrained_zonotope(rng, max_gens=max_gens, max_cons=max_cons) for _ in range(n)]


def counts_suite(rng, trials: int = 30, gamma: int = 2):
    """Fused-set sizes against the closed-form counts, exact equality."""
    bad = 0
    for k in range(trials):
        n = 1 + k % 3
        ests = random_estimates(rng, n)
        conf = rng.uniform(0, 1, size=n)
        H = fuse(ests, conf, make_feasible_space(ests), check_containment=False).set
        expected = fused_counts(gamma, [X.n_gens for X in ests], [X.n_cons for X in ests])
        bad += (H.n_gens, H.n_bin, H.n_cons) != expected
    return bad == 0, f"{trials} trials, {bad} mismatches"


def pointwise_suite(rng, points: int = 60, tol: float = 1e-6):
    """``confidence_at`` versus the averaged-membership formula."""
    worst, total = 0.0, 0
    per_case = max(1, points // 6)
    while total < points:
        n = 1 + (total // per_case) % 3
        ests = [_shift_to(X, rng.uniform(-1, 1, size=2)) for X in random_estimates(rng, n, 4, 2)]
        conf = rng.uniform(0, 1, size=n)
        F = make_feasible_space(ests, 0.5)
        H = fuse(ests, conf, F)
        box = point_cloud(F.set)
        oracles = [PolytopeOracle(point_cloud(X)) for X in ests]
        m = 0
        while m < per_case and total < points:
            x = rng.uniform(box.min(axis=0) - 0.2, box.max(axis=0) + 0.2)
            if any(abs(o.signed_distance(x)[0]) < AMBIGUITY_BAND for o in oracles):
                continue
            worst = max(worst, abs(confidence_at(H, x) - pointwise_confidence(x, ests, conf, F.set)))
            m += 1
            total += 1
    return worst <= tol, f"{total} points, worst difference {worst:.1e}"


def run_suites(volume_rtol: float = 0.01, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    suites = {
        "membership": lambda: membership_suite(rng),
        "volume": lambda: volume_suite(rng, rtol=volume_rtol),
        "fused-counts": lambda: counts_suite(rng),
        "pointwise-confidence": lambda: pointwise_suite(rng),
    }
    results = {}
    for name, suite in suites.items():
        tic = time.perf_counter()
        ok, detail = suite()
        results[name] = (ok, f"{detail} [{time.perf_counter() - tic:.1f} s]")
    return results
