import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hzfusion.oracles import PolytopeOracle, SetOracle, point_cloud, random_constrained_zonotope
from hzfusion.zonoset import (
    ConstrainedZonotope,
    HybridZonotope,
    Interval,
    affine_map,
    cartesian_product,
    from_record,
    generalized_intersection,
    lift_to_hybrid,
    make_interval,
    make_point,
    minkowski_sum,
    to_record,
    union_hybrid,
)

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def test_interval_box():
    Z = make_interval([0, -1], [2, 3])
    assert np.allclose(Z.center, [1, 1])
    assert np.allclose(Z.generators, np.diag([1, 2]))
    assert Z.n_cons == 0


def test_interval_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        Interval([1, 0], [0, 1])


def test_point_has_no_generators():
    P = make_point([1.5, -2])
    assert P.n_gens == 0 and P.dim == 2


def test_arrays_are_read_only():
    Z = make_interval([0, 0], [1, 1])
    with pytest.raises(ValueError):
        Z.center[0] = 5


def test_shape_validation():
    with pytest.raises(ValueError):
        ConstrainedZonotope([0, 0], np.eye(3), np.zeros((0, 3)), [])
    with pytest.raises(ValueError):
        ConstrainedZonotope([0, 0], np.eye(2), np.ones((1, 3)), [0])
    with pytest.raises(ValueError):
        HybridZonotope([0, 0], np.eye(2), np.ones((2, 1)), np.zeros((1, 2)), np.zeros((1, 2)), [0])


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        make_point([np.nan, 0])


def test_affine_map_dimension_check():
    with pytest.raises(ValueError):
        affine_map(np.eye(3), None, make_interval([0, 0], [1, 1]))


def test_operation_counts():
    X = random_constrained_zonotope(np.random.default_rng(0), max_gens=5, max_cons=2)
    Y = random_constrained_zonotope(np.random.default_rng(1), max_gens=5, max_cons=2)
    S = minkowski_sum(X, Y)
    assert (S.n_gens, S.n_cons) == (X.n_gens + Y.n_gens, X.n_cons + Y.n_cons)
    C = cartesian_product(X, Y)
    assert C.dim == 4 and C.n_gens == X.n_gens + Y.n_gens
    I = generalized_intersection(X, Y)
    assert I.n_cons == X.n_cons + Y.n_cons + 2
    U = union_hybrid(X, Y)
    assert (U.n_gens, U.n_bin, U.n_cons) == (X.n_gens + Y.n_gens + 2, 2, X.n_cons + Y.n_cons + 3)


def test_results_stay_constrained_for_constrained_operands():
    X = make_interval([0, 0], [1, 1])
    assert isinstance(minkowski_sum(X, X), ConstrainedZonotope)
    assert isinstance(generalized_intersection(X, X), ConstrainedZonotope)
    assert isinstance(union_hybrid(X, X), HybridZonotope)
    assert isinstance(minkowski_sum(union_hybrid(X, X), X), HybridZonotope)


def test_union_of_disjoint_boxes_membership():
    U = union_hybrid(make_interval([0, 0], [1, 1]), make_interval([3, 3], [4, 4]))
    oracle = SetOracle(U)
    assert oracle.contains([[0.5, 0.5], [3.5, 3.9], [0, 0], [4, 4]]).all()
    assert not oracle.contains([[2, 2], [1.5, 0.5], [3.5, 0.5]]).any()


def _samples(rng, oracle_pts, n=400):
    lo, hi = oracle_pts.min(axis=0), oracle_pts.max(axis=0)
    pad = 0.3 * (hi - lo) + 0.1
    return rng.uniform(lo - pad, hi + pad, size=(n, oracle_pts.shape[1]))


@given(seeds)
def test_minkowski_sum_matches_vertex_sums(seed):
    rng = np.random.default_rng(seed)
    X = random_constrained_zonotope(rng, max_gens=4, max_cons=1)
    Y = random_constrained_zonotope(rng, max_gens=4, max_cons=1)
    p, q = point_cloud(X), point_cloud(Y)
    truth = PolytopeOracle((p[:, None] + q[None]).reshape(-1, 2))
    got = SetOracle(minkowski_sum(X, Y))
    x = _samples(rng, truth.points)
    d = truth.signed_distance(x)
    keep = np.abs(d) > 1e-6
    assert np.array_equal(got.contains(x[keep], 1e-7), d[keep] <= 0)


@given(seeds)
def test_intersection_is_conjunction(seed):
    rng = np.random.default_rng(seed)
    X = random_constrained_zonotope(rng, max_gens=4, max_cons=1)
    Y = random_constrained_zonotope(rng, max_gens=4, max_cons=1)
    Y = affine_map(np.eye(2), X.center - Y.center, Y)
    ox, oy = PolytopeOracle(point_cloud(X)), PolytopeOracle(point_cloud(Y))
    got = SetOracle(generalized_intersection(X, Y))
    x = _samples(rng, ox.points)
    d = np.maximum(ox.signed_distance(x), oy.signed_distance(x))
    keep = np.abs(d) > 1e-6
    assert np.array_equal(got.contains(x[keep], 1e-7), d[keep] <= 0)


@given(seeds)
def test_union_is_disjunction(seed):
    rng = np.random.default_rng(seed)
    X = random_constrained_zonotope(rng, max_gens=4, max_cons=1)
    Y = random_constrained_zonotope(rng, max_gens=4, max_cons=1)
    ox, oy = PolytopeOracle(point_cloud(X)), PolytopeOracle(point_cloud(Y))
    got = SetOracle(union_hybrid(X, Y))
    x = _samples(rng, np.vstack([ox.points, oy.points]))
    d = np.minimum(ox.signed_distance(x), oy.signed_distance(x))
    keep = np.abs(d) > 1e-6
    assert np.array_equal(got.contains(x[keep], 1e-7), d[keep] <= 0)


def test_generalized_intersection_with_projection():
    # {(x, c) in box x [0, 1] | x in right half}
    H = cartesian_product(make_interval([-1, -1], [1, 1]), make_interval([0], [1]))
    R = np.hstack([np.eye(2), np.zeros((2, 1))])
    out = SetOracle(generalized_intersection(H, make_interval([0, -1], [1, 1]), R))
    assert out.contains([[0.5, 0, 0.5], [1, 1, 1]]).all()
    assert not out.contains([[-0.5, 0, 0.5]]).any()


def test_lift_keeps_point_set():
    Z = random_constrained_zonotope(np.random.default_rng(3))
    H = lift_to_hybrid(Z)
    assert H.n_bin == 0 and np.array_equal(H.Gc, Z.generators)


@given(seeds)
def test_record_round_trip_is_exact(seed):
    rng = np.random.default_rng(seed)
    X = random_constrained_zonotope(rng)
    for S in (X, union_hybrid(X, make_point([1.0, 2.0]))):
        back = from_record(json.loads(json.dumps(to_record(S))))
        assert type(back) is type(S)
        a, b = to_record(S), to_record(back)
        assert a == b


def test_record_of_point_round_trips():
    P = make_point([0.1, 0.2])
    assert to_record(from_record(to_record(P))) == to_record(P)
