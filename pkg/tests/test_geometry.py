import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hzfusion.geometry import (
    EmptySetError,
    binary_leaves,
    contains_point,
    convex_hull_2d,
    interval_hull,
    is_empty,
    shoelace_area,
    support,
    support_point,
    vertices_2d,
    volume_2d,
)
from hzfusion.oracles import PolytopeOracle, bounding_rectangle, point_cloud, random_constrained_zonotope
from hzfusion.zonoset import ConstrainedZonotope, generalized_intersection, make_interval, make_point, union_hybrid

HEXAGON = ConstrainedZonotope([0, 0], [[1, 0, 1], [0, 1, 1]], np.zeros((0, 3)), [])


def test_unit_box_polygon():
    poly = vertices_2d(make_interval([-1, -1], [1, 1]))
    assert len(poly) == 4 and poly.area == pytest.approx(4.0)


def test_hexagon_area():
    poly = vertices_2d(HEXAGON)
    assert len(poly) == 6
    assert volume_2d(HEXAGON) == pytest.approx(12.0, abs=1e-6)


def test_segment_has_zero_area():
    Z = ConstrainedZonotope([0, 0], np.eye(2), [[1, 1]], [0])
    poly = vertices_2d(Z)
    assert len(poly) == 2 and volume_2d(Z) == 0.0


def test_empty_set():
    Z = ConstrainedZonotope([0, 0], np.eye(2), [[1, 1]], [3])
    assert is_empty(Z)
    assert volume_2d(Z) == 0.0
    with pytest.raises(EmptySetError):
        vertices_2d(Z)
    with pytest.raises(EmptySetError):
        support(Z, [1, 0])


def test_touching_boxes_intersect_in_a_point():
    I = generalized_intersection(make_interval([0, 0], [1, 1]), make_interval([1, 1], [2, 2]))
    assert not is_empty(I)
    assert volume_2d(I) == 0.0


def test_support_of_hybrid_union():
    U = union_hybrid(make_interval([0, 0], [1, 1]), make_interval([3, 3], [4, 4]))
    assert support(U, [1, 0]) == pytest.approx(4.0)
    assert support(U, [-1, -1]) == pytest.approx(0.0)
    assert contains_point(U, [0.5, 0.5]) and contains_point(U, [4, 4])
    assert not contains_point(U, [2, 2])


def test_binary_leaves_pruned_by_pure_rows():
    U = union_hybrid(make_interval([0, 0], [1, 1]), make_interval([3, 3], [4, 4]))
    assert len(binary_leaves(U)) == 2


def test_contains_point_tolerance():
    Z = make_interval([0, 0], [1, 1])
    assert contains_point(Z, [1 + 1e-10, 0.5])
    assert not contains_point(Z, [1 + 1e-6, 0.5])


def test_point_set_queries():
    P = make_point([1, 2])
    assert contains_point(P, [1, 2]) and not contains_point(P, [1, 2.1])
    assert support(P, [1, 1]) == pytest.approx(3.0)


def test_interval_hull_of_hexagon():
    box = interval_hull(HEXAGON)
    assert np.allclose(box.lower, [-2, -2]) and np.allclose(box.upper, [2, 2])


def test_vertices_need_planar_sets():
    with pytest.raises(ValueError):
        vertices_2d(make_interval([0, 0, 0], [1, 1, 1]))


@pytest.mark.parametrize("backend", ["highs", "simplex", None])
def test_backends_agree_on_support(backend):
    Z = random_constrained_zonotope(np.random.default_rng(9))
    ref = support(Z, [0.3, -0.7], backend="highs")
    assert support(Z, [0.3, -0.7], backend=backend) == pytest.approx(ref, abs=1e-8)


@given(st.integers(0, 10**6))
def test_vertices_match_brute_force(seed):
    Z = random_constrained_zonotope(np.random.default_rng(seed))
    exact = PolytopeOracle(point_cloud(Z))
    poly = vertices_2d(Z)
    assert poly.area == pytest.approx(exact.volume, rel=1e-7, abs=1e-9)
    # every reported vertex lies on the set
    assert np.all(np.abs(exact.signed_distance(poly.vertices)) < 1e-7)


@given(st.integers(0, 10**6))
def test_support_point_attains_support(seed):
    rng = np.random.default_rng(seed)
    Z = random_constrained_zonotope(rng)
    d = rng.normal(size=2)
    val, x = support_point(Z, d)
    assert d @ x == pytest.approx(val, abs=1e-9)
    assert val == pytest.approx(np.max(point_cloud(Z) @ d), abs=1e-7)


def test_convex_hull_drops_collinear_and_duplicates():
    pts = [[0, 0], [1, 0], [2, 0], [2, 2], [0, 2], [0, 2], [1, 1]]
    hull = convex_hull_2d(pts)
    assert len(hull) == 4 and shoelace_area(hull) == pytest.approx(4.0)


def test_bounding_rectangle_of_rotated_square():
    c, s = np.cos(0.3), np.sin(0.3)
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]]) @ np.array([[c, s], [-s, c]])
    _, lo, hi = bounding_rectangle(square)
    assert np.prod(hi - lo) == pytest.approx(1.0)
