import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from svset import oracles
from svset.errors import DegeneracyError, DimensionMismatchError, MalformedInputError, NumericalFailureError
from svset.geometry import (
    DirectionGrid,
    Polytope,
    canonical_vertices,
    contains,
    convex_hull_2d,
    grid_resolution_bound,
    hausdorff_2d_batch,
    hausdorff_direction_grid,
    hausdorff_distance,
    min_norm_point,
    minkowski_average,
    point_distance,
    support_function,
    v_to_h_2d,
)

coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
point_clouds = arrays(np.float64, st.tuples(st.integers(1, 9), st.just(2)), elements=coords)
SQUARE = Polytope.from_points([[1, 1], [-1, 1], [-1, -1], [1, -1]])


def poly(pts):
    return Polytope.from_points(np.asarray(pts, dtype=float))


# -- support function -------------------------------------------------------


def test_support_square_axis():
    assert support_function(SQUARE, [1, 0]) == 1.0


def test_support_triangle_diagonal():
    assert support_function(poly([[0, 0], [4, 0], [0, 4]]), [1, 1]) == 4.0


def test_support_singleton():
    x = np.array([0.3, -2.0])
    assert support_function(poly([x]), [1.5, 2.0]) == pytest.approx(x @ [1.5, 2.0])


def test_support_vectorized_matches_scalar(rng):
    P = poly(rng.normal(size=(7, 2)))
    U = rng.normal(size=(20, 2))
    assert np.allclose(support_function(P, U), [support_function(P, u) for u in U])


def test_empty_vertex_list_is_malformed():
    with pytest.raises(MalformedInputError):
        Polytope.from_points(np.zeros((0, 2)))


# -- nearest point and distances -------------------------------------------


def test_distance_collinear():
    assert point_distance([2, 0], poly([[0, 0], [1, 0]])) == pytest.approx(1.0)


def test_distance_perpendicular_to_endpoint():
    assert point_distance([1, 1], poly([[0, 0], [1, 0]])) == pytest.approx(1.0)


def test_distance_at_vertices_is_zero(rng):
    P = poly(rng.normal(size=(6, 2)))
    assert all(point_distance(v, P) <= 1e-12 for v in P.vertices)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        point_distance([1, 2, 3], SQUARE)


def test_min_norm_point_reports_bound_on_failure():
    pts = np.array([[1.0, 1.0], [1.0, -2.0]])
    with pytest.raises(NumericalFailureError) as exc:
        min_norm_point(pts, max_iter=0)
    lo, hi = exc.value.bound
    assert lo <= 1.0 <= hi


def test_min_norm_point_certificate(rng):
    for _ in range(50):
        pts = rng.normal(size=(8, 3)) + rng.normal(size=3) * 2
        x, w, S = min_norm_point(pts)
        assert np.all(w >= -1e-15) and abs(w.sum() - 1) < 1e-12
        assert np.allclose(w @ pts[S], x)
        nx = np.linalg.norm(x)
        if nx > 0:
            assert nx - np.min(pts @ x) / nx <= 1e-10


@given(point_clouds, arrays(np.float64, (2,), elements=coords))
def test_distance_matches_planar_oracle(pts, x):
    P = poly(pts)
    assert point_distance(x, P) == pytest.approx(oracles.dist_to_polygon(x, P.vertices), abs=1e-8)


# -- Hausdorff --------------------------------------------------------------


def test_hausdorff_shifted_square():
    P = poly([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]])
    Q = P.translate([1, 0])
    grid = DirectionGrid.uniform(2, 720)
    assert hausdorff_distance(P, Q) == pytest.approx(1.0, abs=1e-12)
    assert hausdorff_direction_grid(P, Q, grid) == pytest.approx(1.0, abs=1e-12)
    assert oracles.point_grid_hausdorff(P.vertices, Q.vertices) == pytest.approx(1.0, abs=1e-12)


@given(point_clouds, point_clouds)
def test_hausdorff_symmetric_and_matches_batch(a, b):
    P, Q = poly(a), poly(b)
    h = hausdorff_distance(P, Q)
    assert h == pytest.approx(hausdorff_distance(Q, P), abs=1e-9)
    assert h == pytest.approx(oracles.hausdorff_by_vertices(P.vertices, Q.vertices), abs=1e-8)


@given(point_clouds, point_clouds, point_clouds)
def test_hausdorff_triangle_inequality(a, b, c):
    P, Q, R = poly(a), poly(b), poly(c)
    assert hausdorff_distance(P, R) <= hausdorff_distance(P, Q) + hausdorff_distance(Q, R) + 1e-9


@given(point_clouds)
def test_hausdorff_zero_means_equal(a):
    P = poly(a)
    Q = poly(np.vstack([a, a.mean(axis=0)]))  # interior point added, same set
    assert hausdorff_distance(P, Q) <= 1e-9
    assert P.equals(Q)


def test_batch_hausdorff_singletons(rng):
    A = rng.normal(size=(30, 1, 2))
    B = rng.normal(size=(30, 1, 2))
    assert np.array_equal(hausdorff_2d_batch(A, B), np.linalg.norm(A - B, axis=-1)[:, 0])


def test_grid_below_exact_within_bound(rng):
    grid = DirectionGrid.uniform(2, 720)
    for _ in range(100):
        P = poly(rng.normal(size=(5, 2)) * 2)
        Q = poly(rng.normal(size=(4, 2)) + 1)
        h = hausdorff_distance(P, Q)
        hg = hausdorff_direction_grid(P, Q, grid)
        assert hg <= h + 1e-12
        assert h - hg <= grid_resolution_bound(P, Q, grid) + 1e-12


def test_scalar_and_hausdorff_convergence_agree():
    # P_n -> P both in support functions over the grid and in Hausdorff distance
    grid = DirectionGrid.uniform(2, 360)
    P = poly([[0, 0], [2, 0], [0, 1]])
    prev = math.inf
    for n in (1, 4, 16, 64, 256):
        Pn = poly(np.vstack([P.vertices, [[1.0 + 1.0 / n, 0.5 + 1.0 / n]]]))
        sup = np.max(np.abs(support_function(Pn, grid.directions) - support_function(P, grid.directions)))
        h = hausdorff_distance(Pn, P)
        assert sup <= h + 1e-12 and h <= sup + grid_resolution_bound(Pn, P, grid)
        assert h < prev
        prev = h
    # a sequence that does not converge: nothing shrinks
    Q = poly([[0, 0], [3, 0], [0, 1]])
    assert hausdorff_direction_grid(Q, P, grid) == pytest.approx(hausdorff_distance(Q, P), abs=1e-12)


def test_direction_grid_3d_is_symmetric_unit():
    g = DirectionGrid.uniform(3, 200)
    assert np.allclose(np.linalg.norm(g.directions, axis=1), 1)
    assert np.allclose(g.directions[:100], -g.directions[100:])
    assert 0 < g.resolution < 1


# -- Minkowski averages and containment -------------------------------------


def test_minkowski_identity():
    a = poly([[3.0, 4.0]])
    assert minkowski_average([1.0], [a]).equals(a)


def test_minkowski_singletons():
    M = minkowski_average([0.5, 0.5], [poly([[0, 0]]), poly([[2, 2]])])
    assert M.equals(poly([[1, 1]]))


def test_minkowski_segments_give_square():
    M = minkowski_average([0.5, 0.5], [poly([[0, 0], [2, 0]]), poly([[0, 0], [0, 2]])])
    assert M.equals(poly([[0, 0], [1, 0], [0, 1], [1, 1]]))


def test_minkowski_rejects_bad_weights():
    with pytest.raises(MalformedInputError):
        minkowski_average([0.6, 0.6], [SQUARE, SQUARE])
    with pytest.raises(MalformedInputError):
        minkowski_average([1.0], [SQUARE, SQUARE])


@given(st.lists(point_clouds, min_size=1, max_size=3), st.integers(0, 2**32 - 1))
def test_support_additivity(clouds, seed):
    r = np.random.default_rng(seed)
    Ps = [poly(c) for c in clouds]
    w = r.dirichlet(np.ones(len(Ps)))
    w = w / w.sum()
    assume(abs(w.sum() - 1) <= 1e-12)
    M = minkowski_average(w, Ps)
    U = r.normal(size=(25, 2))
    expected = sum(wi * support_function(P, U) for wi, P in zip(w, Ps))
    assert np.allclose(support_function(M, U), expected, atol=1e-9)


def test_minkowski_matches_vertex_enumeration(rng):
    for _ in range(30):
        Ps = [poly(rng.normal(size=(int(rng.integers(1, 6)), 2))) for _ in range(3)]
        w = rng.dirichlet(np.ones(3))
        ref = poly(oracles.minkowski_by_enumeration(w, [P.vertices for P in Ps]))
        assert hausdorff_distance(minkowski_average(w, Ps), ref) <= 1e-9


def test_contains_examples():
    assert contains(SQUARE, SQUARE)
    assert contains(poly([[0, 0], [1, 0], [1, 1], [0, 1]]), poly([[0, 0], [0.5, 0.5]]))
    assert not contains(poly([[0, 0], [1, 0]]), poly([[0, 1]]))


@given(point_clouds, point_clouds)
def test_containment_support_duality(a, b):
    Q, P = poly(a), poly(b)
    assume(Q.affine_dim() == 2)
    H = v_to_h_2d(Q)
    dual = bool(np.all(support_function(P, H.normals) <= H.offsets + 1e-9))
    assert contains(Q, P, 1e-9) == dual or abs(
        np.max(support_function(P, H.normals) - H.offsets)) < 1e-6


# -- canonical hulls and facets ---------------------------------------------


def test_hull_singleton():
    assert np.array_equal(canonical_vertices([[0.0, 0.0]]), [[0.0, 0.0]])


def test_hull_drops_center():
    V = canonical_vertices([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]])
    assert V.shape == (4, 2)
    assert not any(np.allclose(v, [0.5, 0.5]) for v in V)


def test_hull_counterclockwise_from_lexicographic_min(rng):
    V = convex_hull_2d(rng.normal(size=(40, 2))).vertices
    assert np.lexsort((V[:, 1], V[:, 0]))[0] == 0
    e = np.roll(V, -1, axis=0) - V
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    assert np.all(cross > 0)


def test_triangle_vertex_set_hull():
    eta = (1.0, 1.0, 1.0)
    pts = [[-eta[0], -eta[1]], [eta[1] + eta[2], -eta[1]], [-eta[0], eta[0] + eta[2]]]
    assert poly(pts).equals(poly([[-1, -1], [2, -1], [-1, 2]]))


def test_v_to_h_unit_triangle():
    H = v_to_h_2d(poly([[0, 0], [1, 0], [0, 1]]))
    s = 1 / math.sqrt(2)
    assert np.allclose(H.normals, [[0, -1], [s, s], [-1, 0]])
    assert np.allclose(H.offsets, [0, s, 0])
    assert np.allclose(support_function(H, H.normals), H.offsets)


def test_v_to_h_square():
    H = v_to_h_2d(SQUARE)
    assert {tuple(n) for n in np.round(H.normals, 12)} == {(1, 0), (0, 1), (-1, 0), (0, -1)}
    assert np.allclose(H.offsets, 1)


def test_v_to_h_example_triangle_normals():
    H = v_to_h_2d(poly([[-1, -1], [2, -1], [-1, 2]]))
    want = np.array([[-1, 0], [0, -1], [1, 1]]) / np.linalg.norm([[-1, 0], [0, -1], [1, 1]], axis=1)[:, None]
    assert sorted(map(tuple, np.round(H.normals, 12))) == sorted(map(tuple, np.round(want, 12)))


@pytest.mark.parametrize("pts", [[[0, 0], [1, 1]], [[2, 2]], [[0, 0], [1, 1], [2, 2]]])
def test_v_to_h_degenerate(pts):
    with pytest.raises(DegeneracyError):
        v_to_h_2d(poly(pts))


@given(point_clouds)
def test_hull_idempotent_and_order_free(pts):
    V = canonical_vertices(pts)
    assert np.array_equal(canonical_vertices(V), V)
    assert np.array_equal(canonical_vertices(pts[::-1]), V)
