import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from svset import oracles
from svset.corpus import QUARTER_TURN, triangle_vertices
from svset.errors import FanError
from svset.fans import (
    Fan,
    adjacent_maximal_pairs,
    alpha_coefficients,
    deterministic_fan_test,
    fans_equal,
    is_admissible,
    normal_cone_at_vertex_2d,
    normal_fan_2d,
    polytope_from_offsets,
    primitive_direction,
    ray_representatives,
    type_cone,
)
from svset.geometry import DirectionGrid, Polytope, hausdorff_distance

S2 = 1 / math.sqrt(2)
TRI_FAN = Fan([[-1, 0], [0, -1], [S2, S2]], ((0, 1), (1, 2), (0, 2)))
SQ_FAN = Fan([[1, 0], [0, 1], [-1, 0], [0, -1]], ((0, 1), (1, 2), (2, 3), (3, 0)))
SQUARE = Polytope.from_points([[1, 1], [-1, 1], [-1, -1], [1, -1]])
EX_TRIANGLE = Polytope.from_points([[-1, -1], [2, -1], [-1, 2]])

offsets = st.tuples(*[st.floats(-3, 3, allow_nan=False)] * 3)


def random_polygon(rng, k=None):
    k = int(rng.integers(3, 10)) if k is None else k
    return Polytope.from_points(rng.normal(size=(k, 2)))


# -- fans of polytopes ------------------------------------------------------


def test_normal_cone_square_vertex():
    C = normal_cone_at_vertex_2d(SQUARE, [1, 1])
    assert {tuple(g) for g in np.round(C.generators, 12)} == {(1.0, 0.0), (0.0, 1.0)}


def test_normal_cone_right_angle_vertex():
    C = normal_cone_at_vertex_2d(EX_TRIANGLE, [-1, -1])
    assert {tuple(g) for g in np.round(C.generators, 12)} == {(-1.0, 0.0), (0.0, -1.0)}


def test_normal_cone_second_vertex():
    C = normal_cone_at_vertex_2d(EX_TRIANGLE, [2, -1])
    assert {tuple(g) for g in np.round(C.generators, 12)} == {(0.0, -1.0), (round(S2, 12), round(S2, 12))}


def test_triangle_fan_matches_example_cones():
    F = normal_fan_2d(EX_TRIANGLE)
    assert fans_equal(F, TRI_FAN)
    perm = [int(np.argmin(np.linalg.norm(TRI_FAN.rays - r, axis=1))) for r in F.rays]
    assert {frozenset(perm[j] for j in c) for c in F.maximal} == {frozenset(c) for c in TRI_FAN.maximal}


def test_square_fan_has_four_quadrants():
    F = normal_fan_2d(SQUARE)
    assert len(F.maximal) == 4
    assert all(abs(s[3] - math.pi / 2) < 1e-12 for s in F.sectors())
    assert fans_equal(F, SQ_FAN)


def test_fan_translation_and_scaling_invariant(rng):
    P = random_polygon(rng)
    F = normal_fan_2d(P)
    assert fans_equal(normal_fan_2d(P.translate([3.0, -7.0])), F)
    assert fans_equal(normal_fan_2d(P.scale(2.0)), F)


def test_fans_equal_reflexive_and_distinguishing():
    assert fans_equal(TRI_FAN, TRI_FAN)
    assert not fans_equal(SQ_FAN, TRI_FAN)


def test_fan_structure(rng):
    for _ in range(50):
        F = normal_fan_2d(random_polygon(rng))
        assert F.is_complete and F.is_simplicial and F.is_essential
        assert abs(F.total_angle() - 2 * math.pi) <= 1e-9
        faces = F.faces()
        # vertices of P get 2-dimensional cones, edges get rays
        assert all(len(c) == 2 for c in F.maximal)
        assert sum(len(c) == 1 for c in faces) == F.n_rays == len(F.maximal)


def test_normal_cones_are_argmax_regions(rng):
    grid = DirectionGrid.uniform(2, 720)
    step = 2 * math.pi / 720
    c, s = math.cos(step), math.sin(step)
    turn = np.array([[c, -s], [s, c]])
    for _ in range(20):
        P = random_polygon(rng)
        vals = grid.directions @ P.vertices.T
        for k, v in enumerate(P.vertices):
            C = normal_cone_at_vertex_2d(P, v)
            for i, u in enumerate(grid.directions):
                # interior with an angular margin of one grid step
                if C.contains_direction(turn @ u, strict=True) and C.contains_direction(turn.T @ u, strict=True):
                    assert vals[i, k] > np.delete(vals[i], k).max()


def test_adjacent_pairs_counts():
    assert len(adjacent_maximal_pairs(TRI_FAN)) == 3
    assert len(adjacent_maximal_pairs(SQ_FAN)) == 4


# -- alpha system and type cones -------------------------------------------


@pytest.mark.parametrize("pair", [(0, 1), (1, 2), (0, 2)])
def test_triangle_alpha_all_ones(pair):
    assert np.allclose(alpha_coefficients(TRI_FAN, *pair), [1, 1, 1], atol=1e-12)


def test_square_alpha_opposite_rays():
    # cones {e1,e2} and {e2,-e1}
    assert np.allclose(alpha_coefficients(SQ_FAN, 0, 1), [1, 0, 1, 0], atol=1e-12)


def test_alpha_unaffected_by_ray_length():
    F2 = Fan(2 * SQ_FAN.rays, SQ_FAN.maximal)
    assert np.allclose(alpha_coefficients(F2, 0, 1), alpha_coefficients(SQ_FAN, 0, 1))


def test_alpha_rows_satisfy_dependence(rng):
    for _ in range(50):
        F = normal_fan_2d(random_polygon(rng))
        for scaling in ("primitive", "unit"):
            gens = ray_representatives(F, scaling)
            for c1, c2, shared in adjacent_maximal_pairs(F):
                a = alpha_coefficients(F, c1, c2, scaling)
                assert np.linalg.norm(a @ gens) <= 1e-10 * max(1, np.abs(gens).max())
                j1 = (set(F.maximal[c1]) - set(shared)).pop()
                j2 = (set(F.maximal[c2]) - set(shared)).pop()
                assert a[j1] + a[j2] == pytest.approx(2.0, abs=1e-12)


def test_alpha_matches_cross_product_oracle(rng):
    for _ in range(50):
        F = normal_fan_2d(random_polygon(rng))
        g = ray_representatives(F, "unit")
        for c1, c2, (b,) in adjacent_maximal_pairs(F):
            a = alpha_coefficients(F, c1, c2, "unit")
            j1 = (set(F.maximal[c1]) - {b}).pop()
            j2 = (set(F.maximal[c2]) - {b}).pop()
            ref = oracles.alpha_by_cross_products(g[j1], g[b], g[j2])
            assert np.allclose(a[[j1, b, j2]] / a[b], ref, atol=1e-9)


def test_alpha_rejects_non_adjacent():
    with pytest.raises(FanError):
        alpha_coefficients(SQ_FAN, 0, 2)


def test_primitive_direction():
    assert np.array_equal(primitive_direction([S2, S2]), [1, 1])
    assert np.array_equal(primitive_direction([-0.6, 0.8]), [-3, 4])
    assert primitive_direction([1.0, math.pi]) is None


def test_triangle_type_cone_single_row():
    tc = type_cone(TRI_FAN)
    assert np.allclose(tc.rows, 1.0)
    eff = tc.effective_rows()
    assert len(eff) == 1 and np.allclose(eff[0], np.ones(3) / math.sqrt(3))


def test_square_type_cone_rows():
    tc = type_cone(SQ_FAN)
    rows = {tuple(np.round(r, 12)) for r in tc.rows}
    assert rows == {(1.0, 0.0, 1.0, 0.0), (0.0, 1.0, 0.0, 1.0)}


def test_type_cone_refuses_incomplete_fan():
    with pytest.raises(FanError):
        type_cone(Fan([[1, 0], [0, 1]], ((0, 1),)))


@pytest.mark.parametrize("h, want", [((1, 1, 1), True), ((-1, -1, 1), False), ((0, 0, 0), False)])
def test_triangle_admissibility(h, want):
    assert is_admissible(TRI_FAN, h) is want


@given(offsets)
def test_admissible_iff_fan_reproduced(h):
    h = np.array(h)
    assume(abs(h.sum()) > 1e-3)
    P = Polytope.from_points(triangle_vertices(h))
    if is_admissible(TRI_FAN, h):
        assert fans_equal(normal_fan_2d(P), TRI_FAN)
        assert hausdorff_distance(polytope_from_offsets(TRI_FAN, h), P) <= 1e-9
    else:
        assert h.sum() < 0
        assert not fans_equal(normal_fan_2d(P), TRI_FAN)


def test_square_offsets_round_trip(rng):
    for _ in range(30):
        h = rng.uniform(-2, 2, size=4)
        slack = min(h[0] + h[2], h[1] + h[3])
        assert is_admissible(SQ_FAN, h) is bool(slack > 0)
        if slack > 0.05:
            assert fans_equal(normal_fan_2d(polytope_from_offsets(SQ_FAN, h)), SQ_FAN)


# -- deterministic normal fan test -----------------------------------------


def test_fan_test_accepts_example_family(rng):
    eta = rng.lognormal(size=(200, 3))
    rep = deterministic_fan_test(triangle_vertices(eta))
    assert rep.verdict and rep.argmax_ok and rep.fan_ok


def test_fan_test_rejects_rotation_with_witness():
    tri = triangle_vertices([1.0, 1.0, 1.0])
    rep = deterministic_fan_test(np.stack([tri, tri @ QUARTER_TURN.T]))
    assert not rep.verdict and not rep.argmax_ok
    u = np.array(rep.witness_direction)
    s1, s2 = rep.witness_samples
    a1, a2 = rep.witness_argmax
    assert s1 != s2 and not set(a1) & set(a2)
    assert abs(np.linalg.norm(u) - 1) < 1e-12


def test_fan_test_single_sample_is_vacuous():
    assert deterministic_fan_test(triangle_vertices([[0.3, 2.0, 1.0]])).verdict


def test_fan_test_detects_label_swap_with_same_sets():
    tri = triangle_vertices([1.0, 1.0, 1.0])
    swapped = tri[[1, 0, 2]]
    rep = deterministic_fan_test(np.stack([tri, swapped]))
    assert not rep.verdict
