import math

import numpy as np
import pytest
from scipy import integrate

from dcplab.geometry import (
    AccuracyError,
    BallGridSpec,
    ball_intersection_ratio,
    ball_volume,
    boundary_layer_fraction,
    cap_ratio,
    circle_rect_area,
    count_vs_volume_error,
    cylinder_lower_bound,
    grid_intersection_ratio,
    grid_points_in_ball,
    grover_rudolph_prepare,
    lens_ratio,
    segment_length,
)
from dcplab.qsim import trace_distance_pure


def test_grid_count_examples():
    assert grid_points_in_ball(BallGridSpec(2, 1, 2)).shape[0] == 13
    assert grid_points_in_ball(BallGridSpec(1, 1, 1)).shape[0] == 3


def test_grid_count_symmetry():
    pts = grid_points_in_ball(BallGridSpec(2, 3, 4))
    as_set = {tuple(p) for p in pts}
    for x, y in as_set:
        assert (y, x) in as_set and (-x, -y) in as_set and (x, -y) in as_set


def test_count_volume_tolerance():
    for n, R, L in ((2, 2, 8), (2, 4, 8), (2, 8, 8), (3, 2, 6)):
        count = grid_points_in_ball(BallGridSpec(n, R, L)).shape[0]
        rel, tol = count_vs_volume_error(count, n, R, L)
        assert rel < tol


def test_lens_examples():
    assert lens_ratio(2, 0) == 1.0
    assert lens_ratio(2, 4) == 0.0
    # frozen closed-form value: lens area 8.6084 over 4 pi
    assert abs(lens_ratio(2, 1) - 8.6084 / (4 * math.pi)) < 1e-3
    assert abs(lens_ratio(2, 1) - 0.68506) < 1e-4


def test_lens_monotone_in_shift():
    vals = [lens_ratio(4, d) for d in np.linspace(0, 8, 30)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_cap_matches_lens_n2():
    for d in (0.0, 0.5, 1.0, 2.5, 3.9):
        assert abs(cap_ratio(2, 2, d) - lens_ratio(2, d)) < 1e-12


def test_cap_matches_monte_carlo_n3():
    rng = np.random.default_rng(0)
    got = ball_intersection_ratio(3, 2.0, (1.0, 0, 0), samples=200_000, rng=rng)
    want = cap_ratio(3, 2.0, 1.0)
    assert abs(got - want) < 0.01


def test_cylinder_bound_holds():
    for n in (2, 3, 4):
        for d in (0.1, 0.5, 1.0):
            assert cap_ratio(n, 2.0, d) >= cylinder_lower_bound(n, 2.0, d) - 1e-12


def test_grid_ratio_examples():
    spec = BallGridSpec(2, 4, 8)
    assert grid_intersection_ratio(spec, (0, 0)) == 1.0
    assert grid_intersection_ratio(spec, (9, 0)) == 0.0
    got = grid_intersection_ratio(spec, (1, 0))
    assert abs(got - lens_ratio(4, 1)) < 0.02


def test_grid_ratio_tracks_lens_bound():
    # restated corollary: grid ratio >= 1 - c sqrt(n) |d| / R with a fixed constant
    c = 1.0
    for R in (4, 8):
        spec = BallGridSpec(2, R, 8)
        for d in ((1, 0), (1, 1), (2, 0)):
            norm = math.sqrt(d[0] ** 2 + d[1] ** 2)
            got = grid_intersection_ratio(spec, d)
            assert got >= 1 - c * math.sqrt(2) * norm / R


def test_circle_rect_area_against_quadrature():
    R = 3.0
    # enclosing box: exactly the disk area
    assert abs(circle_rect_area(R, -3, 3, -3, 3) - math.pi * 9) < 1e-12
    cases = [(0, 1, 0, 1), (-1, 2.5, 0.5, 3.5), (2, 4, -1, 1), (-2.5, -0.5, -3.5, 0.25)]
    for x0, x1, y0, y1 in cases:
        got = circle_rect_area(R, x0, x1, y0, y1)
        want, _ = integrate.dblquad(
            lambda y, x: 1.0 if x * x + y * y <= R * R else 0.0, x0, x1, y0, y1
        )
        # dblquad itself is only ~1e-3 accurate on a discontinuous integrand
        assert abs(got - want) < 6e-3


def test_circle_rect_area_additive():
    R = 2.5
    whole = circle_rect_area(R, -1, 2, -2, 2)
    left = circle_rect_area(R, -1, 0.3, -2, 2)
    right = circle_rect_area(R, 0.3, 2, -2, 2)
    assert abs(whole - (left + right)) < 1e-12


def test_segment_length():
    assert segment_length(2, -1, 1) == 2
    assert segment_length(2, 1, 5) == 1
    assert segment_length(2, 3, 5) == 0


def test_prepare_first_split_exact():
    prep = grover_rudolph_prepare(BallGridSpec(2, 3, 8))
    assert prep.first_split == (0.5, 0.5)


def test_prepare_certificate():
    prep = grover_rudolph_prepare(BallGridSpec(2, 3, 8))
    assert prep.distance_to_target <= 1e-6
    assert prep.state.is_normalized(tol=1e-9)
    # the grid-vs-discretization gap is a boundary effect, reported not bounded
    assert 0.0 <= prep.distance_to_grid_uniform < 0.5


def test_prepare_n1():
    prep = grover_rudolph_prepare(BallGridSpec(1, 2, 4))
    assert prep.distance_to_target <= 1e-6
    # 17 grid points in [-2, 2] at step 1/4
    assert abs(prep.distance_to_grid_uniform) < 0.3


def test_prepare_error_composition():
    # deliberate per-split error eps: <eta~|eta'> >= (1 - eps)^K
    eps = 1e-3
    prep = grover_rudolph_prepare(BallGridSpec(2, 3, 8), perturb=eps)
    k = prep.tree.K
    ip = abs(prep.state.inner(prep.target_state))
    assert ip >= (1 - eps) ** k - 1e-12
    assert prep.distance_to_target <= math.sqrt(max(0.0, 1 - (1 - k * eps) ** 2)) + 1e-6
    assert prep.tree.max_relative_error() <= 2.1 * eps


def test_prepare_tree_rows_normalized():
    prep = grover_rudolph_prepare(BallGridSpec(2, 2, 4), perturb=5e-4)
    for s0, s1, t0, t1 in prep.tree.nodes.values():
        assert abs((t0 + t1) - 1.0) <= 1e-15
        assert abs((s0 + s1) - 1.0) <= 1e-12


def test_prepare_budget_guard():
    with pytest.raises(Exception):
        grover_rudolph_prepare(BallGridSpec(2, 9, 128))


def test_boundary_layer_bound():
    for R, L in ((3, 8), (4, 8), (8, 8)):
        frac, bound = boundary_layer_fraction(BallGridSpec(2, R, L))
        assert frac <= bound


def test_mc_volume_needed_for_n3():
    with pytest.raises(AccuracyError):
        grover_rudolph_prepare(BallGridSpec(3, 1, 2))


def test_ball_volume():
    assert abs(ball_volume(2, 2) - 4 * math.pi) < 1e-12
    assert abs(ball_volume(3, 1) - 4 * math.pi / 3) < 1e-12
