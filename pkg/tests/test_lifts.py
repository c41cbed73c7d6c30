import numpy as np
import pytest

from roughnet.errors import EndpointMismatch, LeftDomain, NotBetaLong
from roughnet.geometry import Curve, metric_at
from roughnet.lifts import (
    check_composition,
    check_continuity,
    check_inverse,
    check_length_bounds,
    horizontal_lift,
    loop_holonomy,
    oneill_map,
    oneill_map_many,
    perturb_curve,
)

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]


# --- oracles: z' = x y' on the Heisenberg example --------------------------

def test_flat_segment_keeps_height(e2):
    lift = horizontal_lift(e2, Curve.segment([0, 0], [1, 0]), [0, 0, 0])
    assert np.allclose(lift.points[:, 2], 0.0)


def test_vertical_segment_gains_one(e2):
    lift = horizontal_lift(e2, Curve.segment([1, 0], [1, 1]), [1, 0, 0])
    assert abs(lift.end[2] - 1.0) <= 1e-6


def test_unit_square_oneill(e2):
    Y = oneill_map(e2, Curve.polyline(SQUARE), [[0, 0, 0]])
    assert np.allclose(Y, [[0, 0, 1]], atol=1e-4)


def test_lift_is_isometric(e2):
    g = Curve.segment([0.5, 0.2], [2.0, 1.5])
    lift = horizontal_lift(e2, g, [0.5, 0.2, 0.3])
    assert lift.length == pytest.approx(g.length(e2.base), abs=1e-4)


def test_circle_fourth_order(e2):
    # z gains the enclosed area pi
    circle = Curve.circle([2, 2], 1.0)
    errs = [abs(horizontal_lift(e2, circle, [3, 2, 0], h).end[2] - np.pi) for h in (4e-2, 2e-2, 1e-2)]
    assert errs[0] / errs[1] >= 8 and errs[1] / errs[2] >= 8


# --- lift contracts ----------------------------------------------------------

def test_lift_tangent_horizontal_and_projects(e2):
    g = Curve.polyline([[0.5, 0.5], [2, 1], [1.5, 2]])
    lift = horizontal_lift(e2, g, [0.5, 0.5, 0.1])
    assert lift.projection_residual <= 1e-9
    for x, v in zip(lift.points, lift.velocities):
        k = e2.kernel_basis(x)[:, 0]
        assert abs(k @ metric_at(e2.total, x) @ v) <= 1e-6


def test_lift_csv(e2):
    lift = horizontal_lift(e2, Curve.segment([1, 0], [1, 1]), [1, 0, 0], 0.25)
    lines = lift.to_csv().splitlines()
    assert lines[0] == "t,x0,x1,x2" and len(lines) == 6


def test_start_off_fiber_rejected(e2):
    with pytest.raises(ValueError):
        horizontal_lift(e2, Curve.segment([1, 0], [1, 1]), [1.1, 0, 0])


def test_leaving_domain(e2):
    # z' = x y' = 5 along x = 5 pushes z past 5
    with pytest.raises(LeftDomain):
        horizontal_lift(e2, Curve.segment([5, 0], [5, 2]), [5, 0, 0])


def test_oneill_many_matches_single(e2):
    curves = [Curve.segment([0, 0], [1, 2]), None, Curve.segment([0, 0], [3, 1])]
    X = [[[0, 0, 0.1], [0, 0, -0.4]]] * 3
    many = oneill_map_many(e2, curves, X)
    assert np.array_equal(many[1], np.asarray(X[1]))
    for c, got in zip(curves, many):
        if c is not None:
            assert np.allclose(got, oneill_map(e2, c, X[0]), atol=1e-13)


# --- holonomy ----------------------------------------------------------------

def test_flat_holonomy_trivial(e1):
    rep = loop_holonomy(e1, Curve.polyline(SQUARE), 20, 0)
    assert rep.max_defect <= 1e-6


def test_heisenberg_holonomy_area(e2):
    rep = loop_holonomy(e2, Curve.polyline(SQUARE), 20, 0)
    assert np.allclose(rep.offsets[:, 2], 1.0, atol=1e-4)
    assert np.allclose(rep.offsets[:, :2], 0.0)
    assert rep.max_defect > 0


def test_constant_loop(e2):
    rep = loop_holonomy(e2, Curve.constant([1, 1]), 5, 0)
    assert rep.max_defect == 0.0


# --- O'Neill group properties -------------------------------------------------

def test_composition_with_constant(e2):
    X = e2.sample_fiber(np.array([1.0, 1.0]), 10, 0)
    g = Curve.segment([1, 1], [2, 2])
    assert check_composition(e2, g, Curve.constant([2, 2]), X) <= 1e-9


def test_composition_flat(e1):
    X = e1.sample_fiber(np.array([1.0, 1.0]), 10, 0)
    assert check_composition(e1, Curve.segment([1, 1], [2, 3]), Curve.segment([2, 3], [4, 0.5]), X) <= 1e-9


def test_composition_endpoint_mismatch(e1):
    with pytest.raises(EndpointMismatch):
        check_composition(e1, Curve.segment([1, 1], [2, 3]), Curve.segment([2, 2], [4, 0.5]), [[1, 1, 1]])


def test_loop_group_closure(e2):
    X = e2.sample_fiber(np.array([1.0, 1.0]), 20, 0)
    a = Curve.polyline([[1, 1], [2, 1], [2, 2], [1, 2], [1, 1]])
    b = Curve.circle([1.5, 1.0], 0.5, theta0=np.pi)
    assert check_composition(e2, a, b, X) <= 1e-5
    assert check_inverse(e2, a, X) <= 1e-5


def test_inverse(e1, e2):
    X1 = e1.sample_fiber(np.array([1.0, 1.0]), 10, 0)
    assert check_inverse(e1, Curve.segment([1, 1], [3, 2]), X1) <= 1e-9
    X2 = e2.sample_fiber(np.array([1.0, 1.0]), 10, 0)
    assert check_inverse(e2, Curve.segment([1, 1], [3, 2]), X2) <= 1e-5
    assert check_inverse(e2, Curve.constant([1, 1]), X2) == 0.0


def test_continuity(e1, e2):
    X2 = e2.sample_fiber(np.array([0.5, 0.5]), 5, 0)
    g = Curve.polyline([[0.5, 0.5], [1.5, 1], [2, 1.5]])
    assert check_continuity(e2, g, 0.0, X2) == 0.0
    shifts = [check_continuity(e2, g, p, X2) for p in (1e-2, 1e-3, 1e-4)]
    assert shifts[0] >= shifts[1] >= shifts[2]
    X1 = e1.sample_fiber(np.array([0.5, 0.5]), 5, 0)
    assert check_continuity(e1, g, 1e-2, X1) <= 1e-9


def test_perturb_moves_interior_only():
    g = Curve.polyline([[0, 0], [1, 1], [2, 0]])
    p = perturb_curve(g, 0.1)
    assert np.allclose(p.start, g.start) and np.allclose(p.end, g.end)
    assert np.allclose(np.abs(p.pieces[0].b - g.pieces[0].b), 0.1)


# --- length bounds -------------------------------------------------------------

def test_length_bounds_hold(e2):
    ok_lo, ok_hi, (lift_len, base_len) = check_length_bounds(
        e2, Curve.segment([1, 1], [3, 2]), [1, 1, 0], alpha=1.0, beta=1e-3)
    assert ok_lo and ok_hi
    assert lift_len == pytest.approx(base_len, abs=1e-4)


def test_slow_curve_not_beta_long(e2):
    g = Curve.from_pieces([(([1, 1], [1, 1.0000001]), 0.5), (([1, 1.0000001], [2, 1]), 0.5)])
    with pytest.raises(NotBetaLong):
        check_length_bounds(e2, g, [1, 1, 0], alpha=1.0, beta=1e-3)
