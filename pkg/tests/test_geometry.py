import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughnet.errors import NotPositiveDefinite, OutOfDomain, RankDeficient
from roughnet.examples import heisenberg_metric
from roughnet.geometry import (
    Curve,
    ManifoldSpec,
    SubmersionSpec,
    distance,
    flat_box,
    horizontal_solve,
    horizontal_solve_batch,
    jacobian_check,
    metric_at,
    minimal_geodesic,
    vector_norm,
    vertical_part,
)

coord = st.floats(0.1, 4.9)
vec = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


# --- oracles ---------------------------------------------------------------

def test_flat_metric_is_identity(e1):
    assert np.array_equal(metric_at(e1.total, [1.0, 2.0, 3.0]), np.eye(3))


def test_heisenberg_metric_by_hand(e2):
    G = metric_at(e2.total, [2.0, 0.0, 0.0])
    assert np.allclose(G, [[1, 0, 0], [0, 5, -2], [0, -2, 1]])


def test_warped_metric_at_unit_warp(e3):
    assert np.allclose(metric_at(e3.total, [0.0, 1.0, 2.0]), np.eye(3))


def test_norm_oracles(e1, e2):
    assert vector_norm(e1.total, [1, 1, 1], [3, 4, 0]) == pytest.approx(5.0)
    assert vector_norm(e2.total, [2, 0, 0], [0, 1, 0]) == pytest.approx(np.sqrt(5.0))
    assert vector_norm(e2.total, [2, 0, 0], [0, 0, 0]) == 0.0


def test_distance_oracles(e1):
    assert distance(e1.total, [0, 0, 0], [1, 1, 1]) == pytest.approx(np.sqrt(3.0))
    assert distance(e1.total, [1, 2, 3], [1, 2, 3]) == 0.0


def test_graph_distance_matches_euclidean(e1_graph, rng):
    X = e1_graph.total.sample(200, 5)
    Y = e1_graph.total.sample(200, 6)
    d = e1_graph.total.pair_distances(X, Y)
    truth = np.linalg.norm(X - Y, axis=1)
    assert np.max(np.abs(d - truth) / truth) <= 0.03


def test_minimal_geodesic_flat(e1):
    g = minimal_geodesic(e1.base, [0, 0], [2, 0])
    assert np.allclose(g.position(0.5), [1.0, 0.0])
    assert g.length(e1.base) == pytest.approx(distance(e1.base, [0, 0], [2, 0]), abs=1e-9)
    c = minimal_geodesic(e1.base, [1, 1], [1, 1])
    assert c.length(e1.base) == 0.0


def test_horizontal_solve_oracles(e1, e2):
    assert np.allclose(horizontal_solve(e1, [1, 1, 1], [0.3, -0.7]), [0.3, -0.7, 0.0])
    v = horizontal_solve(e2, [2, 0, 0], [0, 1])
    assert np.allclose(v, [0, 1, 2])
    assert vector_norm(e2.total, [2, 0, 0], v) == pytest.approx(1.0)


def test_zero_jacobian_is_rank_deficient(e1):
    S = SubmersionSpec(
        name="broken", total=e1.total, base=e1.base, pi_eval=e1.pi_eval,
        jac_eval=lambda X: np.zeros(np.shape(X)[:-1] + (2, 3)),
        fiber_sampler=e1.fiber_sampler,
    )
    with pytest.raises(RankDeficient):
        horizontal_solve(S, [1, 1, 1], [1, 0])


def test_jacobian_check(e1, e2):
    assert jacobian_check(e1, [1, 2, 3], 1e-5) <= 1e-9
    assert jacobian_check(e2, [2, 0.5, 0], 1e-5) <= 1e-6
    with pytest.raises(OutOfDomain):
        jacobian_check(e1, [0, 2, 3], 1e-5)


# --- errors ----------------------------------------------------------------

def test_out_of_domain(e1):
    with pytest.raises(OutOfDomain):
        metric_at(e1.total, [6.0, 0.0, 0.0])


def test_not_positive_definite():
    M = ManifoldSpec(
        name="bad", dim=2, metric_eval=lambda X: np.broadcast_to(np.diag([1.0, -1.0]), np.shape(X)[:-1] + (2, 2)),
        domain_lo=np.zeros(2), domain_hi=np.ones(2), distance_mode="graph",
    )
    with pytest.raises(NotPositiveDefinite):
        metric_at(M, [0.5, 0.5])


# --- curves ----------------------------------------------------------------

def test_polyline_is_proportional():
    B = flat_box("B", [0, 0], [5, 5])
    c = Curve.polyline([[0, 0], [1, 0], [1, 3]])
    assert c.proportional
    assert c.length(B) == pytest.approx(4.0)
    assert np.allclose(c.position(0.25), [1.0, 0.0])
    assert c.check_proportional(B)


def test_circle_length():
    B = flat_box("B", [0, 0], [5, 5])
    c = Curve.circle([2, 2], 1.0)
    assert c.is_closed()
    assert c.length(B) == pytest.approx(2 * np.pi, rel=1e-9)
    assert np.allclose(c.speeds(B), 2 * np.pi)


def test_reversed_and_concat():
    B = flat_box("B", [0, 0], [5, 5])
    a = Curve.segment([0, 0], [1, 0])
    b = Curve.segment([1, 0], [1, 3])
    ab = a.concat(b, B)
    assert np.allclose(ab.end, [1, 3])
    assert ab.length(B) == pytest.approx(4.0)
    assert np.allclose(ab.reversed().position(0.0), [1, 3])


# --- properties ------------------------------------------------------------

@given(coord, coord, st.floats(-2, 2), vec)
def test_norm_zero_iff_zero_vector(x, y, z, v):
    G = heisenberg_metric(np.array([x, y, z]))
    n = np.sqrt(np.array(v) @ G @ np.array(v))
    assert (n == 0) == (not np.any(v))


@given(coord, coord, st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_horizontal_solve_contract(e2, x, y, z, w1, w2):
    X = np.array([[x, y, z]])
    v = horizontal_solve_batch(e2, X, np.array([[w1, w2]]))[0]
    J = e2.jacobian(X)[0]
    assert np.linalg.norm(J @ v - [w1, w2]) <= 1e-9
    for k in e2.kernel_basis(X[0]).T:
        assert abs(k @ metric_at(e2.total, X[0]) @ v) <= 1e-8


@given(coord, coord, st.floats(-2, 2), vec)
def test_vertical_horizontal_decomposition(e2, x, y, z, v):
    X = np.array([x, y, z])
    v = np.array(v)
    w = e2.jacobian(X[None])[0] @ v
    recon = vertical_part(e2, X, v) + horizontal_solve(e2, X, w)
    assert np.allclose(recon, v, atol=1e-8)


def test_graph_triangle_inequality_unrefined(rng):
    M = get_graph_heisenberg()
    X = M.sample(30, 11)
    D = M.pairwise(X)
    viol = D[:, None, :] - (D[:, :, None] + D[None, :, :])
    assert viol.max() <= 1e-9


def get_graph_heisenberg():
    from roughnet.examples import heisenberg

    return heisenberg(graph_options={"refine": False, "samples": 2000}).total
