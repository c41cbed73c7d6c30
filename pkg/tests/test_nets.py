import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughnet.errors import Disconnected, EmptyFactor
from roughnet.nets import (
    EpsilonNet,
    Net,
    build_adjacency,
    build_max_separated,
    check_fullness,
    combinatorial_dist,
    fit_net_constants,
    hop_matrix,
    product_net,
)


def line_net(xs, eps):
    return build_adjacency(Net(eps, np.asarray(xs, dtype=float)[:, None]))


# --- oracles ---------------------------------------------------------------

def test_greedy_line_trace():
    net = build_max_separated([[0.0], [0.5], [1.2], [2.0], [3.1]], 1.0)
    assert net.points.ravel().tolist() == [0.0, 1.2, 3.1]


def test_empty_and_single():
    assert len(build_max_separated(np.zeros((0, 2)), 1.0)) == 0
    one = build_max_separated([[2.0, 3.0]], 1.0)
    assert one.points.tolist() == [[2.0, 3.0]]


def test_adjacency_threshold():
    net = line_net([0, 1.5, 3.5], 1.0)
    assert net.edges() == [(0, 1), (1, 2)]
    assert combinatorial_dist(net, 0, 2) == 2
    assert line_net([4.0], 1.0).edges() == []


def test_isolated_points_disconnected():
    net = line_net([0, 5], 1.0)
    with pytest.raises(Disconnected):
        combinatorial_dist(net, 0, 1)
    with pytest.raises(Disconnected):
        hop_matrix(net)


def test_product_sums():
    # spacing 1 at eps 0.5: only consecutive points are neighbors, so hops = index gaps
    P0 = line_net([0, 1, 2, 3], 0.5)
    PB = build_adjacency(Net(0.5, np.array([[0, 0], [1, 0], [2, 0], [3, 0.0]])))
    pn = product_net(P0, PB)
    assert pn.delta_cross((0, 0), (2, 3)) == 5
    assert pn.delta_cross((1, 2), (1, 2)) == 0
    assert pn.d_cross((1, 2), (1, 2)) == 0.0
    assert len(pn) == 16
    with pytest.raises(EmptyFactor):
        product_net(P0, Net(1.0, np.zeros((0, 2))))


def test_product_separation_is_min_of_factors():
    P0 = line_net([0, 1.5], 1.5)
    PB = line_net([0, 2.0], 2.0)
    assert product_net(P0, PB).min_separation() == pytest.approx(1.5)


def test_fit_evenly_spaced_line():
    fit = fit_net_constants(line_net(np.arange(8.0), 1.0))
    assert fit.a_tilde == pytest.approx(1.0)
    assert fit.c_tilde == 0.0
    assert fit.lower_ratio == pytest.approx(0.5)
    assert fit.lower_violations == 0


def test_fit_singleton_vacuous():
    fit = fit_net_constants(line_net([1.0], 1.0))
    assert (fit.a_tilde, fit.c_tilde) == (0.0, 0.0)


def test_fit_grid_net():
    g = np.stack(np.meshgrid(np.arange(6.0), np.arange(6.0)), -1).reshape(-1, 2)
    fit = fit_net_constants(build_adjacency(Net(1.0, g)))
    assert fit.a_tilde <= 2.0


def test_fullness_cases():
    pts = np.random.default_rng(0).uniform(0, 5, size=(500, 2))
    net = build_max_separated(pts, 0.5)
    assert check_fullness(net, pts, 0.5)[0]
    far = np.array([[100.0, 100.0]])
    ok, gap = check_fullness(net, far, 0.5)
    assert not ok and gap >= 10 * 0.5
    assert check_fullness(net, np.zeros((0, 2)), 0.5) == (True, 0.0)
    ok, gap = check_fullness(Net(0.5, np.zeros((0, 2))), pts, 0.5)
    assert not ok and gap == np.inf


def test_json_roundtrip():
    net = line_net([0, 1.5, 3.5], 1.0)
    back = Net.from_json(net.to_json())
    assert np.array_equal(back.points, net.points)
    assert [list(a) for a in back.adjacency] == [list(a) for a in net.adjacency]
    assert net.to_csv().splitlines()[0] == "index,x0"


def test_bfs_agrees_with_hop_matrix():
    pts = np.random.default_rng(2).uniform(0, 4, size=(300, 2))
    net = build_adjacency(build_max_separated(pts, 0.6))
    H = hop_matrix(net)
    for i, j in [(0, 1), (3, 7), (len(net) - 1, 0)]:
        assert combinatorial_dist(net, i, j) == H[i, j]


# --- estimator ---------------------------------------------------------------

def test_epsilon_net_estimator():
    X = np.random.default_rng(3).uniform(0, 5, size=(400, 2))
    est = EpsilonNet(epsilon=1.0).fit(X)
    assert est.n_features_in_ == 2
    assert est.net_.min_separation() >= 1.0
    idx = est.predict(X)
    assert np.all(est.transform(X)[np.arange(len(X)), idx] < 1.0)
    assert est.get_params()["epsilon"] == 1.0


# --- properties --------------------------------------------------------------

@given(st.integers(0, 10_000), st.floats(0.3, 1.5))
def test_greedy_net_axioms(seed, eps):
    pts = np.random.default_rng(seed).uniform(0, 4, size=(300, 2))
    net = build_adjacency(build_max_separated(pts, eps))
    assert net.min_separation() >= eps
    assert check_fullness(net, pts, eps)[0]
    H = net.hops
    iu = np.triu_indices(len(net), 1)
    assert np.all(H[iu] >= net.distances[iu] / (2 * eps))
    A = net.graph().toarray()
    assert np.array_equal(A, A.T) and not np.any(np.diag(A))


@given(st.integers(0, 10_000))
def test_fullness_monotone_in_probes(seed):
    rng = np.random.default_rng(seed)
    net = build_max_separated(rng.uniform(0, 4, size=(200, 2)), 0.8)
    probes = rng.uniform(0, 4, size=(50, 2))
    more = np.vstack([probes, rng.uniform(0, 4, size=(50, 2))])
    assert check_fullness(net, more, 0.8)[1] >= check_fullness(net, probes, 0.8)[1]


def test_ten_thousand_points_fast():
    pts = np.random.default_rng(0).uniform(0, 10, size=(10_000, 2))
    t = time.perf_counter()
    net = build_max_separated(pts, 1.0)
    assert time.perf_counter() - t < 5.0
    assert net.min_separation() >= 1.0
