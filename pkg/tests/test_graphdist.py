import numpy as np
import pytest

from roughnet.examples import flat_product, heisenberg
from roughnet.graphdist import GraphDistance, polyline_lengths, relax_polylines


@pytest.fixture(scope="module")
def flat_graph():
    return flat_product(distance_mode="graph", graph_options={"samples": 2000}).total


def test_pairwise_symmetric_zero_diagonal(flat_graph):
    X = flat_graph.sample(25, 3)
    D = flat_graph.pairwise(X)
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)


def test_graph_never_undercuts_straight_line(flat_graph):
    # on a flat box every path is at least as long as the chord
    X = flat_graph.sample(30, 4)
    D = flat_graph.pairwise(X)
    E = np.linalg.norm(X[:, None] - X[None], axis=-1)
    assert np.all(D >= E - 1e-9)


def test_upper_bound_dominates_refined(flat_graph):
    X = flat_graph.sample(20, 8)
    assert np.all(flat_graph.pairwise_upper(X) >= flat_graph.pairwise(X) - 1e-12)


def test_refine_below_keeps_far_pairs_raw(flat_graph):
    X = flat_graph.sample(20, 9)
    raw = flat_graph.pairwise_upper(X)
    part = flat_graph.pairwise(X, refine_below=1.0)
    far = raw > 1.0
    assert np.allclose(part[far], raw[far])
    assert np.all(part <= raw + 1e-12)


def test_relaxation_never_lengthens():
    M = heisenberg().total
    rng = np.random.default_rng(0)
    paths = [np.array([[1, 1, 0], [1 + rng.uniform(0, .5), 2, 0.3], [2, 3, 0.5]]) for _ in range(5)]
    before = polyline_lengths(M, paths)
    after = relax_polylines(M, paths, 0.1)
    assert np.all(after <= before + 1e-12)


def test_straight_chord_is_fixed_point():
    M = flat_product().total
    paths = [np.array([[0.5, 0.5, 0.5], [1.5, 2.5, 0.5]])]
    assert relax_polylines(M, paths, 0.2)[0] == pytest.approx(np.sqrt(5.0), rel=1e-9)


def test_graph_distance_is_deterministic():
    M = flat_product(distance_mode="graph", graph_options={"samples": 800}).total
    X = M.sample(6, 1)
    a = GraphDistance(M, samples=800, seed=3).pairwise(X, X)
    b = GraphDistance(M, samples=800, seed=3).pairwise(X, X)
    assert np.array_equal(a, b)
