"""Maximal separated nets, neighbour graphs and combinatorial metrics.

A distance argument ``d`` is anything :func:`as_pairwise` understands: a
:class:`~roughnet.geometry.ManifoldSpec` (its ``pairwise``), a callable
``d(X, Y) -> (len(X), len(Y))`` matrix, or ``None`` for Euclidean distance.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_positive, grid_ceil
from .errors import Disconnected, EmptyFactor

NET_GRID = 1e-3


# graph distances stretch raw paths by well under 2x, so decisions at radius r only
# need relaxed lengths for pairs whose raw length is below LOCAL_FACTOR * r
LOCAL_FACTOR = 2.0


def as_pairwise(d, local=None):
    """Pairwise-distance callable for ``d``; ``local`` is the radius the caller decides at."""
    if d is None:
        return cdist
    if hasattr(d, "pairwise"):
        if local is not None and getattr(d, "distance_mode", None) == "graph":
            return lambda X, Y: d.pairwise(X, Y, refine_below=LOCAL_FACTOR * local)
        return d.pairwise
    if callable(d):
        return d
    raise TypeError(f"cannot use {type(d).__name__} as a distance")


@dataclass(eq=False)
class Net:
    """An ``epsilon``-separated point set with its neighbour graph.

    ``adjacency[i]`` lists the indices ``j`` with ``0 < d(p_i, p_j) <= 2*epsilon``;
    ``distances`` holds the full pairwise matrix once adjacency is built. With
    graph distances, entries beyond ``2 * LOCAL_FACTOR * epsilon`` are raw
    (unrelaxed) graph lengths, which only ever overestimate.
    """

    epsilon: float
    points: np.ndarray
    space: str = "M"
    adjacency: Optional[list] = None
    distances: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    def edges(self):
        self._need_adjacency()
        return [(i, int(j)) for i, nb in enumerate(self.adjacency) for j in nb if j > i]

    def _need_adjacency(self):
        if self.adjacency is None:
            raise ValueError("net has no adjacency; call build_adjacency first")

    def graph(self):
        self._need_adjacency()
        n = len(self)
        rows = np.concatenate([np.full(len(nb), i) for i, nb in enumerate(self.adjacency)]) if n else np.zeros(0)
        cols = np.concatenate(self.adjacency) if n else np.zeros(0)
        return csr_matrix((np.ones(len(rows)), (rows.astype(int), cols.astype(int))), shape=(n, n))

    @cached_property
    def hops(self):
        """All-pairs hop counts (float, ``inf`` across components)."""
        if len(self) == 0:
            return np.zeros((0, 0))
        return shortest_path(self.graph(), unweighted=True, directed=False)

    def components(self):
        """Component label per point."""
        return connected_components(self.graph(), directed=False)[1]

    def is_connected(self):
        return len(self) <= 1 or int(connected_components(self.graph(), directed=False)[0]) == 1

    def min_separation(self, d=None):
        """Smallest pairwise distance; uses stored distances when present, else ``d``."""
        if len(self) < 2:
            return np.inf
        D = self.distances if self.distances is not None else as_pairwise(d)(self.points, self.points)
        return float(D[np.triu_indices(len(self), 1)].min())

    # -- serialisation ----------------------------------------------------
    def to_csv(self, path=None):
        header = "index," + ",".join(f"x{k}" for k in range(self.dim))
        lines = [header] + [f"{i}," + ",".join(repr(float(v)) for v in p) for i, p in enumerate(self.points)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_dict(self):
        return {
            "epsilon": float(self.epsilon),
            "space": self.space,
            "points": self.points.tolist(),
            "adjacency": None if self.adjacency is None else [list(map(int, nb)) for nb in self.adjacency],
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        pts = np.asarray(data["points"], dtype=float).reshape(len(data["points"]), -1)
        adj = data.get("adjacency")
        if adj is not None:
            adj = [np.asarray(nb, dtype=int) for nb in adj]
        return cls(data["epsilon"], pts, data.get("space", "M"), adj)


def build_max_separated(points, eps, d=None, seeds=None, sort=True, space="M", block=256):
    """Greedy maximal ``eps``-separated subset of ``points``.

    Points are scanned in lexicographic coordinate order (after any ``seeds``,
    which are scanned first in the given order). A point is kept iff it is at
    distance >= ``eps`` from everything kept so far, so the result is
    ``eps``-separated and every scanned point lies within ``eps`` of it.

    Examples
    --------
    >>> build_max_separated([[0.0], [0.5], [1.2], [2.0], [3.1]], 1.0).points.ravel()
    array([0. , 1.2, 3.1])
    """
    eps = check_positive(eps, "eps")
    P = check_points(points)
    dist = as_pairwise(d, local=eps)
    if sort and len(P):
        P = P[np.lexsort(P.T[::-1])]
    if seeds is not None:
        Sd = check_points(seeds, P.shape[1] if len(P) else None)
        P = np.vstack([Sd, P]) if len(P) else Sd
    if len(P) == 0:
        return Net(eps, P.reshape(0, P.shape[1] if P.ndim == 2 else 0), space)
    kept = np.zeros((0, P.shape[1]))
    for start in range(0, len(P), block):
        cand = P[start:start + block]
        ok = np.ones(len(cand), dtype=bool)
        if len(kept):
            ok = dist(cand, kept).min(axis=1) >= eps
        idx = np.flatnonzero(ok)
        if len(idx) == 0:
            continue
        inner = dist(cand[idx], cand[idx])
        chosen = []
        for a, i in enumerate(idx):
            if all(inner[a, b] >= eps for b in chosen):
                chosen.append(a)
        kept = np.vstack([kept, cand[idx[chosen]]])
    return Net(eps, kept, space)


def check_fullness(net, probes, radius, d=None):
    """``(is_full, max_gap)``: whether every probe lies strictly within ``radius`` of the net.

    When ``d`` offers ``pairwise_upper`` (a cheap distance that never undercuts
    ``d``), probes it already places inside the radius are accepted on that
    bound and only the rest are measured with ``d``; ``max_gap`` is then an
    upper bound on the true largest gap.
    """
    radius = check_positive(radius, "radius")
    Q = check_points(probes)
    if len(Q) == 0:
        return True, 0.0
    if len(net) == 0:
        return False, np.inf
    upper = getattr(d, "pairwise_upper", None)
    if upper is not None:
        gaps = _gaps(Q, net.points, upper)
        far = gaps >= radius
        if np.any(far):
            gaps[far] = _gaps(Q[far], net.points, as_pairwise(d))
    else:
        gaps = _gaps(Q, net.points, as_pairwise(d))
    gap = float(gaps.max())
    return bool(gap < radius), gap


def _gaps(Q, S, dist, chunk=2048):
    return np.concatenate([dist(Q[i:i + chunk], S).min(axis=1) for i in range(0, len(Q), chunk)])


def build_adjacency(net, d=None):
    """Populate ``net.adjacency`` with ``p ~ q  <=>  0 < d(p, q) <= 2 eps``."""
    n = len(net)
    D = as_pairwise(d, local=2 * net.epsilon)(net.points, net.points) if n else np.zeros((0, 0))
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    mask = (D > 0) & (D <= 2 * net.epsilon)
    net.adjacency = [np.flatnonzero(mask[i]) for i in range(n)]
    net.distances = D
    net.__dict__.pop("hops", None)
    return net


def combinatorial_dist(net, i, j):
    """Hop count between net points ``i`` and ``j`` by breadth-first search."""
    net._need_adjacency()
    n = len(net)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"net has {n} points")
    if i == j:
        return 0
    seen = np.full(n, -1)
    seen[i] = 0
    queue = deque([i])
    while queue:
        u = queue.popleft()
        for v in net.adjacency[u]:
            if seen[v] < 0:
                seen[v] = seen[u] + 1
                if v == j:
                    return int(seen[v])
                queue.append(v)
    raise Disconnected(f"net points {i} and {j} lie in different components")


def hop_matrix(net):
    """All-pairs combinatorial metric; raises :class:`Disconnected` if the net graph is."""
    H = net.hops
    if not np.all(np.isfinite(H)):
        i, j = np.argwhere(~np.isfinite(H))[0]
        raise Disconnected(f"net points {i} and {j} lie in different components")
    return H.astype(np.int64)


@dataclass
class ProductNet:
    """``P0 x PB`` with the sum metrics ``d_x`` and ``delta_x``.

    Product points are ``(fiber_index, base_index)``; the flat index of
    ``(i, b)`` is ``b * len(P0) + i``.
    """

    P0: Net
    PB: Net
    d_fiber: Optional[np.ndarray] = None
    d_base: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.P0) * len(self.PB)

    def split(self, flat):
        flat = np.asarray(flat)
        return flat % len(self.P0), flat // len(self.P0)

    def d_cross(self, a, b):
        (i, bi), (j, bj) = a, b
        return float(self.d_fiber[i, j] + self.d_base[bi, bj])

    def delta_cross(self, a, b):
        (i, bi), (j, bj) = a, b
        return int(hop_matrix(self.P0)[i, j] + hop_matrix(self.PB)[bi, bj])

    def delta_matrix(self, fiber_idx, base_idx):
        """``delta_x`` between all listed product points (vectorised)."""
        H0, HB = hop_matrix(self.P0), hop_matrix(self.PB)
        fi, bi = np.asarray(fiber_idx), np.asarray(base_idx)
        return H0[np.ix_(fi, fi)] + HB[np.ix_(bi, bi)]

    def min_separation(self):
        """Smallest ``d_x`` over distinct product points.

        Two product points can differ in one factor only, so this is
        ``min(sep(P0), sep(PB))`` rather than the sum of the radii.
        """
        if len(self) < 2:
            return np.inf
        return min(self.P0.min_separation(), self.PB.min_separation())


def product_net(P0, PB):
    if len(P0) == 0 or len(PB) == 0:
        raise EmptyFactor("both factor nets must be nonempty")
    for net in (P0, PB):
        if net.adjacency is None:
            raise ValueError("factor nets need adjacency")
    return ProductNet(P0, PB, P0.distances, PB.distances)


@dataclass
class NetFitConstants:
    """Upper constants ``delta <= a_tilde d + c_tilde`` of a net, plus the exact lower side.

    ``lower_ratio`` is ``min eps*delta/d`` over distinct pairs; the lower side
    ``delta >= d/(2 eps)`` holds iff it is at least 1/2 (``lower_violations == 0``).
    """

    a_tilde: float
    c_tilde: float
    epsilon: float
    pair_count: int = 0
    upper_violations: int = 0
    lower_violations: int = 0
    lower_ratio: float = np.inf

    def to_dict(self):
        return {k: float(v) if isinstance(v, float) else v for k, v in self.__dict__.items()}


def fit_net_constants(net, grid=NET_GRID):
    """Fit ``(a_tilde, c_tilde)`` on all pairs of a connected net.

    ``a_tilde`` is the grid ceiling of ``max delta/d``; ``c_tilde`` is then the
    least grid value keeping every pair within ``a_tilde d + c_tilde`` (zero
    unless round-off intervenes). Both are re-audited on every pair.
    """
    n = len(net)
    if n < 2:
        return NetFitConstants(0.0, 0.0, float(net.epsilon))
    H = hop_matrix(net).astype(float)
    D = net.distances
    iu = np.triu_indices(n, 1)
    h, dd = H[iu], D[iu]
    a = grid_ceil(float(np.max(h / dd)), grid)
    c = grid_ceil(float(np.max(h - a * dd)), grid)
    while np.any(h > a * dd + c):
        c += grid
    lower = int(np.sum(h < dd / (2 * net.epsilon)))
    return NetFitConstants(
        a_tilde=a,
        c_tilde=c,
        epsilon=float(net.epsilon),
        pair_count=len(h),
        upper_violations=int(np.sum(h > a * dd + c)),
        lower_violations=lower,
        lower_ratio=float(np.min(net.epsilon * h / dd)),
    )


class EpsilonNet(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` builds a maximal separated net with its graph.

    Parameters
    ----------
    epsilon : float
    metric : callable or ManifoldSpec, optional
        Pairwise distance; Euclidean when omitted.
    sort : bool
        Scan input lexicographically (default) instead of in given order.

    Attributes
    ----------
    net_ : Net
    constants_ : NetFitConstants
        Only when the net graph is connected.
    """

    def __init__(self, epsilon=1.0, metric=None, sort=True):
        self.epsilon = epsilon
        self.metric = metric
        self.sort = sort

    def fit(self, X, y=None):
        X = check_points(X, allow_empty=False)
        net = build_max_separated(X, self.epsilon, self.metric, sort=self.sort)
        self.net_ = build_adjacency(net, self.metric)
        self.n_features_in_ = X.shape[1]
        if self.net_.is_connected():
            self.constants_ = fit_net_constants(self.net_)
        return self

    @property
    def centers_(self):
        check_is_fitted(self, "net_")
        return self.net_.points

    def transform(self, X):
        check_is_fitted(self, "net_")
        X = check_points(X, self.n_features_in_)
        return as_pairwise(self.metric)(X, self.net_.points)

    def predict(self, X):
        """Index of the nearest net point."""
        return np.argmin(self.transform(X), axis=1)
