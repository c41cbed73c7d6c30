"""Graph approximation of Riemannian distance on a sampled chart.

A uniform sample of the domain box is joined into a k-nearest-neighbour graph
whose edge weights are midpoint-metric segment lengths. Query points are
spliced into the graph, Dijkstra gives a shortest path, and (optionally) the
path is relaxed as a polyline with fixed endpoints by L-BFGS-B on its discrete
energy. The relaxed length is the length of an actual curve, so it never
undercuts the true distance beyond quadrature error.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from ._parallel import parallel_map
from .errors import GraphDisconnected

_FD_STEP = 1e-6


class GraphDistance:
    """Shortest-path distance oracle for a :class:`~roughnet.geometry.ManifoldSpec`.

    Parameters
    ----------
    manifold : ManifoldSpec
    samples : int
        Number of uniform sample points in the domain box.
    k : int
        Nearest neighbours per sample (coordinate space).
    seed : int
    refine : bool
        Relax every Dijkstra path into a locally length-minimising polyline.
    max_segment : float, optional
        Finest chart-space segment of the relaxed polyline; defaults to half
        the mean sample spacing.
    levels : int
        Coarse-to-fine relaxation levels (segment length doubles per level).
    """

    def __init__(self, manifold, samples=4000, k=12, seed=0, refine=True, max_segment=None, levels=3):
        self.manifold = manifold
        self.k = int(k)
        self.refine = bool(refine)
        self.points = manifold.sample(int(samples), seed)
        spacing = (np.prod(manifold.domain_hi - manifold.domain_lo) / samples) ** (1.0 / manifold.dim)
        self.max_segment = float(max_segment) if max_segment else spacing / 2.0
        self.levels = int(levels)
        self._tree = cKDTree(self.points)
        dist, idx = self._tree.query(self.points, self.k + 1)
        rows = np.repeat(np.arange(len(self.points)), self.k)
        cols = idx[:, 1:].ravel()
        w = manifold.segment_lengths(self.points[rows], self.points[cols])
        self._rows, self._cols, self._w = rows, cols, w

    def _augmented(self, Q):
        n = len(self.points)
        k = min(self.k, n)
        _, idx = self._tree.query(Q, k)
        idx = np.asarray(idx).reshape(len(Q), k)
        qrows = np.repeat(np.arange(len(Q)) + n, k)
        qcols = idx.ravel()
        qw = self.manifold.segment_lengths(Q[qrows - n], self.points[qcols])
        rows = np.concatenate([self._rows, qrows, qcols])
        cols = np.concatenate([self._cols, qcols, qrows])
        w = np.concatenate([self._w, qw, qw])
        # zero-length edges vanish in sparse storage; keep them as tiny positive weights
        w = np.maximum(w, 1e-300)
        size = n + len(Q)
        # dijkstra(directed=False) walks each stored edge both ways
        A = csr_matrix(coo_matrix((w, (rows, cols)), shape=(size, size)))
        return A, np.vstack([self.points, Q])

    def _dijkstra(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        same = X.shape == Y.shape and np.array_equal(X, Y)
        Q = X if same else np.vstack([X, Y])
        A, nodes = self._augmented(Q)
        n = len(self.points)
        xs = n + np.arange(len(X))
        ys = xs if same else n + len(X) + np.arange(len(Y))
        D, pred = dijkstra(A, directed=False, indices=xs, return_predecessors=True)
        out = D[:, ys]
        if not np.all(np.isfinite(out)):
            raise GraphDisconnected("sample graph has no path between some query points")
        exact = np.all(X[:, None, :] == Y[None, :, :], axis=-1)
        out[exact] = 0.0
        return out, same, exact, (nodes, pred, xs, ys)

    def pairwise_upper(self, X, Y):
        """Unrelaxed graph distances; never below what :meth:`pairwise` returns."""
        out, same, _, _ = self._dijkstra(X, Y)
        if same:
            upper = np.triu(out, 1)
            out = upper + upper.T
        return out

    def pairwise(self, X, Y, refine_below=None):
        """Graph distances, relaxed where ``refine`` is on.

        ``refine_below`` limits relaxation to pairs whose raw graph length is at
        most that value; the others keep the raw length, an upper bound.
        """
        out, same, exact, (nodes, pred, xs, ys) = self._dijkstra(X, Y)
        if self.refine:
            near = np.ones_like(exact) if refine_below is None else out <= refine_below
            jobs = [
                (i, j)
                for i, j in zip(*np.nonzero(near & ~exact))
                if not same or j > i
            ]
            paths = [self._path(nodes, pred[i], xs[i], ys[j]) for i, j in jobs]
            for (i, j), v in zip(jobs, self._relax_many(paths)):
                out[i, j] = min(out[i, j], v)
        if same:
            upper = np.triu(out, 1)
            out = upper + upper.T
        return out

    def pair_distances(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        A, nodes = self._augmented(np.vstack([X, Y]))
        n = len(self.points)
        xs = n + np.arange(len(X))
        ys = n + len(X) + np.arange(len(Y))
        D, pred = dijkstra(A, directed=False, indices=xs, return_predecessors=True)
        out = D[np.arange(len(X)), ys]
        if not np.all(np.isfinite(out)):
            raise GraphDisconnected("sample graph has no path between some query points")
        exact = np.all(X == Y, axis=1)
        out[exact] = 0.0
        if self.refine:
            jobs = [i for i in range(len(X)) if not exact[i]]
            paths = [self._path(nodes, pred[i], xs[i], ys[i]) for i in jobs]
            for i, v in zip(jobs, self._relax_many(paths)):
                out[i] = min(out[i], v)
        return out

    # -- polyline relaxation ---------------------------------------------
    def _path(self, nodes, pred_row, source, target):
        path = [target]
        while path[-1] != source:
            path.append(pred_row[path[-1]])
        return nodes[np.array(path[::-1])]

    def _relax_many(self, paths, batch=256):
        """Relaxed lengths of many polylines; batches are independent jobs."""
        chunks = [paths[i:i + batch] for i in range(0, len(paths), batch)]
        out = parallel_map(lambda c: relax_polylines(self.manifold, c, self.max_segment, self.levels), chunks)
        return np.concatenate(out) if out else np.zeros(0)


def _resample(P, max_segment):
    """Evenly spaced (in chart arclength) copy of polyline ``P`` with segments <= max_segment."""
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0:
        return P[[0, -1]]
    n = max(1, int(np.ceil(total / max_segment)))
    s = np.linspace(0.0, total, n + 1)
    out = np.column_stack([np.interp(s, cum, P[:, k]) for k in range(P.shape[1])])
    out[0], out[-1] = P[0], P[-1]
    return out


def polyline_lengths(M, paths):
    return np.array([M.segment_lengths(P[:-1], P[1:]).sum() for P in paths])


def relax_polylines(M, paths, max_segment, levels=3):
    """Metric lengths of geodesically relaxed polylines with fixed endpoints.

    Coarse-to-fine: each level resamples the previous level's output at half
    the segment length and minimises the discrete energy. The returned length
    is that of a real polyline (or of the input, whichever is shorter).
    """
    before = polyline_lengths(M, paths)
    current = list(paths)
    for level in range(levels - 1, -1, -1):
        seg = max_segment * 2 ** level
        current = _minimise_energy(M, [_resample(P, seg) for P in current])
    return np.minimum(before, polyline_lengths(M, current))


def _minimise_energy(M, paths):
    m = M.dim
    Z0 = np.vstack(paths)
    sizes = np.array([len(p) for p in paths])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    a_idx = np.concatenate([np.arange(o, o + n - 1) for o, n in zip(offsets[:-1], sizes)])
    b_idx = a_idx + 1
    free = np.ones(len(Z0), dtype=bool)
    free[offsets[:-1]] = False
    free[offsets[1:] - 1] = False
    if not free.any():
        return paths
    eye = np.eye(m) * _FD_STEP
    scale = 1.0 / len(paths)

    def fun(z):
        # discrete energy sum |D|_G^2 is smooth; its minimiser is an evenly paced geodesic polyline
        Z = Z0.copy()
        Z[free] = z.reshape(-1, m)
        A, B = Z[a_idx], Z[b_idx]
        D = B - A
        mid = 0.5 * (A + B)
        stencil = np.concatenate([mid[None], mid[None] + eye[:, None, :], mid[None] - eye[:, None, :]])
        Gs = M.metric(stencil.reshape(-1, m)).reshape(2 * m + 1, len(mid), m, m)
        dG = (Gs[1:m + 1] - Gs[m + 1:]) / (2 * _FD_STEP)
        GD = np.einsum("nij,nj->ni", Gs[0], D)
        q = 0.5 * np.einsum("ni,knij,nj->nk", D, dG, D)
        g = np.zeros_like(Z)
        np.add.at(g, b_idx, 2 * GD + q)
        np.add.at(g, a_idx, q - 2 * GD)
        return float(np.einsum("ni,ni->", D, GD)) * scale, g[free].ravel() * scale

    nfree = int(free.sum())
    bounds = list(zip(np.tile(M.domain_lo, nfree), np.tile(M.domain_hi, nfree)))
    res = minimize(fun, Z0[free].ravel(), jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": 1000, "maxfun": 4000, "ftol": 1e-12, "gtol": 1e-8})
    Z = Z0.copy()
    Z[free] = res.x.reshape(-1, m)
    return [Z[o:o + n] for o, n in zip(offsets[:-1], sizes)]
