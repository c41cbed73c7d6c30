"""Single-chart Riemannian manifolds, submersions and curves.

Points are plain 1-D numpy arrays of chart coordinates. Every evaluator on a
:class:`ManifoldSpec` or :class:`SubmersionSpec` is vectorised over leading
batch axes, so ``metric_eval`` maps ``(..., m)`` to ``(..., m, m)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from ._validation import check_point, check_points
from .errors import (
    NoGeodesicOracle,
    NotPositiveDefinite,
    OutOfDomain,
    RankDeficient,
)

DOMAIN_TOL = 1e-9
RANK_TOL = 1e-9
SYMMETRY_TOL = 1e-12

# Gauss-Legendre nodes on [0, 1] for curve-length quadrature.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True, eq=False)
class ManifoldSpec:
    """A Riemannian manifold described by one global chart on a coordinate box.

    ``k_bound`` and ``inj_radius`` are the declared bounded-geometry constants
    (Ricci lower-bound constant and injectivity radius); they are never
    computed.
    """

    name: str
    dim: int
    metric_eval: Callable[[np.ndarray], np.ndarray]
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    distance_mode: str = "analytic"
    geodesic_mode: str = "unavailable"
    k_bound: float = 1.0
    inj_radius: float = 1.0
    analytic_distance: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    geodesic: Optional[Callable[[np.ndarray, np.ndarray], "Curve"]] = None
    # elementwise d(X[i], Y[i]); falls back to per-pair analytic_distance calls
    analytic_pair_distance: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    graph_options: dict = field(default_factory=dict)

    def __post_init__(self):
        lo = np.asarray(self.domain_lo, dtype=float)
        hi = np.asarray(self.domain_hi, dtype=float)
        object.__setattr__(self, "domain_lo", lo)
        object.__setattr__(self, "domain_hi", hi)
        if self.dim <= 0 or lo.shape != (self.dim,) or hi.shape != (self.dim,):
            raise ValueError("domain box must have one (lo, hi) pair per coordinate")
        if not np.all(hi > lo):
            raise ValueError("domain box is empty")
        if not (self.k_bound > 0 and self.inj_radius > 0):
            raise ValueError("bounded geometry requires k_bound > 0 and inj_radius > 0")
        if self.distance_mode not in ("analytic", "graph"):
            raise ValueError(f"unknown distance_mode {self.distance_mode!r}")
        if self.distance_mode == "analytic" and self.analytic_distance is None:
            raise ValueError("analytic distance_mode needs analytic_distance")
        if self.geodesic_mode not in ("analytic", "unavailable"):
            raise ValueError(f"unknown geodesic_mode {self.geodesic_mode!r}")

    # -- domain -----------------------------------------------------------
    def in_domain(self, X, tol=DOMAIN_TOL):
        X = np.asarray(X, dtype=float)
        return np.all((X >= self.domain_lo - tol) & (X <= self.domain_hi + tol), axis=-1)

    def check_domain(self, X, tol=DOMAIN_TOL):
        inside = self.in_domain(X, tol)
        if not np.all(inside):
            bad = np.asarray(X, dtype=float).reshape(-1, self.dim)[~np.ravel(inside)][0]
            raise OutOfDomain(f"point {bad.tolist()} lies outside the domain of {self.name}")

    def sample(self, count, seed):
        rng = np.random.default_rng(seed)
        return rng.uniform(self.domain_lo, self.domain_hi, size=(count, self.dim))

    # -- metric -----------------------------------------------------------
    def metric(self, X):
        """Batched metric tensors, without validation."""
        return self.metric_eval(np.asarray(X, dtype=float))

    def inner(self, X, U, V):
        G = self.metric(X)
        return np.einsum("...i,...ij,...j->...", U, G, V)

    def norm(self, X, V):
        return np.sqrt(np.maximum(self.inner(X, V, V), 0.0))

    def segment_lengths(self, A, B):
        """Midpoint-rule metric length of the coordinate segments ``A[i] -> B[i]``."""
        D = B - A
        return self.norm(0.5 * (A + B), D)

    # -- distances --------------------------------------------------------
    @cached_property
    def graph(self):
        from .graphdist import GraphDistance

        return GraphDistance(self, **self.graph_options)

    def pairwise(self, X, Y=None, refine_below=None):
        """Distance matrix between two point sets.

        In graph mode ``refine_below`` caps which pairs get the path
        relaxation (see :meth:`GraphDistance.pairwise`); analytic mode ignores it.
        """
        X = check_points(X, self.dim)
        Y = X if Y is None else check_points(Y, self.dim)
        self.check_domain(X)
        self.check_domain(Y)
        if self.distance_mode == "analytic":
            return self.analytic_distance(X, Y)
        return self.graph.pairwise(X, Y, refine_below)

    def pairwise_upper(self, X, Y=None):
        """Cheap distance matrix that never undercuts :meth:`pairwise` (the same matrix when analytic)."""
        X = check_points(X, self.dim)
        Y = X if Y is None else check_points(Y, self.dim)
        if self.distance_mode == "analytic":
            return self.pairwise(X, Y)
        self.check_domain(X)
        self.check_domain(Y)
        return self.graph.pairwise_upper(X, Y)

    def pair_distances(self, X, Y):
        """Elementwise distances ``d(X[i], Y[i])``."""
        X = check_points(X, self.dim)
        Y = check_points(Y, self.dim)
        if X.shape != Y.shape:
            raise ValueError("pair_distances needs two equally long point lists")
        self.check_domain(X)
        self.check_domain(Y)
        if len(X) == 0:
            return np.zeros(0)
        if self.distance_mode == "analytic":
            if self.analytic_pair_distance is not None:
                return np.asarray(self.analytic_pair_distance(X, Y), dtype=float)
            return np.array([self.analytic_distance(x[None], y[None])[0, 0] for x, y in zip(X, Y)])
        return self.graph.pair_distances(X, Y)

    def distance_to_set(self, X, S):
        """``min_s d(x, s)`` for every ``x`` in ``X``."""
        X = check_points(X, self.dim)
        S = check_points(S, self.dim)
        if len(S) == 0:
            return np.full(len(X), np.inf)
        if len(X) == 0:
            return np.zeros(0)
        out = np.empty(len(X))
        chunk = max(1, 4_000_000 // max(len(S), 1))
        for start in range(0, len(X), chunk):
            out[start:start + chunk] = self.pairwise(X[start:start + chunk], S).min(axis=1)
        return out


def euclidean_pairwise(X, Y):
    from scipy.spatial.distance import cdist

    return cdist(X, Y)


def flat_metric(dim):
    def metric_eval(X):
        X = np.asarray(X, dtype=float)
        return np.broadcast_to(np.eye(dim), X.shape[:-1] + (dim, dim)).copy()

    return metric_eval


def flat_box(name, lo, hi, *, k_bound=1.0, inj_radius=np.inf):
    """Euclidean box with closed-form distances and straight-line geodesics."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    # a convex Euclidean box has no cut locus; inj_radius is declared as the box diameter
    if not np.isfinite(inj_radius):
        inj_radius = float(np.linalg.norm(hi - lo))
    return ManifoldSpec(
        name=name,
        dim=lo.shape[0],
        metric_eval=flat_metric(lo.shape[0]),
        domain_lo=lo,
        domain_hi=hi,
        distance_mode="analytic",
        geodesic_mode="analytic",
        k_bound=k_bound,
        inj_radius=inj_radius,
        analytic_distance=euclidean_pairwise,
        analytic_pair_distance=lambda X, Y: np.linalg.norm(X - Y, axis=1),
        geodesic=lambda a, b: Curve.segment(a, b),
    )


@dataclass(frozen=True, eq=False)
class SubmersionSpec:
    """An onto maximal-rank map ``pi: M -> B`` given in chart coordinates."""

    name: str
    total: ManifoldSpec
    base: ManifoldSpec
    pi_eval: Callable[[np.ndarray], np.ndarray]
    jac_eval: Callable[[np.ndarray], np.ndarray]
    fiber_sampler: Callable[[np.ndarray, int, object], np.ndarray]
    params: dict = field(default_factory=dict)

    @property
    def fiber_dim(self):
        return self.total.dim - self.base.dim

    def project(self, X):
        return self.pi_eval(np.asarray(X, dtype=float))

    def jacobian(self, X):
        return self.jac_eval(np.asarray(X, dtype=float))

    def sample_fiber(self, b, count, seed):
        b = check_point(b, self.base.dim, "b")
        return np.asarray(self.fiber_sampler(b, count, seed), dtype=float).reshape(count, self.total.dim)

    def sample_total(self, count, seed):
        """Points of M drawn as (uniform base point, fiber sample over it)."""
        rng = np.random.default_rng(seed)
        bs = self.base.sample(count, rng)
        return np.vstack([self.sample_fiber(b, 1, rng) for b in bs]) if count else np.zeros((0, self.total.dim))

    def kernel_basis(self, x):
        """Orthonormal (Euclidean) basis of ker J(x), as columns."""
        J = self.jacobian(check_point(x, self.total.dim))
        _, s, vt = np.linalg.svd(J)
        return vt[self.base.dim:].T

    def check_rank(self, X):
        """Smallest singular value of J over the sample; raises if any is below tolerance."""
        J = self.jacobian(check_points(X, self.total.dim))
        s = np.linalg.svd(J, compute_uv=False)[..., -1]
        if np.any(s < RANK_TOL):
            raise RankDeficient(f"Jacobian of {self.name} loses rank (sigma_min={s.min():.3g})")
        return float(s.min())


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class _Line:
    a: np.ndarray
    b: np.ndarray

    def pos(self, s):
        s = np.asarray(s, dtype=float)[..., None]
        return self.a + s * (self.b - self.a)

    def dpos(self, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(self.b - self.a, s.shape + self.a.shape).copy()

    def reversed(self):
        return _Line(self.b, self.a)

    def chart_length(self):
        return float(np.linalg.norm(self.b - self.a))


@dataclass(frozen=True)
class _Arc:
    center: np.ndarray
    radius: float
    theta0: float
    theta1: float

    def pos(self, s):
        th = self.theta0 + np.asarray(s, dtype=float) * (self.theta1 - self.theta0)
        return self.center + self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def dpos(self, s):
        th = self.theta0 + np.asarray(s, dtype=float) * (self.theta1 - self.theta0)
        k = self.radius * (self.theta1 - self.theta0)
        return k * np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def reversed(self):
        return _Arc(self.center, self.radius, self.theta1, self.theta0)

    def chart_length(self):
        return abs(self.radius * (self.theta1 - self.theta0))


class Curve:
    """A piecewise-smooth curve on the fixed parameter domain [0, 1].

    Each piece is a line segment or circular arc in chart coordinates, active
    on ``[knots[i], knots[i+1]]``. ``proportional`` records whether the curve
    is parametrised proportionally to arclength.
    """

    def __init__(self, pieces, knots, proportional):
        knots = np.asarray(knots, dtype=float)
        if len(knots) != len(pieces) + 1 or knots[0] != 0.0 or knots[-1] != 1.0:
            raise ValueError("knots must run from 0 to 1 with one interval per piece")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        self.pieces = tuple(pieces)
        self.knots = knots
        self.proportional = bool(proportional)

    # -- constructors -----------------------------------------------------
    @classmethod
    def segment(cls, a, b):
        a = check_point(a, name="a")
        b = check_point(b, len(a), "b")
        return cls([_Line(a, b)], [0.0, 1.0], True)

    @classmethod
    def constant(cls, a):
        a = check_point(a, name="a")
        return cls([_Line(a, a.copy())], [0.0, 1.0], True)

    @classmethod
    def polyline(cls, vertices, manifold=None):
        """Broken geodesic through ``vertices`` (flat chart), proportional to arclength."""
        V = check_points(vertices, allow_empty=False)
        if len(V) < 2:
            return cls.constant(V[0])
        pieces = [_Line(V[i], V[i + 1]) for i in range(len(V) - 1)]
        return cls._from_weighted(pieces, manifold)

    @classmethod
    def circle(cls, center, radius, turns=1.0, theta0=0.0):
        c = check_point(center, 2, "center")
        arc = _Arc(c, float(radius), float(theta0), float(theta0 + 2 * np.pi * turns))
        return cls([arc], [0.0, 1.0], True)

    @classmethod
    def from_pieces(cls, pieces_with_durations):
        """Curve from explicit (vertices-pair, duration) items; not proportional in general."""
        pieces, durs = [], []
        for (a, b), dur in pieces_with_durations:
            pieces.append(_Line(check_point(a), check_point(b)))
            durs.append(float(dur))
        knots = np.concatenate([[0.0], np.cumsum(durs)]) / np.sum(durs)
        knots[-1] = 1.0
        return cls(pieces, knots, False)

    @classmethod
    def _from_weighted(cls, pieces, manifold=None):
        if manifold is None:
            lengths = np.array([p.chart_length() for p in pieces])
        else:
            lengths = np.array([_piece_length(p, manifold) for p in pieces])
        total = lengths.sum()
        keep = lengths > 0
        if total <= 0:
            return cls.constant(pieces[0].pos(0.0))
        pieces = [p for p, k in zip(pieces, keep) if k]
        lengths = lengths[keep]
        knots = np.concatenate([[0.0], np.cumsum(lengths) / total])
        knots[-1] = 1.0
        return cls(pieces, knots, True)

    # -- evaluation -------------------------------------------------------
    @property
    def dim(self):
        return self.pieces[0].pos(0.0).shape[-1]

    @property
    def start(self):
        return self.pieces[0].pos(0.0)

    @property
    def end(self):
        return self.pieces[-1].pos(1.0)

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.pieces) - 1)
        return idx

    def piece_position(self, i, t):
        a, b = self.knots[i], self.knots[i + 1]
        return self.pieces[i].pos((np.asarray(t, dtype=float) - a) / (b - a))

    def piece_velocity(self, i, t):
        a, b = self.knots[i], self.knots[i + 1]
        return self.pieces[i].dpos((np.asarray(t, dtype=float) - a) / (b - a)) / (b - a)

    def position(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape + (self.dim,))
        idx = self._locate(t)
        for i in np.unique(idx):
            m = idx == i
            out[m] = self.piece_position(i, t[m])
        return out

    def velocity(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape + (self.dim,))
        idx = self._locate(t)
        for i in np.unique(idx):
            m = idx == i
            out[m] = self.piece_velocity(i, t[m])
        return out

    def samples(self, per_piece=8):
        """Ordered (t, point) samples, including every knot."""
        ts = [self.knots[0]]
        for i in range(len(self.pieces)):
            ts.extend(np.linspace(self.knots[i], self.knots[i + 1], per_piece + 1)[1:])
        ts = np.array(ts)
        return ts, self.position(ts)

    # -- derived curves ---------------------------------------------------
    def reversed(self):
        knots = 1.0 - self.knots[::-1]
        knots[0], knots[-1] = 0.0, 1.0
        return Curve([p.reversed() for p in self.pieces[::-1]], knots, self.proportional)

    def concat(self, other, manifold=None):
        """Composition: traverse ``self`` then ``other``, re-proportioned to arclength."""
        if not np.allclose(self.end, other.start, atol=1e-12, rtol=0):
            from .errors import EndpointMismatch

            raise EndpointMismatch("curves do not share the junction point")
        l1 = self.length(manifold) if manifold is not None else self.chart_length()
        l2 = other.length(manifold) if manifold is not None else other.chart_length()
        if l1 + l2 <= 0:
            return Curve.constant(self.start)
        if l1 == 0:
            return other
        if l2 == 0:
            return self
        s = l1 / (l1 + l2)
        knots = np.concatenate([self.knots[:-1] * s, s + other.knots * (1 - s)])
        knots[-1] = 1.0
        return Curve(self.pieces + other.pieces, knots, self.proportional and other.proportional)

    # -- lengths ----------------------------------------------------------
    def chart_length(self):
        return float(sum(p.chart_length() for p in self.pieces))

    def length(self, manifold):
        return float(sum(_piece_length(p, manifold) for p in self.pieces))

    def speeds(self, manifold, per_piece=16):
        """Riemannian speed ``|gamma'(t)|`` at Gauss nodes of every piece, shape (pieces, nodes)."""
        out = []
        for i in range(len(self.pieces)):
            a, b = self.knots[i], self.knots[i + 1]
            t = a + (b - a) * _GL_X[:per_piece] if per_piece <= len(_GL_X) else np.linspace(a, b, per_piece)
            out.append(manifold.norm(self.piece_position(i, t), self.piece_velocity(i, t)))
        return np.array(out)

    def min_speed(self, manifold):
        return float(self.speeds(manifold).min())

    def is_closed(self, tol=1e-12):
        return bool(np.max(np.abs(self.start - self.end)) <= tol)

    def check_proportional(self, manifold, rtol=0.02):
        """True when the Riemannian speed is constant within ``rtol`` across all pieces."""
        sp = self.speeds(manifold)
        ref = self.length(manifold)
        if ref == 0:
            return bool(np.all(sp == 0))
        return bool(np.all(np.abs(sp - ref) <= rtol * ref))

    def __repr__(self):
        return f"Curve(pieces={len(self.pieces)}, start={self.start.tolist()}, end={self.end.tolist()})"


def _piece_length(piece, manifold):
    X = piece.pos(_GL_X)
    V = piece.dpos(_GL_X)
    return float(np.dot(_GL_W, manifold.norm(X, V)))


# ---------------------------------------------------------------------------
# operations


def metric_at(M: ManifoldSpec, x) -> np.ndarray:
    """Metric tensor at ``x``; validates symmetry and positive definiteness."""
    x = check_point(x, M.dim)
    M.check_domain(x)
    G = np.asarray(M.metric(x), dtype=float)
    if G.shape != (M.dim, M.dim) or not np.all(np.isfinite(G)):
        raise NotPositiveDefinite(f"metric at {x.tolist()} is not a finite {M.dim}x{M.dim} matrix")
    if np.max(np.abs(G - G.T)) > SYMMETRY_TOL:
        raise NotPositiveDefinite(f"metric at {x.tolist()} is not symmetric")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"metric at {x.tolist()} is not positive definite") from exc
    return G


def vector_norm(M: ManifoldSpec, x, v) -> float:
    G = metric_at(M, x)
    v = check_point(v, M.dim, "v")
    return float(np.sqrt(max(v @ G @ v, 0.0)))


def distance(M: ManifoldSpec, x, y) -> float:
    x = check_point(x, M.dim)
    y = check_point(y, M.dim, "y")
    if np.array_equal(x, y):
        M.check_domain(x)
        return 0.0
    return float(M.pairwise(x[None], y[None])[0, 0])


def minimal_geodesic(B: ManifoldSpec, b1, b2) -> Curve:
    if B.geodesic_mode != "analytic" or B.geodesic is None:
        raise NoGeodesicOracle(f"{B.name} has no geodesic oracle")
    b1 = check_point(b1, B.dim, "b1")
    b2 = check_point(b2, B.dim, "b2")
    B.check_domain(np.vstack([b1, b2]))
    if np.array_equal(b1, b2):
        return Curve.constant(b1)
    return B.geodesic(b1, b2)


def horizontal_solve_batch(S: SubmersionSpec, X, W):
    """Unique horizontal lifts ``v = G^-1 J^T (J G^-1 J^T)^-1 w``, batched over rows."""
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    J = S.jacobian(X)
    G = S.total.metric(X)
    s = np.linalg.svd(J, compute_uv=False)[..., -1]
    if np.any(s < RANK_TOL):
        raise RankDeficient(f"Jacobian of {S.name} is rank deficient (sigma_min={np.min(s):.3g})")
    GiJt = np.linalg.solve(G, np.swapaxes(J, -1, -2))
    K = J @ GiJt
    return np.einsum("...ij,...j->...i", GiJt, np.linalg.solve(K, W[..., None])[..., 0])


def horizontal_solve(S: SubmersionSpec, x, w) -> np.ndarray:
    """Unique horizontal vector at ``x`` that ``pi_*`` maps to ``w``."""
    x = check_point(x, S.total.dim)
    w = check_point(w, S.base.dim, "w")
    return horizontal_solve_batch(S, x[None], w[None])[0]


def vertical_part(S: SubmersionSpec, x, v) -> np.ndarray:
    """Component of ``v`` tangent to the fiber through ``x``."""
    x = check_point(x, S.total.dim)
    v = check_point(v, S.total.dim, "v")
    return v - horizontal_solve(S, x, S.jacobian(x) @ v)


def jacobian_check(S: SubmersionSpec, x, h=1e-5) -> float:
    """Largest entrywise gap between ``jac_eval`` and a central-difference Jacobian."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = check_point(x, S.total.dim)
    m = S.total.dim
    stencil = np.concatenate([x + h * np.eye(m), x - h * np.eye(m)])
    S.total.check_domain(stencil, tol=0.0)
    F = S.project(stencil)
    fd = ((F[:m] - F[m:]) / (2 * h)).T
    return float(np.max(np.abs(fd - S.jacobian(x))))
