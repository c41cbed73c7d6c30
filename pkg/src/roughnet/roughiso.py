"""Rough-isometry certificates: fitted (A, C), fullness radii, HLC and RIF.

A certificate is only ever produced together with a full re-audit of the
pairs it was fitted on, so ``violations == 0`` is part of its contract.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_count, check_point, check_points, grid_ceil
from .errors import EmptyImage, NotFull, Unfittable
from .geometry import horizontal_solve_batch, minimal_geodesic
from .lifts import DEFAULT_STEP, oneill_map
from .nets import as_pairwise

A_STEP = 0.01
C_STEP = 0.01
A_MAX = 100.0
HLC_ALPHA_STEP = 0.01
HLC_BETA_STEP = 1e-3
BETA_FLOOR = 1e-3


@dataclass
class RoughIsoFit:
    A: float
    C: float
    fullness_radius: float = 0.0
    pair_count: int = 0
    violations: int = 0

    def bounds(self, d_src):
        d_src = np.asarray(d_src, dtype=float)
        return d_src / self.A - self.C, self.A * d_src + self.C

    def audit(self, pairs):
        """Number of ``(d_src, d_dst)`` pairs outside the two-sided band."""
        P = _as_pairs(pairs)
        lo, hi = self.bounds(P[:, 0])
        return int(np.sum((P[:, 1] < lo) | (P[:, 1] > hi)))

    def to_dict(self):
        return {k: (float(v) if isinstance(v, float) else v) for k, v in asdict(self).items()}


@dataclass
class HlcFit:
    alpha: float
    beta: float
    sample_count: int = 0
    violations: int = 0
    samples: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {"alpha": float(self.alpha), "beta": float(self.beta),
                "sample_count": int(self.sample_count), "violations": int(self.violations)}


def _as_pairs(pairs):
    P = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise ValueError("distances must be finite and nonnegative")
    return P


def _c_needed(s, t, A):
    return float(np.max(np.maximum(t - A * s, s / A - t), initial=0.0))


def _budgeted_fit(P, fullness_radius, a_step, c_step, c_budget):
    # c_needed(A) is nonincreasing in A, so bisect over grid indices
    s, t = P[:, 0], P[:, 1]
    hi = int(round((A_MAX - 1.0) / a_step))
    if _c_needed(s, t, 1.0 + hi * a_step) > c_budget:
        raise Unfittable(f"no A <= {A_MAX:g} keeps C within {c_budget:.4g}")
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if _c_needed(s, t, 1.0 + mid * a_step) <= c_budget:
            hi = mid
        else:
            lo = mid + 1
    A = round(1.0 + lo * a_step, 12)
    fit = RoughIsoFit(A, grid_ceil(_c_needed(s, t, A), c_step), float(fullness_radius), len(P), 0)
    while fit.audit(P):
        fit.C = round(fit.C + c_step, 12)
    fit.violations = fit.audit(P)
    return fit


def fit_rough_constants(pairs, fullness_radius=0.0, a_step=A_STEP, c_step=C_STEP, c_budget=None):
    """Smallest grid constants ``(A, C)`` with ``d_src/A - C <= d_dst <= A d_src + C`` on every pair.

    ``A`` comes first, as the grid ceiling (from 1) of the worst two-sided ratio
    over pairs where both distances are positive; ``C`` then absorbs what the
    ratio cannot (pairs with one zero side, and round-off). This keeps the
    identity, doubling and constant-map answers exact: (1, 0), (2, 0), (1, D).

    With ``c_budget`` the rule is lexicographic instead: the smallest grid
    ``A`` whose required ``C`` stays within the budget, then that ``C``.

    Examples
    --------
    >>> fit = fit_rough_constants([(1.0, 2.0), (3.0, 6.0)])
    >>> fit.A, fit.C
    (2.0, 0.0)
    """
    P = _as_pairs(pairs)
    if len(P) == 0:
        return RoughIsoFit(1.0, 0.0, float(fullness_radius), 0, 0)
    if c_budget is not None:
        return _budgeted_fit(P, fullness_radius, a_step, c_step, float(c_budget))
    s, t = P[:, 0], P[:, 1]
    both = (s > 0) & (t > 0)
    ratio = float(np.max(np.maximum(t[both] / s[both], s[both] / t[both]))) if np.any(both) else 1.0
    A = grid_ceil(ratio, a_step, start=1.0)
    if A > A_MAX:
        raise Unfittable(f"distance ratio {ratio:.4g} needs A > {A_MAX:g}")
    need = float(np.max(np.maximum(t - A * s, s / A - t)))
    C = grid_ceil(max(need, 0.0), c_step)
    # one grid step of slack so tiny offsets that round up stay fittable
    c_max = A_MAX * float(P.max()) + c_step
    fit = RoughIsoFit(A, C, float(fullness_radius), len(P), 0)
    while fit.audit(P):
        fit.C = round(fit.C + c_step, 12)
    if fit.C > c_max and c_max > 0:
        raise Unfittable(f"additive constant {fit.C:.4g} exceeds the grid bound {c_max:.4g}")
    fit.violations = fit.audit(P)
    return fit


def check_image_fullness(image, probes, d=None):
    """Largest distance from a codomain probe to the image."""
    image = check_points(image)
    probes = check_points(probes)
    if len(image) == 0:
        raise EmptyImage("image is empty")
    if len(probes) == 0:
        return 0.0
    return float(as_pairwise(d)(probes, image).min(axis=1).max())


@dataclass
class RoughInverse:
    assignment: np.ndarray
    codomain_displacement: float
    domain_displacement: float


def rough_inverse(domain, image, probes, d=None, eps=1.0, d_src=None):
    """Assign every probe ``q`` a domain point ``p`` with ``d(phi p, q) < eps``.

    ``domain[i]`` maps to ``image[i]``. The codomain round trip
    ``max d(phi(psi q), q)`` and the domain round trip ``max d_src(psi(phi p), p)``
    are both recorded (the latter needs ``d_src``).
    """
    domain = check_points(domain)
    image = check_points(image)
    probes = check_points(probes)
    if len(image) == 0:
        raise EmptyImage("image is empty")
    dist = as_pairwise(d)
    D = dist(probes, image)
    idx = np.argmin(D, axis=1)
    gap = D[np.arange(len(probes)), idx]
    if len(gap) and gap.max() >= eps:
        raise NotFull(f"image is not {eps}-full: a probe sits {gap.max():.4g} away")
    back = np.argmin(dist(image, image), axis=1)
    dom = 0.0
    if d_src is not None and len(domain):
        dom = float(np.max(np.diag(as_pairwise(d_src)(domain[back], domain))))
    return RoughInverse(idx, float(gap.max()) if len(gap) else 0.0, dom)


def compose_constants(f, g):
    """Certificate for ``f o g`` from certificates of ``f`` and ``g``."""
    return RoughIsoFit(
        A=f.A * g.A,
        C=f.A * g.C + f.C,
        fullness_radius=f.fullness_radius + f.A * g.fullness_radius + f.C,
        pair_count=0,
        violations=0,
    )


def _unit_ball_vectors(B, bs, rng):
    """Random tangent vectors with ``|w|_B <= 1`` (direction uniform, radius uniform)."""
    u = rng.normal(size=bs.shape)
    u /= B.norm(bs, u)[:, None]
    return u * rng.uniform(0.0, 1.0, size=len(bs))[:, None]


def estimate_hlc(S, sample_count=500, seed=0):
    """Fit ``(alpha, beta)`` with ``|w|/alpha - beta <= |v| <= alpha |w| + beta`` for lifts ``v`` of ``w``."""
    n = check_count(sample_count, "sample_count")
    rng = np.random.default_rng(seed)
    X = S.sample_total(n, rng)
    bs = S.project(X)
    W = _unit_ball_vectors(S.base, bs, rng)
    V = horizontal_solve_batch(S, X, W)
    nw = S.base.norm(bs, W)
    nv = S.total.norm(X, V)
    both = (nw > 0) & (nv > 0)
    ratio = float(np.max(np.maximum(nv[both] / nw[both], nw[both] / nv[both]))) if np.any(both) else 1.0
    alpha = grid_ceil(ratio, HLC_ALPHA_STEP, start=1.0)
    need = float(np.max(np.maximum(nv - alpha * nw, nw / alpha - nv)))
    beta = max(BETA_FLOOR, grid_ceil(need, HLC_BETA_STEP))
    bad = lambda b: int(np.sum((nv > alpha * nw + b) | (nv < nw / alpha - b)))  # noqa: E731
    while bad(beta):
        beta = round(beta + HLC_BETA_STEP, 12)
    return HlcFit(alpha, beta, n, bad(beta), np.column_stack([nw, nv]))


@dataclass
class RifFit(RoughIsoFit):
    """A RIF certificate plus the audit table behind it."""

    per_fiber: list = field(default_factory=list, repr=False)
    pairs: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {"A": float(self.A), "C": float(self.C), "fullness_radius": float(self.fullness_radius),
                "pair_count": int(self.pair_count), "violations": int(self.violations)}


def rif_pairs(S, b0, base_points, pairs_per_fiber=20, seed=0, step=DEFAULT_STEP):
    """Audit table ``(d_M(x, x'), d_M(phi x, phi x'))`` for fiber pairs over each base point.

    ``phi`` is the O'Neill map along the minimal geodesic from ``b`` to ``b0``.
    Returns the table (rows grouped by base point, in order) and the base points.
    """
    b0 = check_point(b0, S.base.dim, "b0")
    base_points = check_points(base_points, S.base.dim)
    if not np.any(np.all(base_points == b0, axis=1)):
        raise ValueError("base_points must include b0")
    k = check_count(pairs_per_fiber, "pairs_per_fiber")
    rng = np.random.default_rng(seed)
    src_a, src_b, dst_a, dst_b, rows = [], [], [], [], []
    for b in base_points:
        X = S.sample_fiber(b, 2 * k, rng)
        gamma = minimal_geodesic(S.base, b, b0)
        Y = oneill_map(S, gamma, X, step)
        src_a.append(X[:k]); src_b.append(X[k:])
        dst_a.append(Y[:k]); dst_b.append(Y[k:])
        rows.append(b)
    d_src = S.total.pair_distances(np.vstack(src_a), np.vstack(src_b))
    d_dst = S.total.pair_distances(np.vstack(dst_a), np.vstack(dst_b))
    return np.column_stack([d_src, d_dst]), np.array(rows)


def estimate_rif(S, b0, base_points, pairs_per_fiber=20, seed=0, step=DEFAULT_STEP):
    """One global ``(A, C)`` making every fiber's O'Neill map to ``F_{b0}`` a rough isometry."""
    table, bs = rif_pairs(S, b0, base_points, pairs_per_fiber, seed, step)
    base = fit_rough_constants(table)
    k = len(table) // len(bs)
    per = []
    for i, b in enumerate(bs):
        part = table[i * k:(i + 1) * k]
        s, t = part[:, 0], part[:, 1]
        ok = (s > 0) & (t > 0)
        per.append({"base_point": b.tolist(),
                    "max_ratio": float(np.max(np.maximum(t[ok] / s[ok], s[ok] / t[ok]))) if ok.any() else 1.0})
    return RifFit(base.A, base.C, base.fullness_radius, base.pair_count, base.violations, per, table)


@dataclass
class Lemma32Audit:
    pair_count: int
    violations: int
    min_slack: float


def check_lemma32(S, fit, sample_pairs=500, seed=0):
    """Audit ``d_M(x, x') >= d_B(pi x, pi x')/alpha - beta`` on random pairs of ``M``."""
    n = check_count(sample_pairs, "sample_pairs")
    rng = np.random.default_rng(seed)
    X = S.sample_total(n, rng)
    Y = S.sample_total(n, rng)
    dM = S.total.pair_distances(X, Y)
    dB = S.base.pair_distances(S.project(X), S.project(Y))
    slack = dM - (dB / fit.alpha - fit.beta)
    return Lemma32Audit(n, int(np.sum(slack < 0)), float(slack.min()))


class RoughIsometry(BaseEstimator):
    """Estimator wrapper around :func:`fit_rough_constants`.

    ``fit(d_src, d_dst)`` takes matched distance arrays; ``predict(d_src)``
    returns the certified ``(lower, upper)`` band for new source distances and
    ``score`` the fraction of pairs inside it.
    """

    def __init__(self, a_step=A_STEP, c_step=C_STEP):
        self.a_step = a_step
        self.c_step = c_step

    def fit(self, d_src, d_dst):
        pairs = np.column_stack([np.ravel(d_src), np.ravel(d_dst)])
        self.fit_ = fit_rough_constants(pairs, a_step=self.a_step, c_step=self.c_step)
        self.A_, self.C_ = self.fit_.A, self.fit_.C
        return self

    def predict(self, d_src):
        lo, hi = self.fit_.bounds(np.ravel(d_src))
        return np.column_stack([lo, hi])

    def score(self, d_src, d_dst):
        band = self.predict(d_src)
        d_dst = np.ravel(d_dst)
        return float(np.mean((d_dst >= band[:, 0]) & (d_dst <= band[:, 1])))
