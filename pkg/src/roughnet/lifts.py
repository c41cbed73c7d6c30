"""Horizontal lifts, O'Neill maps and holonomy.

Lifts solve ``Gamma'(t) = H(Gamma(t), gamma'(t))`` with the classical
fourth-order Runge-Kutta scheme at a fixed step in the curve parameter. Steps
are aligned with the curve's piece boundaries so the scheme never straddles a
corner. Many start points are integrated at once as one batched system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_point, check_points, check_positive
from .errors import EndpointMismatch, LeftDomain, NotBetaLong
from .geometry import DOMAIN_TOL, Curve, horizontal_solve_batch, _Line

DEFAULT_STEP = 1e-2
FIBER_TOL = 1e-9


@dataclass
class LiftResult:
    """One integrated horizontal lift.

    ``points[i]`` is the lift at parameter ``t[i]``; ``velocities[i]`` is the
    horizontal velocity there (taken from the following piece at corners).
    """

    base_curve: Curve
    start: np.ndarray
    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    length: float
    projection_residual: float
    step_size: float

    @property
    def end(self):
        return self.points[-1]

    def lift_curve(self):
        """The lift as a (non-proportional) polyline through the integration nodes."""
        pieces = [((a, b), dt) for a, b, dt in zip(self.points[:-1], self.points[1:], np.diff(self.t))]
        return Curve.from_pieces(pieces)

    def to_csv(self, path=None):
        m = self.points.shape[1]
        rows = ["t," + ",".join(f"x{k}" for k in range(m))]
        rows += [f"{t!r}," + ",".join(repr(float(v)) for v in p) for t, p in zip(self.t.tolist(), self.points)]
        text = "\n".join(rows) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass
class HolonomyReport:
    loop: Curve
    base_point: np.ndarray
    fiber_points: np.ndarray
    images: np.ndarray
    defects: np.ndarray
    max_defect: float
    max_coordinate_offset: float = 0.0
    offsets: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "base_point": self.base_point.tolist(),
            "sample_count": int(len(self.fiber_points)),
            "max_defect": float(self.max_defect),
            "max_coordinate_offset": float(self.max_coordinate_offset),
        }


def _check_over(S, X, b, tol=FIBER_TOL, what="start points"):
    gap = np.max(np.abs(S.project(X) - b)) if len(X) else 0.0
    if gap > tol:
        raise ValueError(f"{what} are not in the fiber over {np.asarray(b).tolist()} (gap {gap:.3g})")


def _integrate(S, gamma, X0, step, curves=None, owner=None):
    """Batched RK4; returns (t, traj (nodes, k, m), vel (nodes, k, m), lengths (k,)).

    With ``curves`` and ``owner`` row ``r`` follows ``curves[owner[r]]``; all
    curves must share ``gamma``'s knots, and the step count per piece is taken
    from ``gamma``.
    """
    M = S.total
    k = len(X0)
    X = X0.copy()
    ell = np.zeros(k)
    ts, traj, vel = [0.0], [X.copy()], []

    def rhs(i, t, Y):
        tt = np.array([t])
        if curves is None:
            w = np.broadcast_to(gamma.piece_velocity(i, tt)[0], (k, S.base.dim))
        else:
            w = np.stack([c.piece_velocity(i, tt)[0] for c in curves])[owner]
        V = horizontal_solve_batch(S, Y, w)
        return V, M.norm(Y, V)

    for i in range(len(gamma.pieces)):
        a, b = gamma.knots[i], gamma.knots[i + 1]
        n = max(1, int(np.ceil((b - a) / step - 1e-9)))
        h = (b - a) / n
        for j in range(n):
            t = a + j * h
            k1, s1 = rhs(i, t, X)
            if len(vel) < len(ts):
                vel.append(k1)
            k2, s2 = rhs(i, t + h / 2, X + h / 2 * k1)
            k3, s3 = rhs(i, t + h / 2, X + h / 2 * k2)
            k4, s4 = rhs(i, t + h, X + h * k3)
            X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            ell = ell + h / 6 * (s1 + 2 * s2 + 2 * s3 + s4)
            inside = M.in_domain(X, DOMAIN_TOL)
            if not np.all(inside):
                raise LeftDomain(f"horizontal lift left the domain of {M.name} at t={t + h:.4g}, x={X[~inside][0].tolist()}")
            ts.append(t + h if j < n - 1 else b)
            traj.append(X.copy())
    vel.append(rhs(len(gamma.pieces) - 1, 1.0, X)[0])
    return np.array(ts), np.array(traj), np.array(vel), ell


def _prepare(S, gamma, X, step):
    if not isinstance(gamma, Curve):
        raise TypeError("gamma must be a Curve")
    if gamma.dim != S.base.dim:
        raise ValueError("gamma does not live in the base manifold")
    if not gamma.proportional:
        raise ValueError("base curves must be parametrised proportionally to arclength")
    step = check_positive(step, "step")
    X = check_points(X, S.total.dim)
    S.base.check_domain(gamma.samples()[1])
    S.total.check_domain(X)
    _check_over(S, X, gamma.start)
    return X, step


def horizontal_lift(S, gamma, x0, step=DEFAULT_STEP):
    """Horizontal lift of ``gamma`` through ``x0`` (which must lie over ``gamma(0)``)."""
    x0 = check_point(x0, S.total.dim, "x0")
    X, step = _prepare(S, gamma, x0[None], step)
    t, traj, vel, ell = _integrate(S, gamma, X, step)
    pts = traj[:, 0]
    resid = S.base.pair_distances(S.project(pts), gamma.position(t)) if len(t) else np.zeros(1)
    return LiftResult(gamma, x0, t, pts, vel[:, 0], float(ell[0]), float(np.max(resid)), step)


def oneill_map(S, gamma, X, step=DEFAULT_STEP):
    """Endpoints ``phi_gamma(x)`` of the horizontal lifts through each ``x`` in ``X``."""
    X, step = _prepare(S, gamma, X, step)
    if len(X) == 0:
        return X.copy()
    return _integrate(S, gamma, X, step)[1][-1]


def oneill_map_many(S, curves, point_sets, step=DEFAULT_STEP):
    """``[oneill_map(S, c, X) for c, X in zip(curves, point_sets)]`` as few batched solves.

    Curves with the same knot vector share their step grid, so they are
    integrated together. ``None`` curves mean the identity map.
    """
    out = [None] * len(curves)
    groups = {}
    for j, (c, X) in enumerate(zip(curves, point_sets)):
        X = check_points(X, S.total.dim)
        if c is None or len(X) == 0:
            out[j] = X.copy()
            continue
        X, _ = _prepare(S, c, X, step)
        groups.setdefault(tuple(np.round(c.knots, 12)), []).append((j, X))
    for members in groups.values():
        idx = [j for j, _ in members]
        cs = [curves[j] for j in idx]
        owner = np.concatenate([np.full(len(X), r) for r, (_, X) in enumerate(members)])
        X0 = np.vstack([X for _, X in members])
        end = _integrate(S, cs[0], X0, step, cs, owner)[1][-1]
        for r, j in enumerate(idx):
            out[j] = end[owner == r]
    return out


def oneill_lengths(S, gamma, X, step=DEFAULT_STEP):
    """``(endpoints, lift lengths)`` for every start point in ``X``."""
    X, step = _prepare(S, gamma, X, step)
    _, traj, _, ell = _integrate(S, gamma, X, step)
    return traj[-1], ell


def local_discrepancy(M, X, Y):
    """First-order stand-in for ``d_M``: ``|Y - X|`` in the metric at the midpoint."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if len(X) == 0:
        return np.zeros(0)
    return M.segment_lengths(X, Y)


def loop_holonomy(S, loop, sample_count=20, seed=0, step=DEFAULT_STEP, fiber_points=None):
    """Apply the loop's O'Neill map to sampled fiber points and record ``d_M(phi x, x)``."""
    if not loop.is_closed(1e-12):
        raise ValueError("holonomy needs a closed loop")
    b = loop.start
    X = S.sample_fiber(b, sample_count, seed) if fiber_points is None else check_points(fiber_points, S.total.dim)
    Y = oneill_map(S, loop, X, step)
    moved = np.any(Y != X, axis=1)
    defects = np.zeros(len(X))
    if np.any(moved):
        defects[moved] = S.total.pair_distances(Y[moved], X[moved])
    offsets = Y - X
    return HolonomyReport(
        loop=loop,
        base_point=b,
        fiber_points=X,
        images=Y,
        defects=defects,
        max_defect=float(defects.max()) if len(defects) else 0.0,
        max_coordinate_offset=float(np.abs(offsets).max()) if len(defects) else 0.0,
        offsets=offsets,
    )


def check_composition(S, gamma1, gamma2, X, step=DEFAULT_STEP):
    """Max gap between ``phi_{gamma1 gamma2}`` and ``phi_gamma2 o phi_gamma1`` on ``X``."""
    if not np.allclose(gamma1.end, gamma2.start, atol=1e-12, rtol=0):
        raise EndpointMismatch("gamma1 must end where gamma2 starts")
    joined = gamma1.concat(gamma2, S.base)
    direct = oneill_map(S, joined, X, step)
    staged = oneill_map(S, gamma2, oneill_map(S, gamma1, X, step), step)
    return float(np.max(local_discrepancy(S.total, direct, staged), initial=0.0))


def check_inverse(S, gamma, X, step=DEFAULT_STEP):
    """Max round-trip gap of ``phi_{gamma^-1} o phi_gamma`` on ``X``."""
    X = check_points(X, S.total.dim)
    back = oneill_map(S, gamma.reversed(), oneill_map(S, gamma, X, step), step)
    return float(np.max(local_discrepancy(S.total, back, X), initial=0.0))


def perturb_curve(gamma, perturbation):
    """Polyline through ``gamma``'s corners with interior vertices moved by at most ``perturbation``.

    A single segment gets its midpoint inserted first so there is something to
    move. Endpoints stay fixed. The displacement pattern alternates sign per
    vertex and coordinate, so its sup-norm is exactly ``perturbation``.
    """
    if not all(isinstance(p, _Line) for p in gamma.pieces):
        raise ValueError("continuity checks need a polyline base curve")
    V = np.vstack([gamma.pieces[0].a] + [p.b for p in gamma.pieces])
    if len(V) == 2:
        V = np.vstack([V[0], 0.5 * (V[0] + V[1]), V[1]])
    k, m = np.indices((len(V) - 2, V.shape[1]))
    V = V.copy()
    V[1:-1] += perturbation * np.where((k + m) % 2 == 0, 1.0, -1.0)
    return Curve.polyline(V)


def check_continuity(S, gamma, perturbation, X, step=DEFAULT_STEP):
    """Max endpoint displacement of lifts when ``gamma``'s interior is perturbed."""
    if perturbation < 0:
        raise ValueError("perturbation must be >= 0")
    X = check_points(X, S.total.dim)
    if perturbation == 0:
        return 0.0
    moved = perturb_curve(gamma, perturbation)
    a = oneill_map(S, gamma, X, step)
    b = oneill_map(S, moved, X, step)
    return float(np.max(local_discrepancy(S.total, a, b), initial=0.0))


def check_length_bounds(S, gamma, x0, alpha, beta, step=DEFAULT_STEP, tol=0.0):
    """Lift-length bounds for a ``beta``-long curve over the unit parameter interval.

    Returns ``(lower_ok, upper_ok, (lift_length, base_length))`` for
    ``(1/alpha)(l(gamma) - beta) <= l(Gamma) <= alpha (l(gamma) + beta)``,
    each side relaxed by ``tol``.
    """
    alpha = check_positive(alpha, "alpha")
    beta = check_positive(beta, "beta")
    if gamma.min_speed(S.base) < beta:
        raise NotBetaLong(f"base curve speed drops to {gamma.min_speed(S.base):.3g} < beta={beta}")
    lift = horizontal_lift(S, gamma, x0, step)
    lb = gamma.length(S.base)
    span = 1.0
    lower_ok = lift.length >= (lb - beta * span) / alpha - tol
    upper_ok = lift.length <= alpha * (lb + beta * span) + tol
    return bool(lower_ok), bool(upper_ok), (lift.length, lb)
