"""The product-net construction and its constant bookkeeping.

Pipeline (:func:`verify_main_theorem`):

1. hypothesis gates: loop holonomy at ``b0``, the HLC fit, the RIF fit;
2. admissible radii ``(eps0, epsB)`` and the eight radius inequalities;
3. ``P0`` (``eps0``-net in ``F_b0``), ``P_B`` (``epsB``-net in ``B`` seeded
   with ``b0``) and the pulled-back fiber nets
   ``P_b = phi_b^{-1}(P0)``, whose union is ``P``;
4. the bijection ``phi: P -> P0 x P_B`` and the two-sided audit of
   ``delta_x(phi p, phi q)`` against ``delta_P(p, q)`` with the predicted
   constants ``(a, c)``.

Every number lands in one :class:`ConstantLedger`, tagged with its origin.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import shortest_path

from ._parallel import parallel_map
from ._validation import check_point
from .errors import (
    CollisionDetected,
    Disconnected,
    FullnessViolated,
    HypothesisFailed,
    InvalidConstants,
    SeparationViolated,
)
from .geometry import Curve, minimal_geodesic
from .lifts import DEFAULT_STEP, loop_holonomy, oneill_map, oneill_map_many
from .nets import (
    Net,
    build_adjacency,
    build_max_separated,
    check_fullness,
    fit_net_constants,
    hop_matrix,
    product_net,
)
from .roughiso import check_lemma32, estimate_hlc, estimate_rif, fit_rough_constants

log = logging.getLogger(__name__)

T_SPAN = 1.0


# ---------------------------------------------------------------------------
# constants


FORMULAS = {
    "A": "max(A_fit, rif_min_A)",
    "C": "max(C_fit, rif_min_C)",
    "eps0": "C*(1+A^2)*(1+margin)",
    "epsB": "((eps0-C)/A+beta)*alpha*(1+margin)",
    "eps_hat": "(eps0-C)/A",
    "eps_tilde": "(eps0+C)*A",
    "A_net": "2*A*max(eps_hat*a_tilde0, a_tilde*eps0)",
    "C_net": "max(a_tilde*A*C+c_tilde, (c_tilde0/a_tilde0+C)/(2*eps_hat*A*a_tilde0))",
    "a": "max(a0*A*(2*alpha*epsB+alpha*beta*t_span+2*eps_hat)+a0*C+c0+1, a_hat*max(2*A*eps0, 2*alpha*epsB))",
    "c": "(c_hat/a_hat+alpha*beta*t_span+A*C)/max(2*A*eps0, 2*alpha*epsB)",
    "fullness_bound": "(eps0+C)*A+alpha*epsB+beta",
    "cross_fiber_bound": "epsB/alpha-beta",
    "t_span": "1 (unit-speed parameter span)",
    "margin": "config input",
}

FITTED = {"A_fit", "C_fit", "alpha", "beta", "a_tilde0", "c_tilde0", "a_tilde", "c_tilde",
          "a0", "c0", "a_hat", "c_hat", "a_emp", "c_emp"}


@dataclass
class ConstantLedger:
    """Every named constant of the construction, in one record.

    ``a0, c0`` and ``a_tilde0, c_tilde0`` are the same fit (of ``P0``) under
    the two names the argument uses; ``a_tilde, c_tilde`` is the uniform
    (worst-case) fit over all pulled-back fiber nets; ``a_hat, c_hat`` is the
    fit of ``P``.
    """

    A: float = np.nan
    C: float = np.nan
    alpha: float = np.nan
    beta: float = np.nan
    eps0: float = np.nan
    epsB: float = np.nan
    A_fit: float = np.nan
    C_fit: float = np.nan
    margin: float = np.nan
    a_tilde0: float = np.nan
    c_tilde0: float = np.nan
    a_tilde: float = np.nan
    c_tilde: float = np.nan
    a_hat: float = np.nan
    c_hat: float = np.nan
    A_net: float = np.nan
    C_net: float = np.nan
    a: float = np.nan
    c: float = np.nan
    t_span: float = T_SPAN

    @property
    def eps_hat(self):
        return (self.eps0 - self.C) / self.A

    @property
    def eps_tilde(self):
        return (self.eps0 + self.C) * self.A

    @property
    def a0(self):
        return self.a_tilde0

    @property
    def c0(self):
        return self.c_tilde0

    @property
    def fullness_bound(self):
        return (self.eps0 + self.C) * self.A + self.alpha * self.epsB + self.beta

    @property
    def cross_fiber_bound(self):
        return self.epsB / self.alpha - self.beta

    def to_dict(self):
        names = [f.name for f in fields(self)] + ["eps_hat", "eps_tilde", "a0", "c0",
                                                   "fullness_bound", "cross_fiber_bound"]
        out = {}
        for name in names:
            entry = {"value": float(getattr(self, name))}
            if name in FORMULAS:
                entry["formula"] = FORMULAS[name]
            if name in FITTED:
                entry["fitted"] = True
            out[name] = entry
        return out


def admissible_epsilons(A, C, alpha, beta, margin=0.2):
    """Radii strictly inside the admissible region, ``margin`` above each bound.

    Examples
    --------
    >>> admissible_epsilons(2, 1, 1, 0.5, 0.2)
    (6.0, 3.6)
    """
    if not A > 1:
        raise InvalidConstants(f"A must exceed 1, got {A}")
    if not C > 0:
        raise InvalidConstants(f"C must be positive, got {C}")
    if not alpha >= 1:
        raise InvalidConstants(f"alpha must be at least 1, got {alpha}")
    if not beta > 0:
        raise InvalidConstants(f"beta must be positive, got {beta}")
    if not margin > 0:
        raise InvalidConstants(f"margin must be positive, got {margin}")
    eps0 = C * (1 + A * A) * (1 + margin)
    epsB = ((eps0 - C) / A + beta) * alpha * (1 + margin)
    if not (eps0 > C * (1 + A * A) and epsB > ((eps0 - C) / A + beta) * alpha):
        raise InvalidConstants("margin too small to separate the radii from their bounds in floating point")
    return round(eps0, 12), round(epsB, 12)


# the eight consequences of an admissible radius pair, as (name, lhs, rhs) with lhs > rhs required
def _lemma_terms(A, C, alpha, beta, eps0, epsB):
    h = (eps0 - C) / A
    return [
        ("eps_hat_positive", h, 0.0),
        ("eps_hat_below_eps0", eps0, h),
        ("inner_gap_positive", (eps0 - C) / A ** 2 - C, 0.0),
        ("eps_hat_above_inner_gap", h, (eps0 - C) / A ** 2 - C),
        ("base_separation_positive", epsB / alpha - beta, 0.0),
        ("eps_hat_below_eps_tilde", (eps0 + C) * A, h),
        ("double_eps_hat_below_fullness", (2 * eps0 + C) * A, 2 * h),
        ("double_epsB_above_path_hop", 2 * epsB, 2 * (h + beta) * alpha),
    ]


LEMMA_NAMES = [t[0] for t in _lemma_terms(2, 1, 1, 1, 6, 4)]


@dataclass
class InequalityResult:
    name: str
    passed: bool
    lhs: float
    rhs: float


def lemma51_verify(ledger=None, *, A=None, C=None, alpha=None, beta=None, eps0=None, epsB=None):
    """Evaluate the eight strict radius inequalities; one result per inequality."""
    if ledger is not None:
        A, C, alpha, beta, eps0, epsB = ledger.A, ledger.C, ledger.alpha, ledger.beta, ledger.eps0, ledger.epsB
    return [InequalityResult(n, bool(lhs > rhs), float(lhs), float(rhs))
            for n, lhs, rhs in _lemma_terms(A, C, alpha, beta, eps0, epsB)]


def prop52_constants(ledger, fit_b, fit_0):
    """``(A_net, C_net)`` from the fiber-net fits ``fit_b`` (of ``P_b``) and ``fit_0`` (of ``P0``).

    Examples
    --------
    >>> from roughnet.nets import NetFitConstants
    >>> L = ConstantLedger(A=2, C=1, eps0=6)
    >>> prop52_constants(L, NetFitConstants(1, 0, 2.5), NetFitConstants(1, 0, 6))
    (24.0, 2.0)
    """
    A, C, e0, eh = ledger.A, ledger.C, ledger.eps0, ledger.eps_hat
    a, c, a0, c0 = fit_b.a_tilde, fit_b.c_tilde, fit_0.a_tilde, fit_0.c_tilde
    A_net = 2 * A * max(eh * a0, a * e0)
    C_net = max(a * A * C + c, (c0 / a0 + C) / (2 * eh * A * a0)) if a0 > 0 else a * A * C + c
    return float(A_net), float(C_net)


def final_constants(ledger):
    """Predicted ``(a, c)`` for the product-net comparison."""
    L = ledger
    span = max(2 * L.A * L.eps0, 2 * L.alpha * L.epsB)
    a = max(L.a0 * L.A * (2 * L.alpha * L.epsB + L.alpha * L.beta * L.t_span + 2 * L.eps_hat) + L.a0 * L.C + L.c0 + 1,
            L.a_hat * span)
    c_hat_over = L.c_hat / L.a_hat if L.a_hat > 0 else 0.0
    c = (c_hat_over + L.alpha * L.beta * L.t_span + L.A * L.C) / span
    return float(a), float(c)


# ---------------------------------------------------------------------------
# nets


@dataclass
class PullbackReport:
    base_point: np.ndarray
    separation: float
    fullness: float
    separated: bool
    full: bool
    fit: Optional[object] = None
    audit_pairs: int = 0
    audit_violations: int = 0
    net: Optional[Net] = field(default=None, repr=False)


def pullback_points(S, b, P0_points, b0, step=DEFAULT_STEP):
    """``phi_b^{-1}(P0)``: lift ``P0`` from ``F_b0`` along the minimal geodesic ``b0 -> b``."""
    b = check_point(b, S.base.dim, "b")
    if np.array_equal(b, b0):
        return np.array(P0_points, dtype=float)
    return oneill_map(S, minimal_geodesic(S.base, b0, b), P0_points, step)


def pullback_net(S, b, P0, ledger, b0, probes=200, seed=0, step=DEFAULT_STEP, points=None):
    """Pulled-back fiber net over ``b`` with its separation and fullness checks.

    Separation ``>= eps_hat`` is checked exactly on all pairs; fullness
    ``< eps_tilde`` against ``probes`` random fiber points. ``points`` skips
    the lift when the pulled-back points are already known.
    """
    pts = pullback_points(S, b, P0.points, b0, step) if points is None else points
    net = build_adjacency(Net(ledger.eps_hat, pts, space="F_b"), S.total)
    sep = net.min_separation()
    Q = S.sample_fiber(np.asarray(b, dtype=float), probes, seed)
    full, gap = check_fullness(net, Q, ledger.eps_tilde, S.total)
    rep = PullbackReport(np.asarray(b, dtype=float), float(sep), float(gap), bool(sep >= ledger.eps_hat), full)
    rep.net = net
    return net, rep


@dataclass
class TheoremNet:
    """``P`` as a net in ``M`` together with its product structure.

    ``owner_base[i]`` is the ``P_B`` index of the fiber holding ``P[i]`` and
    ``origin[i]`` the ``P0`` point it was pulled back from.
    """

    P: Net
    P0: Net
    PB: Net
    owner_base: np.ndarray
    origin: np.ndarray
    b0_index: int
    pullbacks: list = field(default_factory=list, repr=False)
    phi: Optional[np.ndarray] = None


def build_phi(S, tnet, b0, step=DEFAULT_STEP, tol_factor=0.25):
    """Compute ``phi p = (phi_{pi p} p, pi p)`` and check it is a bijection onto ``P0 x P_B``.

    Each O'Neill image is snapped to the nearest ``P0`` point; a snap farther
    than ``tol_factor * eps0`` or two points sharing a product index raise
    :class:`CollisionDetected`. Returns the fiber index per point of ``P``.
    """
    P0, PB, P = tnet.P0, tnet.PB, tnet.P
    tol = tol_factor * P0.epsilon
    fiber_idx = np.empty(len(P), dtype=int)

    rows_of = [np.flatnonzero(tnet.owner_base == bi) for bi in range(len(PB))]
    curves = [None if np.array_equal(b, b0) else minimal_geodesic(S.base, b, b0) for b in PB.points]
    images = oneill_map_many(S, curves, [P.points[r] for r in rows_of], step)
    for rows, Y in zip(rows_of, images):
        D = S.total.pairwise(Y, P0.points)
        nearest = np.argmin(D, axis=1)
        gap = D[np.arange(len(rows)), nearest]
        if len(gap) and gap.max() > tol:
            raise CollisionDetected(f"O'Neill image lands {gap.max():.3g} from P0 (tolerance {tol:.3g})")
        fiber_idx[rows] = nearest
    # well defined: over b0 the map is (p, b0)
    over_b0 = np.flatnonzero(tnet.owner_base == tnet.b0_index)
    if not np.array_equal(fiber_idx[over_b0], tnet.origin[over_b0]):
        raise CollisionDetected("phi is not the identity on the fiber over b0")
    flat = tnet.owner_base * len(P0) + fiber_idx
    # injective
    if len(np.unique(flat)) != len(flat):
        raise CollisionDetected("two points of P map to the same product point")
    # onto
    if len(flat) != len(P0) * len(PB):
        raise CollisionDetected(f"|P| = {len(flat)} but |P0 x P_B| = {len(P0) * len(PB)}")
    tnet.phi = fiber_idx
    return fiber_idx


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class TheoremConfig:
    margin: float = 0.2
    step: float = DEFAULT_STEP
    seed: int = 0
    holonomy_samples: int = 20
    holonomy_loop_size: float = 1.0
    holonomy_tol_factor: float = 1e-3
    hlc_samples: int = 500
    rif_grid: int = 3
    rif_pairs_per_fiber: int = 20
    rif_min_A: float = 1.01
    rif_min_C: float = 0.2
    fiber_samples: int = 2000
    base_samples: int = 4000
    fiber_probes: int = 200
    probes: int = 2000
    path_audit_pairs: int = 200
    lemma32_pairs: int = 0


@dataclass
class TheoremReport:
    example: str
    seed: int
    ledger: ConstantLedger
    gates: dict
    net_sizes: dict = field(default_factory=dict)
    separation: dict = field(default_factory=dict)
    fullness: dict = field(default_factory=dict)
    predicted: dict = field(default_factory=dict)
    fitted: dict = field(default_factory=dict)
    audit: dict = field(default_factory=dict)
    lemma: list = field(default_factory=list)
    prop52: dict = field(default_factory=dict)
    invariants: dict = field(default_factory=dict)
    passed: bool = False
    tnet: Optional[TheoremNet] = field(default=None, repr=False)
    audit_pairs: Optional[np.ndarray] = field(default=None, repr=False)
    holonomy: Optional[object] = field(default=None, repr=False)
    artifacts: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        return {
            "example": self.example,
            "seed": int(self.seed),
            "ledger": self.ledger.to_dict(),
            "gates": self.gates,
            "net_sizes": self.net_sizes,
            "separation": self.separation,
            "fullness": self.fullness,
            "predicted": self.predicted,
            "fitted": self.fitted,
            "audit": self.audit,
            "lemma": [r.__dict__ for r in self.lemma],
            "prop52": self.prop52,
            "invariants": self.invariants,
            "pass": bool(self.passed),
        }


def holonomy_loop(S, b0, size=1.0):
    """Counter-clockwise square of side ``size`` at ``b0``, turned to stay in the base box."""
    b0 = check_point(b0, S.base.dim, "b0")
    if S.base.dim != 2:
        raise ValueError("holonomy loops are built for two-dimensional bases")
    sx = 1.0 if b0[0] + size <= S.base.domain_hi[0] else -1.0
    sy = 1.0 if b0[1] + size <= S.base.domain_hi[1] else -1.0
    ex, ey = np.array([sx * size, 0.0]), np.array([0.0, sy * size])
    corners = [b0, b0 + ex, b0 + ex + ey, b0 + ey, b0]
    if sx * sy < 0:
        corners = corners[::-1]
    return Curve.polyline(corners)


def rif_base_points(S, b0, grid):
    axes = [np.linspace(lo, hi, grid) for lo, hi in zip(S.base.domain_lo, S.base.domain_hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, S.base.dim)
    keep = ~np.all(pts == b0, axis=1)
    return np.vstack([b0, pts[keep]])


def _gate(report, which, ok, message):
    if not ok:
        raise HypothesisFailed(which, message, report)


def verify_main_theorem(S, b0=None, config=None):
    """Run every stage and return a :class:`TheoremReport`.

    Raises :class:`HypothesisFailed` (with the partial report attached) when a
    gate fails; audit violations are reported, not raised.
    """
    cfg = config or TheoremConfig()
    b0 = S.base.domain_lo.copy() if b0 is None else check_point(b0, S.base.dim, "b0")
    S.base.check_domain(b0)
    L = ConstantLedger(margin=cfg.margin)
    report = TheoremReport(S.name, cfg.seed, L, gates={})
    rng = np.random.default_rng(cfg.seed)
    seeds = rng.integers(0, 2**63 - 1, size=12)

    # -- gate: trivial holonomy (checked first; nontrivial holonomy can push RIF lifts out of the chart)
    eps0_floor = cfg.rif_min_C * (1 + cfg.rif_min_A ** 2) * (1 + cfg.margin)
    loop = holonomy_loop(S, b0, cfg.holonomy_loop_size)
    hol = loop_holonomy(S, loop, cfg.holonomy_samples, int(seeds[0]), cfg.step)
    report.holonomy = hol
    tol = cfg.holonomy_tol_factor * eps0_floor
    report.gates["holonomy"] = {**hol.to_dict(), "tolerance": tol, "passed": hol.max_defect <= tol}
    log.info("holonomy max_defect=%.3g (tolerance %.3g)", hol.max_defect, tol)
    _gate(report, "trivial-holonomy", hol.max_defect <= tol,
          f"max_defect {hol.max_defect:.4g} exceeds {tol:.3g}")

    # -- gate: HLC
    hlc = estimate_hlc(S, cfg.hlc_samples, int(seeds[1]))
    L.alpha, L.beta = hlc.alpha, hlc.beta
    report.artifacts["hlc"] = hlc
    report.gates["hlc"] = {**hlc.to_dict(), "passed": hlc.violations == 0}
    if cfg.lemma32_pairs:
        l32 = check_lemma32(S, hlc, cfg.lemma32_pairs, int(seeds[2]))
        report.gates["hlc"]["lemma32_violations"] = l32.violations
    _gate(report, "hlc", hlc.violations == 0, f"{hlc.violations} HLC violations")

    # -- gate: RIF
    rif = estimate_rif(S, b0, rif_base_points(S, b0, cfg.rif_grid), cfg.rif_pairs_per_fiber,
                       int(seeds[3]), cfg.step)
    L.A_fit, L.C_fit = rif.A, rif.C
    report.artifacts["rif"] = rif
    L.A, L.C = max(rif.A, cfg.rif_min_A), max(rif.C, cfg.rif_min_C)
    used = fit_rough_constants(rif.pairs)
    used.A, used.C = L.A, L.C
    rif_viol = used.audit(rif.pairs)
    report.gates["rif"] = {**rif.to_dict(), "A_used": L.A, "C_used": L.C,
                           "violations_used": rif_viol, "passed": rif_viol == 0}
    _gate(report, "rif", rif_viol == 0, f"{rif_viol} RIF violations")

    # -- radii
    try:
        L.eps0, L.epsB = admissible_epsilons(L.A, L.C, L.alpha, L.beta, cfg.margin)
    except InvalidConstants as exc:
        raise HypothesisFailed("admissibility", str(exc), report) from None
    report.lemma = lemma51_verify(L)
    _gate(report, "admissibility", all(r.passed for r in report.lemma), "radius inequalities fail")
    hol_ok = hol.max_defect <= cfg.holonomy_tol_factor * L.eps0
    report.gates["holonomy"]["tolerance_at_eps0"] = cfg.holonomy_tol_factor * L.eps0
    _gate(report, "trivial-holonomy", hol_ok, "defect exceeds tolerance at the chosen eps0")

    # -- nets
    tnet = build_theorem_net(S, b0, L, cfg, seeds, report)
    report.tnet = tnet

    # -- phi and the audit
    phi = build_phi(S, tnet, b0, cfg.step)
    _final_audit(S, tnet, phi, L, cfg, seeds, report)
    return report


def build_theorem_net(S, b0, L, cfg, seeds=None, report=None):
    """``P = union over b in P_B of phi_b^{-1}(P0)``, with separation/fullness checks."""
    if seeds is None:
        seeds = np.random.default_rng(cfg.seed).integers(0, 2**63 - 1, size=12)
    if report is None:
        report = TheoremReport(S.name, cfg.seed, L, gates={})
    M = S.total
    P0 = build_adjacency(build_max_separated(S.sample_fiber(b0, cfg.fiber_samples, int(seeds[4])), L.eps0, M,
                                             space="F_b0"), M)
    PB = build_adjacency(build_max_separated(S.base.sample(cfg.base_samples, int(seeds[5])), L.epsB, S.base,
                                             seeds=b0[None], space="B"), S.base)
    b0_index = 0
    for net, name in ((P0, "P0"), (PB, "P_B")):
        if not net.is_connected():
            raise Disconnected(f"{name} net graph is disconnected")

    curves = [None if np.array_equal(b, b0) else minimal_geodesic(S.base, b0, b) for b in PB.points]
    lifted = oneill_map_many(S, curves, [P0.points] * len(PB), cfg.step)

    def pull(bi):
        return pullback_net(S, PB.points[bi], P0, L, b0, cfg.fiber_probes, int(seeds[6]) + bi, cfg.step,
                            points=lifted[bi])

    pulled = parallel_map(pull, range(len(PB)))
    fits, bad_sep, worst_gap = [], [], 0.0
    for bi, (net, rep) in enumerate(pulled):
        if not rep.separated:
            bad_sep.append(bi)
        worst_gap = max(worst_gap, rep.fullness)
    fit_0 = fit_net_constants(P0)
    L.a_tilde0, L.c_tilde0 = fit_0.a_tilde, fit_0.c_tilde
    disconnected_fibers = 0
    for net, rep in pulled:
        if net.is_connected():
            rep.fit = fit_net_constants(net)
            fits.append(rep.fit)
        else:
            disconnected_fibers += 1
    L.a_tilde = max((f.a_tilde for f in fits), default=0.0)
    L.c_tilde = max((f.c_tilde for f in fits), default=0.0)
    proxy = type(fit_0)(L.a_tilde, L.c_tilde, L.eps_hat)
    L.A_net, L.C_net = prop52_constants(L, proxy, fit_0)

    # uniform two-sided audit delta_b vs delta_0 on every connected pulled-back net
    H0 = hop_matrix(P0).astype(float)
    pairs = viol = 0
    for net, rep in pulled:
        if rep.fit is None or len(net) < 2:
            continue
        H = hop_matrix(net).astype(float)
        iu = np.triu_indices(len(net), 1)
        d, d0 = H[iu], H0[iu]
        v = int(np.sum((d < d0 / L.A_net - L.C_net) | (d > L.A_net * d0 + L.C_net)))
        rep.audit_pairs, rep.audit_violations = len(d), v
        pairs += len(d)
        viol += v
    report.prop52 = {
        "A_net": L.A_net, "C_net": L.C_net, "audit_pairs": pairs, "audit_violations": viol,
        "fiber_nets": len(pulled), "disconnected_fiber_nets": disconnected_fibers,
        "min_separation": float(min(r.separation for _, r in pulled)),
        "eps_hat": L.eps_hat, "max_fullness_gap": worst_gap, "eps_tilde": L.eps_tilde,
        "separated": not bad_sep, "full": bool(all(r.full for _, r in pulled)),
    }
    if bad_sep:
        bi = bad_sep[0]
        raise SeparationViolated(f"pulled-back net over P_B[{bi}] is not eps_hat-separated",
                                 pair=(bi,), distance=pulled[bi][1].separation)

    # union
    P_pts = np.vstack([net.points for net, _ in pulled])
    owner = np.repeat(np.arange(len(PB)), len(P0))
    origin = np.tile(np.arange(len(P0)), len(PB))
    P = build_adjacency(Net(L.eps_hat, P_pts, space="M"), M)
    D = P.distances
    iu = np.triu_indices(len(P), 1)
    sep = float(D[iu].min()) if len(P) > 1 else np.inf
    cross = owner[iu[0]] != owner[iu[1]]
    cross_min = float(D[iu][cross].min()) if np.any(cross) else np.inf
    cross_viol = int(np.sum(D[iu][cross] < L.cross_fiber_bound))
    report.separation = {
        "P": sep, "required": L.eps_hat, "passed": bool(sep >= L.eps_hat),
        "cross_fiber_min": cross_min, "cross_fiber_bound": L.cross_fiber_bound,
        "cross_fiber_violations": cross_viol,
        "P0": P0.min_separation(), "P_B": PB.min_separation(),
        "product": product_net(P0, PB).min_separation(),
    }
    if sep < L.eps_hat:
        k = int(np.argmin(D[iu]))
        raise SeparationViolated(f"P is not eps_hat-separated ({sep:.6g} < {L.eps_hat:.6g})",
                                 pair=(int(iu[0][k]), int(iu[1][k])), distance=sep)
    probes = S.sample_total(cfg.probes, int(seeds[7]))
    _, gap = check_fullness(P, probes, L.fullness_bound, M)
    report.fullness = {"P": gap, "bound": L.fullness_bound, "passed": bool(gap <= L.fullness_bound),
                       "probes": int(cfg.probes)}
    if gap > L.fullness_bound:
        raise FullnessViolated(f"a probe sits {gap:.4g} from P (bound {L.fullness_bound:.4g})", gap=gap)
    report.net_sizes = {"P0": len(P0), "P_B": len(PB), "P": len(P), "product": len(P0) * len(PB)}
    return TheoremNet(P, P0, PB, owner, origin, b0_index, pullbacks=[r for _, r in pulled])


def _final_audit(S, tnet, phi, L, cfg, seeds, report):
    P, P0, PB = tnet.P, tnet.P0, tnet.PB
    H = hop_matrix(P).astype(float)
    fit_hat = fit_net_constants(P)
    L.a_hat, L.c_hat = fit_hat.a_tilde, fit_hat.c_tilde
    L.a, L.c = final_constants(L)
    report.predicted = {"a": L.a, "c": L.c}

    pn = product_net(P0, PB)
    Dx = pn.delta_matrix(phi, tnet.owner_base).astype(float)
    iu = np.triu_indices(len(P), 1)
    dP, dX = H[iu], Dx[iu]
    lower_bad = dX < dP / L.a - L.c
    upper_bad = dX > L.a * dP + L.c
    violations = int(np.sum(lower_bad | upper_bad))
    report.audit_pairs = np.column_stack([dP, dX])
    report.audit = {"pairs": int(len(dP)), "violations": violations,
                    "lower_violations": int(lower_bad.sum()), "upper_violations": int(upper_bad.sum())}

    emp = fit_rough_constants(np.column_stack([dP, dX]), c_budget=L.c)
    ratio = fit_rough_constants(np.column_stack([dP, dX]))
    report.fitted = {"a": emp.A, "c": emp.C, "ratio_fit": {"a": ratio.A, "c": ratio.C},
                     "dominated": bool(emp.A <= L.a and emp.C <= L.c)}

    # invariants: base hops never exceed P hops; minimal paths hop between nearby fibers
    HB = hop_matrix(PB).astype(float)
    dB = HB[tnet.owner_base[iu[0]], tnet.owner_base[iu[1]]]
    report.invariants = {"base_hops_dominated": bool(np.all(dB <= dP)),
                         "hop_lower_bound_violations": combinatorial_lower_bound_violations(
                             [P, P0, PB] + [r.net for r in tnet.pullbacks]),
                         **_path_hop_audit(S, tnet, L, cfg, seeds)}
    report.passed = bool(
        all(g.get("passed", False) for g in report.gates.values())
        and violations == 0
        and report.separation["passed"] and report.fullness["passed"]
    )
    return report


def combinatorial_lower_bound_violations(nets):
    """Pairs across ``nets`` with ``delta(p, q) < d(p, q) / (2 eps)``; uses each net's stored distances.

    Pairs in different components have ``delta = inf`` and never count.
    """
    bad = 0
    for net in nets:
        if net is None or len(net) < 2:
            continue
        H = net.hops
        iu = np.triu_indices(len(net), 1)
        bad += int(np.sum(H[iu] < net.distances[iu] / (2 * net.epsilon)))
    return bad


def _path_hop_audit(S, tnet, L, cfg, seeds):
    """Consecutive points of minimal discrete paths in ``P`` over distinct fibers sit
    ``epsB <= d_B <= 2 epsB`` apart; hops inside one fiber are counted separately."""
    P = tnet.P
    n = len(P)
    if n < 2 or cfg.path_audit_pairs <= 0:
        return {"path_pairs": 0, "hops_checked": 0, "hop_violations": 0, "shared_fiber_hops": 0}
    rng = np.random.default_rng(int(seeds[8]))
    src = rng.integers(0, n, size=cfg.path_audit_pairs)
    dst = rng.integers(0, n, size=cfg.path_audit_pairs)
    uniq = np.unique(src)
    _, pred = shortest_path(P.graph(), unweighted=True, directed=False, indices=uniq, return_predecessors=True)
    row = {s: k for k, s in enumerate(uniq)}
    PB = tnet.PB.points
    checked = bad = shared = 0
    for s, t in zip(src, dst):
        if pred[row[s], t] < 0 and s != t:
            continue  # different components of P
        path = [t]
        while path[-1] != s:
            path.append(pred[row[s], path[-1]])
        for u, v in zip(path[:-1], path[1:]):
            bu, bv = tnet.owner_base[u], tnet.owner_base[v]
            if bu == bv:
                shared += 1
                continue
            dB = float(np.linalg.norm(PB[bu] - PB[bv])) if S.base.distance_mode == "analytic" and \
                S.base.analytic_pair_distance is not None else float(S.base.pairwise(PB[[bu]], PB[[bv]])[0, 0])
            checked += 1
            bad += not (L.epsB <= dB <= 2 * L.epsB)
    return {"path_pairs": int(cfg.path_audit_pairs), "hops_checked": checked,
            "hop_violations": bad, "shared_fiber_hops": shared}
