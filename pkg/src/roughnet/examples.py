"""Built-in example submersions, selectable by registry name.

All three share the flat base ``B = [0, L]^2`` with ``pi(x, y, z) = (x, y)``:

``flat-product``
    ``M = [0, L]^3`` with the Euclidean metric; every hypothesis holds trivially.
``heisenberg``
    ``dx^2 + dy^2 + (dz - x dy)^2``; horizontal lifts solve ``z' = x y'`` so loops
    have holonomy equal to their enclosed (signed) area.
``warped``
    ``g_B + w(b)^2 dz^2`` with ``w(b) = 1 + a sin(b_1)``; O'Neill maps are the
    identity on the fiber coordinate but fibers are rescaled copies of an
    interval, so RIF needs ``A > 1``.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .geometry import ManifoldSpec, SubmersionSpec, euclidean_pairwise, flat_box, flat_metric

DEFAULT_GRAPH = {"samples": 4000, "k": 12, "seed": 0, "refine": True}


def _projection(X):
    return np.asarray(X)[..., :2]


def _proj_jacobian(X):
    X = np.asarray(X)
    J = np.zeros(X.shape[:-1] + (2, 3))
    J[..., 0, 0] = 1.0
    J[..., 1, 1] = 1.0
    return J


def _fiber_sampler(z_lo, z_hi):
    def sampler(b, count, seed):
        rng = np.random.default_rng(seed)
        z = rng.uniform(z_lo, z_hi, size=count)
        return np.column_stack([np.repeat(b[None, :], count, axis=0), z])

    return sampler


def _base(L):
    return flat_box("B", [0.0, 0.0], [L, L])


def flat_product(box_size=5.0, distance_mode="analytic", graph_options=None):
    L = float(box_size)
    if distance_mode == "analytic":
        M = flat_box("M", [0.0] * 3, [L] * 3)
    else:
        M = ManifoldSpec(
            name="M", dim=3, metric_eval=flat_metric(3),
            domain_lo=np.zeros(3), domain_hi=np.full(3, L),
            distance_mode="graph", k_bound=1.0, inj_radius=L * np.sqrt(3),
            analytic_distance=euclidean_pairwise,
            graph_options={**DEFAULT_GRAPH, **(graph_options or {})},
        )
    return SubmersionSpec(
        name="flat-product", total=M, base=_base(L),
        pi_eval=_projection, jac_eval=_proj_jacobian,
        fiber_sampler=_fiber_sampler(0.0, L),
        params={"box_size": L, "distance_mode": distance_mode},
    )


def heisenberg_metric(X):
    X = np.asarray(X, dtype=float)
    x = X[..., 0]
    G = np.zeros(X.shape[:-1] + (3, 3))
    G[..., 0, 0] = 1.0
    G[..., 1, 1] = 1.0 + x * x
    G[..., 1, 2] = G[..., 2, 1] = -x
    G[..., 2, 2] = 1.0
    return G


def heisenberg(box_size=5.0, graph_options=None):
    L = float(box_size)
    M = ManifoldSpec(
        name="M", dim=3, metric_eval=heisenberg_metric,
        domain_lo=np.array([0.0, 0.0, -L]), domain_hi=np.array([L, L, L]),
        distance_mode="graph",
        # declared, not computed: left-invariant metric on a nilpotent group
        k_bound=1.0, inj_radius=1.0,
        graph_options={**DEFAULT_GRAPH, **(graph_options or {})},
    )
    return SubmersionSpec(
        name="heisenberg", total=M, base=_base(L),
        pi_eval=_projection, jac_eval=_proj_jacobian,
        fiber_sampler=_fiber_sampler(-L / 2, L / 2),
        params={"box_size": L},
    )


def warp_function(amplitude):
    def w(b):
        return 1.0 + amplitude * np.sin(np.asarray(b)[..., 0])

    return w


def warped(box_size=5.0, warp_amplitude=0.5, graph_options=None):
    L = float(box_size)
    a = float(warp_amplitude)
    if not 0 <= a < 1:
        raise ConfigError("warp_amplitude must lie in [0, 1) so that w stays positive")
    w = warp_function(a)

    def metric_eval(X):
        X = np.asarray(X, dtype=float)
        G = np.zeros(X.shape[:-1] + (3, 3))
        G[..., 0, 0] = 1.0
        G[..., 1, 1] = 1.0
        G[..., 2, 2] = w(X) ** 2
        return G

    M = ManifoldSpec(
        name="M", dim=3, metric_eval=metric_eval,
        domain_lo=np.zeros(3), domain_hi=np.full(3, L),
        distance_mode="graph", k_bound=1.0, inj_radius=1.0,
        graph_options={**DEFAULT_GRAPH, **(graph_options or {})},
    )
    return SubmersionSpec(
        name="warped", total=M, base=_base(L),
        pi_eval=_projection, jac_eval=_proj_jacobian,
        fiber_sampler=_fiber_sampler(0.0, L),
        params={"box_size": L, "warp_amplitude": a, "warp": w},
    )


REGISTRY = {
    "flat-product": flat_product,
    "heisenberg": heisenberg,
    "warped": warped,
}


def get_example(name, **params):
    """Build a registered example submersion; unknown names raise :class:`ConfigError`."""
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown example {name!r}; choose from {sorted(REGISTRY)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None
