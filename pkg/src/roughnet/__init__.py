"""Numerical certificates for rough isometries of Riemannian submersions.

The central entry point is :func:`verify_main_theorem`, which builds a net
``P`` of the total space, maps it onto the product net ``P0 x P_B`` and audits
the rough-isometry constants it predicts.
"""

from .errors import *  # noqa: F401,F403
from .examples import REGISTRY, get_example
from .geometry import Curve, ManifoldSpec, SubmersionSpec, flat_box, horizontal_solve, minimal_geodesic
from .lifts import check_composition, check_inverse, horizontal_lift, loop_holonomy, oneill_map
from .nets import EpsilonNet, Net, ProductNet, build_adjacency, build_max_separated, product_net
from .roughiso import RoughIsometry, estimate_hlc, estimate_rif, fit_rough_constants
from .theorem import (
    ConstantLedger,
    TheoremConfig,
    TheoremReport,
    admissible_epsilons,
    lemma51_verify,
    verify_main_theorem,
)

__version__ = "0.1.0"

__all__ = [
    "REGISTRY", "get_example", "Curve", "ManifoldSpec", "SubmersionSpec", "flat_box",
    "horizontal_solve", "minimal_geodesic", "check_composition", "check_inverse",
    "horizontal_lift", "loop_holonomy", "oneill_map", "EpsilonNet", "Net", "ProductNet",
    "build_adjacency", "build_max_separated", "product_net", "RoughIsometry", "estimate_hlc",
    "estimate_rif", "fit_rough_constants", "ConstantLedger", "TheoremConfig", "TheoremReport",
    "admissible_epsilons", "lemma51_verify", "verify_main_theorem",
]
