"""Quasiperiodically forced circle homeomorphisms.

Maps ``(theta, x) -> (theta + omega, T_theta(x))`` on the torus, handled
through lifts of the fibre maps. Submodules cover rotation numbers and
rational relations, deviations from uniform rotation, invariant graphs and
strips, semi-conjugacies, SL(2,R) cocycles, transitivity scans and the
regular/irregular classification.
"""

from .circle import LiftedCurve, QCurve, curves_intersect, lift_curve, oscillation, winding_number, wrap
from .cocycle import CocycleSpec, herman_cocycle, lyapunov_exponent, projectivize
from .models import GOLDEN, ConfigError, LiftedSkewMap, build_map, iterate, load_config, map_from_config
from .rotation import (
    RationalRelation,
    rational_relation_search,
    rotation_number_fibre_average,
    rotation_number_orbit,
    rotation_number_weighted,
)

__version__ = "0.1.0"

__all__ = [
    "GOLDEN",
    "CocycleSpec",
    "ConfigError",
    "LiftedCurve",
    "LiftedSkewMap",
    "QCurve",
    "RationalRelation",
    "build_map",
    "curves_intersect",
    "herman_cocycle",
    "iterate",
    "lift_curve",
    "load_config",
    "lyapunov_exponent",
    "map_from_config",
    "oscillation",
    "projectivize",
    "rational_relation_search",
    "rotation_number_fibre_average",
    "rotation_number_orbit",
    "rotation_number_weighted",
    "winding_number",
    "wrap",
]
