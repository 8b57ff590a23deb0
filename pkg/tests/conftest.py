import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qpforce import cocycle as cc  # noqa: E402
from qpforce.circle import LiftedCurve, oscillation  # noqa: E402
from qpforce.models import GOLDEN, attracting_graph_model, build_map  # noqa: E402

SQRT3_RHO = math.sqrt(3.0) - 1.0
CONJ_H = "x + 0.1*sin(2*pi*(x + theta))"


def conjugated_rigid(rho=SQRT3_RHO, omega=GOLDEN):
    return build_map("conjugated", omega, {"inner": {"family": "rigid", "params": {"rho": rho}}, "h": CONJ_H})


SMALL = dict(rotation_n=10**5, regularity_n=10**4, strip_grid=64, family_r=64, family_n=2000, family_grid=64,
             lyapunov_n=10**5, transit_n=5000)
# the Herman deviations grow slowly; 0.05 separates them from the regular examples
HERMAN_THRESHOLDS = {"exponent_threshold": 0.05}


def example_suite():
    """One map per behaviour the classifier distinguishes, with per-map threshold overrides."""
    return {
        "rigid-dependent": (build_map("rigid", params={"rho": (1 + GOLDEN) / 2}), {}),
        "rigid-independent": (build_map("rigid", params={"rho": SQRT3_RHO}), {}),
        "skew-rational": (build_map("skew", params={"a": "0.3 + 0.1*sin(2*pi*theta)"}), {}),
        "skew-independent": (build_map("skew", params={"a": f"{SQRT3_RHO} + 0.1*sin(2*pi*theta)"}), {}),
        "attracting": (build_map("attracting-graph"), {}),
        "arnold": (build_map("arnold", params={"c": 0.25, "K": 0.5, "eps": 0.3}), {}),
        "conjugated": (conjugated_rigid(SQRT3_RHO, GOLDEN), {}),
        "herman": (cc.projectivize(cc.herman_cocycle(2.0)), HERMAN_THRESHOLDS),
    }


def random_curve_pair(rng):
    """Curves with ``k(psi) >= v(phi) + 1`` over a common random interval."""
    n = int(rng.integers(64, 512))
    t = np.linspace(0.0, float(rng.uniform(0.5, 3.0)), n)
    modes = rng.normal(size=(4, 2)) * rng.uniform(0.01, 0.5)
    phi_x = sum(a * np.sin(2 * np.pi * (j + 1) * t) + b * np.cos(2 * np.pi * (j + 1) * t)
                for j, (a, b) in enumerate(modes)) + rng.uniform(-3, 3)
    phi = LiftedCurve(t, phi_x)
    v = oscillation(phi)
    k = v + 1.0 + rng.uniform(0, 3)
    bump = rng.normal(size=3) * 0.2
    psi_x = rng.uniform(-3, 3) + k * t / t[-1] + sum(
        b * np.sin(np.pi * (j + 1) * t / t[-1]) for j, b in enumerate(bump))
    return phi, LiftedCurve(t, psi_x)


@pytest.fixture(scope="session")
def rigid_quarter():
    return build_map("rigid", params={"rho": 0.25})


@pytest.fixture(scope="session")
def rigid_dependent():
    return build_map("rigid", params={"rho": (1 + GOLDEN) / 2})


@pytest.fixture(scope="session")
def rigid_independent():
    return build_map("rigid", params={"rho": SQRT3_RHO})


@pytest.fixture(scope="session")
def skew_map():
    return build_map("skew", params={"a": "0.3 + 0.1*sin(2*pi*theta)"})


@pytest.fixture(scope="session")
def arnold_map():
    return build_map("arnold", params={"c": 0.25, "K": 0.5, "eps": 0.3})


@pytest.fixture(scope="session")
def attracting():
    return attracting_graph_model(0.1, 0.5)


@pytest.fixture(scope="session")
def conj_map():
    return conjugated_rigid()


@pytest.fixture(scope="session")
def herman():
    return cc.herman_cocycle(2.0)
