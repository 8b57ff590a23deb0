"""SL(2,R) cocycles over the irrational rotation.

The projective line is identified with the unit circle through
``x = angle / pi``, so the projective action of a cocycle is a degree-one
forced circle map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numba import njit

from .circle import lift_curve, winding_number
from .expression import parse_map_expression
from .models import GOLDEN, ConfigError, LiftedSkewMap, invert_fibre

__all__ = [
    "CocycleSpec",
    "LyapunovEstimate",
    "cocycle_from_config",
    "constant_cocycle",
    "herman_cocycle",
    "projectivize",
    "lyapunov_exponent",
    "lyapunov_seeds",
    "det_drift",
]

ENTRY_NAMES = ("m11", "m12", "m21", "m22")


@dataclass(frozen=True)
class CocycleSpec:
    """``(theta, v) -> (theta + omega, M(theta) v)`` with ``det M = 1``.

    ``matrix`` maps an array of base points to the four entries
    ``(m11, m12, m21, m22)``; ``scalar_matrix`` is the float-only variant.
    ``degree`` is the number of turns the first column makes around the
    projective line as theta runs once around the circle; the system is
    homotopic to the identity only when it is 0.
    """

    omega: float
    matrix: Callable
    label: str = ""
    scalar_matrix: Callable | None = None
    source: Mapping[str, str] = field(default_factory=dict)
    degree: int = field(init=False, default=0)
    det_defect: float = field(init=False, default=0.0)

    def __post_init__(self):
        if not 0.0 < float(self.omega) < 1.0:
            raise ConfigError("omega must lie in (0, 1)")
        th = np.arange(257) / 256.0
        a, b, c, d = (np.asarray(e, dtype=float) * np.ones_like(th) for e in self.matrix(th))
        defect = float(np.max(np.abs(a * d - b * c - 1.0)))
        if defect > 1e-9:
            raise ConfigError(f"cocycle is not in SL(2,R): max |det - 1| = {defect:.3g}")
        col = np.mod(np.arctan2(c, a) / math.pi, 1.0)
        k = winding_number(lift_curve(th, col, float(col[0]), theta_hat0=0.0))
        object.__setattr__(self, "degree", int(round(k)))
        object.__setattr__(self, "det_defect", defect)

    @property
    def homotopic_to_identity(self) -> bool:
        return self.degree == 0

    def entries(self, theta):
        th = np.asarray(theta, dtype=float)
        return tuple(np.asarray(e, dtype=float) * np.ones_like(th) for e in self.matrix(th))


def cocycle_from_config(cfg: Mapping) -> CocycleSpec:
    """Build a cocycle from four expression strings ``m11 .. m22`` in ``theta``."""
    omega = float(cfg.get("omega", GOLDEN))
    params = {k: v for k, v in dict(cfg.get("params", {})).items() if isinstance(v, (int, float))}
    params.setdefault("omega", omega)
    srcs = {}
    for name in ENTRY_NAMES:
        src = cfg.get(name, dict(cfg.get("params", {})).get(name))
        if src is None:
            raise ConfigError(f"cocycle config is missing entry {name!r}")
        srcs[name] = str(src)
    exprs = [parse_map_expression(srcs[n], params) for n in ENTRY_NAMES]
    for n, e in zip(ENTRY_NAMES, exprs):
        if e.depends_on("x"):
            raise ConfigError(f"cocycle entry {n} may only depend on theta")

    def matrix(th):
        return tuple(e(th, 0.0) for e in exprs)

    def scalar_matrix(th):
        return tuple(e.scalar(th, 0.0) for e in exprs)

    return CocycleSpec(omega, matrix, cfg.get("label", "cocycle"), scalar_matrix, srcs)


def constant_cocycle(mat, omega: float = GOLDEN, label: str = "constant") -> CocycleSpec:
    a, b, c, d = (float(v) for v in np.asarray(mat, dtype=float).ravel())
    return CocycleSpec(omega, lambda th: (a, b, c, d), label, lambda th: (a, b, c, d),
                       {"m11": repr(a), "m12": repr(b), "m21": repr(c), "m22": repr(d)})


def herman_cocycle(lam: float = 2.0, omega: float = GOLDEN) -> CocycleSpec:
    """``diag(lam, 1/lam) . Rot(pi theta)``."""
    cfg = {
        "omega": omega,
        "label": f"herman(lambda={lam:g})",
        "params": {"lam": lam},
        "m11": "lam*cos(pi*theta)",
        "m12": "-lam*sin(pi*theta)",
        "m21": "sin(pi*theta)/lam",
        "m22": "cos(pi*theta)/lam",
    }
    return cocycle_from_config(cfg)


# --------------------------------------------------------------------------
# projective action


def _projective_lift(a, b, c, d, x):
    alpha = np.arctan2(c - b, a + d)
    ca, sa = np.cos(alpha), np.sin(alpha)
    # P = Rot(-alpha) M is symmetric positive definite
    p11, p12 = ca * a + sa * c, ca * b + sa * d
    p21, p22 = -sa * a + ca * c, -sa * b + ca * d
    v1, v2 = np.cos(np.pi * x), np.sin(np.pi * x)
    w1, w2 = p11 * v1 + p12 * v2, p21 * v1 + p22 * v2
    delta = np.arctan2(v1 * w2 - v2 * w1, v1 * w1 + v2 * w2)
    return x + (alpha + delta) / np.pi


def _projective_lift_scalar(a, b, c, d, x):
    alpha = math.atan2(c - b, a + d)
    ca, sa = math.cos(alpha), math.sin(alpha)
    p11, p12 = ca * a + sa * c, ca * b + sa * d
    p21, p22 = -sa * a + ca * c, -sa * b + ca * d
    v1, v2 = math.cos(math.pi * x), math.sin(math.pi * x)
    w1, w2 = p11 * v1 + p12 * v2, p21 * v1 + p22 * v2
    delta = math.atan2(v1 * w2 - v2 * w1, v1 * w1 + v2 * w2)
    return x + (alpha + delta) / math.pi


def projectivize(cocycle: CocycleSpec) -> LiftedSkewMap:
    """Forced circle map of directions, ``x = angle/pi``.

    The lift splits ``M = Rot(alpha) P`` (polar decomposition): ``P`` moves
    every direction by less than a quarter turn, which fixes the branch,
    and ``Rot(alpha)`` adds ``alpha/pi`` with ``alpha`` in ``(-pi, pi]``.
    """
    ent = cocycle.entries
    sm = cocycle.scalar_matrix or (lambda th: tuple(float(e) for e in cocycle.entries(th)))

    def lift(th, x):
        a, b, c, d = ent(th)
        return _projective_lift(a, b, c, d, np.asarray(x, dtype=float))

    def lift_scalar(th, x):
        a, b, c, d = sm(th)
        return _projective_lift_scalar(a, b, c, d, x)

    def deriv(th, x):
        a, b, c, d = ent(th)
        x = np.asarray(x, dtype=float)
        v1, v2 = np.cos(np.pi * x), np.sin(np.pi * x)
        w1, w2 = a * v1 + b * v2, c * v1 + d * v2
        return 1.0 / (w1 * w1 + w2 * w2)

    def inverse(th, y):
        # the adjugate acts as M^-1 on directions; fall back to the solver off its branch
        a, b, c, d = ent(th)
        y = np.asarray(y, dtype=float)
        x = np.asarray(_projective_lift(d, -b, -c, a, y), dtype=float)
        off = np.abs(lift(th, x) - y) > 1e-9
        if np.any(off):
            x = np.where(off, invert_fibre(lift, th, y, deriv), x)
        return x if x.ndim else float(x)

    def inverse_scalar(th, y):
        a, b, c, d = sm(th)
        x = _projective_lift_scalar(d, -b, -c, a, y)
        if abs(_projective_lift_scalar(a, b, c, d, x) - y) > 1e-9:
            x = float(invert_fibre(lift, th, y, deriv))
        return x

    return LiftedSkewMap(
        cocycle.omega,
        lift,
        deriv,
        f"projective({cocycle.label})",
        scalar_lift=lift_scalar,
        fibre_inverse=inverse,
        scalar_inverse=inverse_scalar,
        description={"family": "projective-cocycle", "degree": cocycle.degree, **dict(cocycle.source)},
        cocycle=cocycle,
    )


# --------------------------------------------------------------------------
# Lyapunov exponents


@njit(cache=True)
def _renormalized_products(a, b, c, d, v, acc):
    for n in range(a.shape[0]):
        for s in range(v.shape[0]):
            x = a[n] * v[s, 0] + b[n] * v[s, 1]
            y = c[n] * v[s, 0] + d[n] * v[s, 1]
            r = math.sqrt(x * x + y * y)
            acc[s] += math.log(r)
            v[s, 0] = x / r
            v[s, 1] = y / r


def _run_products(cocycle: CocycleSpec, theta0: float, v, start: int, stop: int, acc, block: int = 1 << 16):
    w = cocycle.omega
    for lo in range(start, stop, block):
        hi = min(stop, lo + block)
        th = np.mod(theta0 + np.arange(lo, hi, dtype=float) * w, 1.0)
        a, b, c, d = (np.ascontiguousarray(e, dtype=float) for e in cocycle.entries(th))
        _renormalized_products(a, b, c, d, v, acc)


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    drift: float
    n: int
    values: tuple = ()

    @property
    def seeds_spread(self) -> float:
        return float(max(self.values) - min(self.values)) if self.values else 0.0

    def to_dict(self) -> dict:
        return {"value": self.value, "drift": self.drift, "n": self.n, "seeds_spread": self.seeds_spread}


def _unit_vectors(v0) -> np.ndarray:
    v = np.atleast_2d(np.asarray(v0, dtype=float)).copy()
    if v.shape[1] != 2:
        raise ValueError("initial vectors must be 2-dimensional")
    norms = np.hypot(v[:, 0], v[:, 1])
    if np.any(~np.isfinite(norms)) or np.any(norms == 0):
        raise ValueError("degenerate initial vector")
    return v / norms[:, None]


def lyapunov_exponent(cocycle: CocycleSpec, theta0: float = 0.0, v0=(1.0, 0.0), n: int = 10**5) -> LyapunovEstimate:
    """``(1/n) sum log |M(theta_j) v_j|`` with ``v`` renormalised every step.

    ``drift`` is the change of the running value over the last tenth of the
    run. Several starting vectors can be passed as rows of ``v0``; the
    reported value is their mean.
    """
    if n < 1000:
        raise ValueError("need at least 1000 steps")
    v = _unit_vectors(v0)
    acc = np.zeros(v.shape[0])
    mark = int(0.9 * n)
    _run_products(cocycle, theta0, v, 0, mark, acc)
    early = acc / mark
    _run_products(cocycle, theta0, v, mark, n, acc)
    values = acc / n
    drift = float(np.max(np.abs(values - early)))
    return LyapunovEstimate(float(values.mean()), drift, n, tuple(float(x) for x in values))


def lyapunov_seeds(cocycle: CocycleSpec, n: int, seeds: int = 5, seed: int = 0, theta0: float = 0.0) -> LyapunovEstimate:
    """Top exponent from ``seeds`` random unit vectors drawn with ``numpy.random.default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    ang = rng.uniform(0.0, math.pi, size=seeds)
    return lyapunov_exponent(cocycle, theta0, np.column_stack([np.cos(ang), np.sin(ang)]), n)


def det_drift(cocycle: CocycleSpec, theta0: float = 0.0, n: int = 10**5) -> float:
    """``|det(M(theta_{n-1}) ... M(theta_0)) - 1|`` computed from the factors' determinants."""
    th = np.mod(theta0 + np.arange(n, dtype=float) * cocycle.omega, 1.0)
    a, b, c, d = cocycle.entries(th)
    return float(abs(math.expm1(float(np.sum(np.log(np.abs(a * d - b * c)))))))
