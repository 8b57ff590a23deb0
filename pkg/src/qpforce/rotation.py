"""Fibrewise rotation numbers and rational-dependence search."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .models import LiftedSkewMap, _check_magnitude

__all__ = [
    "RotationEstimate",
    "RationalRelation",
    "AmbiguousRelationError",
    "rotation_number_orbit",
    "rotation_number_fibre_average",
    "rotation_number_weighted",
    "rational_relation_search",
    "omega_looks_rational",
]


@dataclass(frozen=True)
class RotationEstimate:
    value: float
    n_iterates: int
    spread: float
    method: str

    def __post_init__(self):
        if self.spread < 0 or self.n_iterates < 1:
            raise ValueError("invalid rotation estimate")

    def to_dict(self) -> dict:
        return {"value": self.value, "spread": self.spread, "n": self.n_iterates, "method": self.method}


@dataclass(frozen=True)
class RationalRelation:
    """Integers with ``l + k*omega + q*rho = 0`` (up to ``residual``)."""

    l: int
    k: int
    q: int
    residual: float

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("q must be positive")
        if math.gcd(math.gcd(abs(self.l), abs(self.k)), self.q) != 1:
            raise ValueError("relation must be primitive")

    @property
    def cover(self) -> tuple[int, int, int]:
        """``(k', l', q)`` with ``rho = (k'/q) omega + l'/q``, i.e. ``k' = -k``, ``l' = -l``."""
        return -self.k, -self.l, self.q

    def to_dict(self) -> dict:
        return {"l": self.l, "k": self.k, "q": self.q, "residual": self.residual}


class AmbiguousRelationError(ValueError):
    def __init__(self, candidates):
        self.candidates = candidates
        listed = ", ".join(f"(l={l}, k={k}, q={q}, r={r:.2g})" for l, k, q, r in candidates[:8])
        super().__init__(f"tolerance admits inconsistent relations: {listed}")


def _checkpoints(n: int) -> list[int]:
    pts = sorted({max(1, round(j * n / 10)) for j in range(1, 11)})
    return pts


def rotation_number_orbit(m: LiftedSkewMap, theta: float, x_hat: float, n: int) -> RotationEstimate:
    """``(T_theta^n(x) - x) / n`` along one orbit.

    ``spread`` is the range of the partial estimates at the ten decile
    checkpoints of the run; it is a convergence proxy, not an error bound.
    """
    if n < 1:
        raise ValueError("need at least one iterate")
    marks = _checkpoints(n)
    partial = []
    th, x0 = float(theta) % 1.0, float(x_hat)
    x = x0
    w = m.omega
    step = m.step
    done = 0
    for mark in marks:
        for _ in range(mark - done):
            x = step(th, x)
            th += w
            if th >= 1.0:
                th -= 1.0
        done = mark
        partial.append((x - x0) / mark)
    _check_magnitude(x)
    value = partial[-1]
    return RotationEstimate(value, n, float(max(partial) - min(partial)), "orbit")


def rotation_number_fibre_average(m: LiftedSkewMap, n: int, theta_grid: int = 256) -> RotationEstimate:
    """``(1/n) * mean_theta T_theta^n(0)`` over a uniform theta grid."""
    if n < 1 or theta_grid < 16:
        raise ValueError("need n >= 1 and theta_grid >= 16")
    th = np.arange(theta_grid) / theta_grid
    x = np.zeros(theta_grid)
    w = m.omega
    f = m.fibre_lift
    for _ in range(n):
        x = f(th, x)
        th = th + w
        th[th >= 1.0] -= 1.0
    _check_magnitude(x)
    per_theta = x / n
    return RotationEstimate(float(per_theta.mean()), n, float(np.ptp(per_theta)), "fibre-average")


def _bump_average(d: np.ndarray) -> float:
    t = (np.arange(d.size) + 0.5) / d.size
    g = np.exp(-1.0 / (t * (1.0 - t)))
    return float(np.dot(g, d) / g.sum())


def rotation_number_weighted(m: LiftedSkewMap, theta: float, x_hat: float, n: int) -> RotationEstimate:
    """Average of the increments ``x_{j+1} - x_j`` under the bump weight ``exp(-1/(t(1-t)))``.

    On orbits that are smoothly conjugate to a rotation the error decays
    faster than any power of ``n``, against ``1/n`` for the plain average.
    Elsewhere it is no worse than the plain average. ``spread`` compares
    the estimate with the one from the first half of the orbit.
    """
    if n < 16:
        raise ValueError("need at least 16 iterates")
    xs = np.empty(n + 1)
    th, x = float(theta) % 1.0, float(x_hat)
    xs[0] = x
    w, step = m.omega, m.step
    for j in range(1, n + 1):
        x = step(th, x)
        th += w
        if th >= 1.0:
            th -= 1.0
        xs[j] = x
    _check_magnitude(x)
    d = np.diff(xs)
    value = _bump_average(d)
    return RotationEstimate(value, n, abs(value - _bump_average(d[: n // 2])), "weighted")


def omega_looks_rational(omega: float, max_k: int = 64, tol: float = 1e-7):
    """Smallest ``k <= max_k`` with ``k*omega`` within ``tol`` of an integer, or None."""
    ks = np.arange(1, max_k + 1)
    res = np.abs(ks * omega - np.round(ks * omega))
    hits = np.flatnonzero(res < tol)
    return None if hits.size == 0 else int(ks[hits[0]])


def rational_relation_search(
    omega: float, rho: float, max_q: int = 64, max_k: int = 64, tol: float = 1e-7
) -> RationalRelation | None:
    """Exhaustive scan for ``l + k*omega + q*rho = 0`` with ``1 <= q <= max_q``, ``|k| <= max_k``.

    Returns the relation with the smallest ``q`` (then smallest ``|k|``), or
    None. Raises :class:`AmbiguousRelationError` when the tolerance lets
    through relations that are not multiples of that one.
    """
    if max_q < 1 or max_k < 1 or not tol > 0:
        raise ValueError("need max_q, max_k >= 1 and tol > 0")
    k_rat = omega_looks_rational(omega, max_k, tol)
    if k_rat is not None:
        warnings.warn(
            f"omega={omega!r} is within {tol:g} of a rational with denominator {k_rat}; "
            "relations found are not meaningful",
            RuntimeWarning,
            stacklevel=2,
        )

    q = np.arange(1, max_q + 1)[:, None]
    k = np.arange(-max_k, max_k + 1)[None, :]
    s = k * omega + q * rho
    l = -np.round(s)
    res = np.abs(l + s)
    qi, ki = np.nonzero(res < tol)
    if qi.size == 0:
        return None
    cands = sorted(
        (int(l[a, b]), int(k[0, b]), int(q[a, 0]), float(res[a, b])) for a, b in zip(qi, ki)
    )
    cands.sort(key=lambda c: (c[2], abs(c[1]), c[1]))
    l0, k0, q0, r0 = cands[0]
    g = math.gcd(math.gcd(abs(l0), abs(k0)), q0)
    l0, k0, q0 = l0 // g, k0 // g, q0 // g
    inconsistent = [c for c in cands if not (c[2] % q0 == 0 and c[0] * q0 == l0 * c[2] and c[1] * q0 == k0 * c[2])]
    if inconsistent:
        raise AmbiguousRelationError([cands[0]] + inconsistent)
    return RationalRelation(l0, k0, q0, float(abs(l0 + k0 * omega + q0 * rho)))
