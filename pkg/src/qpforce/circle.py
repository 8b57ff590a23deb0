"""Circle and cover arithmetic, sampled lifted curves and their intersections.

Curves are stored as piecewise-linear interpolants of their samples; every
predicate in this module (winding, oscillation, intersection) is evaluated
on that interpolant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LiftAmbiguityError",
    "LiftedCurve",
    "QCurve",
    "Intersection",
    "wrap",
    "circle_distance",
    "lift_curve",
    "winding_number",
    "oscillation",
    "curves_intersect",
    "offset_range",
    "save_curve_csv",
    "load_curve_csv",
]


class LiftAmbiguityError(ValueError):
    """Raised when two consecutive circle samples are too far apart to lift."""

    def __init__(self, index: int, displacement: float):
        self.index = index
        self.displacement = displacement
        super().__init__(
            f"ambiguous lift between samples {index} and {index + 1}: "
            f"circle displacement {displacement:.6g} is too close to 1/2"
        )


def wrap(x):
    """Project a real number (or array) onto [0, 1)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot wrap a non-finite value")
    out = np.mod(arr, 1.0)
    # tiny negatives round up to exactly 1.0
    out = np.where(out >= 1.0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def circle_distance(a, b):
    """Shortest distance on the unit circle between ``a`` and ``b``."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 1.0)
    d = np.minimum(d, 1.0 - d)
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True)
class LiftedCurve:
    """A continuous curve on the cover, sampled at strictly increasing abscissae."""

    theta_hat: np.ndarray
    x_hat: np.ndarray

    def __post_init__(self):
        t = np.array(self.theta_hat, dtype=float)
        x = np.array(self.x_hat, dtype=float)
        if t.ndim != 1 or x.shape != t.shape:
            raise ValueError("theta_hat and x_hat must be 1-d arrays of equal length")
        if t.size < 2:
            raise ValueError("a lifted curve needs at least 2 samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValueError("curve samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("theta_hat samples must be strictly increasing")
        t.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "theta_hat", t)
        object.__setattr__(self, "x_hat", x)

    @classmethod
    def from_function(cls, func, a: float, b: float, n: int) -> "LiftedCurve":
        t = np.linspace(a, b, n)
        return cls(t, np.asarray(func(t), dtype=float) * np.ones_like(t))

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.theta_hat[0]), float(self.theta_hat[-1])

    def __call__(self, theta_hat):
        return np.interp(theta_hat, self.theta_hat, self.x_hat)

    def shifted(self, dx: float) -> "LiftedCurve":
        return LiftedCurve(self.theta_hat, self.x_hat + dx)

    def project(self) -> tuple[np.ndarray, np.ndarray]:
        return wrap(self.theta_hat), wrap(self.x_hat)


def winding_number(curve: LiftedCurve) -> float:
    """Endpoint drift of the lift: ``x(b) - x(a)``."""
    return float(curve.x_hat[-1] - curve.x_hat[0])


def oscillation(curve: LiftedCurve) -> float:
    """Total height ``max x - min x`` of the lift."""
    return float(curve.x_hat.max() - curve.x_hat.min())


def lift_curve(
    theta: Sequence[float],
    x: Sequence[float],
    base_x_hat: float,
    theta_hat0: float | None = None,
    tol: float = 1e-6,
) -> LiftedCurve:
    """Continuous lift of a sampled circle curve through ``base_x_hat``.

    ``theta`` and ``x`` are circle coordinates. Base points are unwrapped
    with positive increments, so a curve may run over several turns of the
    base. Each fibre increment is the signed shortest circle displacement;
    a displacement within ``tol`` of 1/2 makes the lift ambiguous.
    """
    th = np.asarray(theta, dtype=float)
    xs = np.asarray(x, dtype=float)
    if th.shape != xs.shape or th.ndim != 1 or th.size < 2:
        raise ValueError("need at least two (theta, x) samples")
    if circle_distance(base_x_hat, xs[0]) > 1e-9:
        raise ValueError("base_x_hat does not project onto the first sample")

    dth = np.mod(np.diff(th), 1.0)
    if np.any(dth <= 0):
        raise ValueError("repeated base point in curve samples")
    t0 = float(th[0]) if theta_hat0 is None else float(theta_hat0)
    theta_hat = t0 + np.concatenate(([0.0], np.cumsum(dth)))

    d = np.mod(np.diff(xs) + 0.5, 1.0) - 0.5
    bad = np.flatnonzero(np.abs(d) >= 0.5 - tol)
    if bad.size:
        i = int(bad[0])
        raise LiftAmbiguityError(i, float(d[i]))
    approx = base_x_hat + np.concatenate(([0.0], np.cumsum(d)))
    # snap to sample + integer so the projection reproduces the input
    shifts = np.round(approx - xs)
    x_hat = xs + shifts
    x_hat[0] = base_x_hat
    return LiftedCurve(theta_hat, x_hat)


@dataclass(frozen=True)
class QCurve:
    """Lift of a q-curve over one fundamental domain of length ``period_q``."""

    period_q: int
    winding_k: int
    lift: LiftedCurve
    tol: float = field(default=1e-6, repr=False)

    def __post_init__(self):
        q, k = int(self.period_q), int(self.winding_k)
        if q < 1:
            raise ValueError("period_q must be a positive integer")
        a, b = self.lift.domain
        if abs((b - a) - q) > self.tol:
            raise ValueError(f"lift domain has length {b - a}, expected {q}")
        k_obs = winding_number(self.lift)
        if abs(k_obs - k) > self.tol:
            raise ValueError(f"endpoint drift {k_obs} does not match winding {k}")
        if q > 1:
            t = self.lift.theta_hat
            for shift in range(1, q):
                d = self.evaluate(t + shift) - self.lift.x_hat
                dist = np.abs(d - np.round(d))
                if np.any(dist < self.tol):
                    raise ValueError(
                        f"curve meets its translate by {shift} on the cover; not a {q}-curve"
                    )

    def evaluate(self, theta_hat):
        """Evaluate the lift anywhere on the real line using the period relation."""
        a, _ = self.lift.domain
        th = np.asarray(theta_hat, dtype=float)
        m = np.floor((th - a) / self.period_q)
        return self.lift(th - m * self.period_q) + m * self.winding_k

    def fibre_points(self, theta: float) -> np.ndarray:
        """The ``q`` circle points of the curve above the base point ``theta``."""
        a, _ = self.lift.domain
        base = a + np.mod(theta - a, 1.0)
        return wrap(self.evaluate(base + np.arange(self.period_q)))


@dataclass(frozen=True)
class Intersection:
    found: bool
    offset: int | None = None
    bracket: tuple[float, float] | None = None

    def __bool__(self) -> bool:
        return self.found


def offset_range(phi: LiftedCurve, psi: LiftedCurve) -> range:
    """Integer offsets that can possibly produce a crossing of ``psi`` with ``phi + m``."""
    lo = math.floor(psi.x_hat.min() - phi.x_hat.max())
    hi = math.ceil(psi.x_hat.max() - phi.x_hat.min())
    return range(lo, hi + 1)


def curves_intersect(
    phi: LiftedCurve, psi: LiftedCurve, integer_offsets: Iterable[int] | None = None
) -> Intersection:
    """Look for a crossing of ``psi`` with some integer translate ``phi + m``.

    Both curves are compared on the union of their sample abscissae inside
    the common domain, where their difference is exactly piecewise linear,
    so a sign change of the difference is a genuine crossing of the
    interpolants.
    """
    a = max(phi.domain[0], psi.domain[0])
    b = min(phi.domain[1], psi.domain[1])
    if not a < b:
        raise ValueError("curve domains do not overlap in an interval")
    if integer_offsets is None:
        integer_offsets = offset_range(phi, psi)

    grid = np.union1d(phi.theta_hat, psi.theta_hat)
    grid = np.union1d(grid[(grid > a) & (grid < b)], [a, b])
    base = psi(grid) - phi(grid)
    for m in integer_offsets:
        diff = base - m
        zeros = np.flatnonzero(diff == 0.0)
        if zeros.size:
            t = float(grid[zeros[0]])
            return Intersection(True, int(m), (t, t))
        change = np.flatnonzero(diff[:-1] * diff[1:] < 0)
        if change.size:
            i = int(change[0])
            return Intersection(True, int(m), (float(grid[i]), float(grid[i + 1])))
    return Intersection(False)


def save_curve_csv(curve: LiftedCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_hat", "x_hat"])
        for t, x in zip(curve.theta_hat, curve.x_hat):
            writer.writerow([repr(float(t)), repr(float(x))])


def load_curve_csv(path) -> LiftedCurve:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["theta_hat", "x_hat"]:
            raise ValueError("curve CSV must start with the header theta_hat,x_hat")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return LiftedCurve(arr[:, 0], arr[:, 1])
