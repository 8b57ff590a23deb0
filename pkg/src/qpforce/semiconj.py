"""Ordered strip families and the fibrewise monotone semi-conjugacy they define.

For a regular map with rotation number ``rho`` rationally independent of
``omega``, the strips

    A_r = closure of the union over n of T^n(line at height r - n rho)

are ordered in ``r``. Taking the top reflexive graph of each ``A_r`` gives a
family ``phi_r`` and ``H_theta(x) = sup{r : phi_r(theta) <= x}`` satisfies
``H o T = H + rho`` on every fibre.

Images of every line are not computed separately. ``M`` horizontal lines
are iterated from ``S`` base points, and the image of any other line is
interpolated linearly in height between them. Fibre maps are increasing, so
the interpolant keeps the order of the lines exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import MAGNITUDE_LIMIT, LiftedSkewMap
from .strips import GridGraph, StripApprox, dilate, erode

__all__ = [
    "StripFamily",
    "SemiConjugacy",
    "FamilyOrderError",
    "build_strip_family",
    "build_semiconjugacy",
    "semiconjugacy_defect",
    "DefectReport",
    "uniqueness_gap",
    "save_semiconjugacy",
]


class FamilyOrderError(ValueError):
    def __init__(self, r: float, s: float, excess: float):
        self.pair = (r, s)
        self.excess = excess
        super().__init__(f"strips for r={r:.6g} and s={s:.6g} are out of order by {excess:.3g}")


@dataclass(frozen=True)
class StripFamily:
    """Strips ``B_r`` on a common theta grid; rows of ``lower``/``upper`` follow ``r_grid``."""

    r_grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n: int
    C_bound: float | None = None
    containment_violations: tuple = ()
    raw_width: float = 0.0

    @property
    def R(self) -> int:
        return self.r_grid.size

    @property
    def G(self) -> int:
        return self.upper.shape[1]

    @property
    def ordered(self) -> bool:
        return bool(np.all(np.diff(self.upper, axis=0) >= -1e-6) and np.all(np.diff(self.lower, axis=0) >= -1e-6))

    def strip(self, i: int) -> StripApprox:
        return StripApprox(GridGraph(self.G, self.lower[i], "lower"), GridGraph(self.G, self.upper[i], "upper"))

    @property
    def strips(self) -> list[StripApprox]:
        return [self.strip(i) for i in range(self.R)]

    def upper_extended(self) -> tuple[np.ndarray, np.ndarray]:
        """``r`` values and top graphs over one extra period on each side."""
        r = np.concatenate([self.r_grid - 1, self.r_grid, self.r_grid + 1])
        up = np.concatenate([self.upper - 1, self.upper, self.upper + 1])
        return r, up


def _iterate_lines(m, lines, starts, n, forward):
    """Yield ``(step, theta, X)`` with ``X[s, l]`` the image of line ``l`` over start ``s``."""
    th = starts.copy()
    X = np.broadcast_to(lines, (starts.size, lines.size)).copy()
    thm = np.repeat(th, lines.size)
    w = m.omega
    for step in range(1, n + 1):
        if forward:
            flat = m.fibre_lift(thm, X.ravel())
            thm = thm + w
            thm[thm >= 1.0] -= 1.0
        else:
            thm = thm - w
            thm[thm < 0.0] += 1.0
            flat = m.inverse(thm, X.ravel())
        X = np.asarray(flat, dtype=float).reshape(X.shape)
        if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > MAGNITUDE_LIMIT:
            raise OverflowError("line iteration diverged")
        yield step, thm[:: lines.size], X


def build_strip_family(
    m: LiftedSkewMap,
    rho: float,
    R: int = 256,
    n: int = 10**4,
    G: int = 256,
    lines: int = 64,
    starts: int = 32,
    backward: bool = True,
    r_offset: float = 0.0,
    C_bound: float | None = None,
    tol: float = 1e-6,
) -> StripFamily:
    """Approximate ``B_r`` for ``r = (i + r_offset)/R``.

    Each ``A_r`` is bounded per bin from ``starts`` base points, ``n``
    steps forward and, with ``backward``, ``n`` steps back. ``B_r`` is the
    reflexive pair of the top graph: lower = erosion, upper = its dilation.
    Raises :class:`FamilyOrderError` if top graphs decrease in ``r`` by more
    than ``tol``.
    """
    if R < 2 or G < 16 or lines < 2 or starts < 1 or n < 1:
        raise ValueError("need R >= 2, G >= 16, lines >= 2, starts >= 1, n >= 1")
    r_grid = (np.arange(R) + r_offset) / R
    y_lines = np.arange(lines) / lines
    th0 = np.arange(starts) / starts
    hi = np.full((R, G), -np.inf)
    lo = np.full((R, G), np.inf)
    rows = np.arange(R)[:, None] * G

    def absorb(thetas, vals):
        idx = (rows + np.mod(np.rint(thetas * G), G).astype(np.int64)[None, :]).ravel()
        np.maximum.at(hi.ravel(), idx, vals.ravel())
        np.minimum.at(lo.ravel(), idx, vals.ravel())

    absorb(th0, np.repeat(r_grid[:, None], starts, axis=1))
    for forward in (True, False) if backward else (True,):
        sign = 1.0 if forward else -1.0
        for step, th, X in _iterate_lines(m, y_lines, th0, n, forward):
            y = r_grid - sign * step * rho
            fl = np.floor(y)
            pos = (y - fl) * lines
            l0 = np.minimum(pos.astype(np.int64), lines - 1)
            wgt = (pos - l0)[:, None]
            Xext = np.concatenate([X, X[:, :1] + 1.0], axis=1)
            vals = (1.0 - wgt) * Xext[:, l0].T + wgt * Xext[:, l0 + 1].T + fl[:, None]
            absorb(th, vals)
    if not np.all(np.isfinite(hi)):
        raise ValueError("some theta bins received no points; increase n or starts")

    violations = []
    if C_bound is not None:
        off = np.maximum(hi - r_grid[:, None], r_grid[:, None] - lo)
        bad = np.flatnonzero(np.max(off, axis=1) > C_bound)
        violations = [float(r_grid[i]) for i in bad]

    up = np.empty_like(hi)
    low = np.empty_like(hi)
    for i in range(R):
        g = erode(GridGraph(G, hi[i], "upper"))
        low[i] = g.values
        up[i] = dilate(g).values
    drop = np.diff(up, axis=0)
    if np.min(drop) < -tol:
        i = int(np.unravel_index(np.argmin(drop), drop.shape)[0])
        raise FamilyOrderError(float(r_grid[i]), float(r_grid[i + 1]), float(-np.min(drop)))
    return StripFamily(r_grid, low, up, n, C_bound, tuple(violations), float(np.max(hi - lo)))


@dataclass(frozen=True)
class SemiConjugacy:
    """Per-fibre tables of ``H_theta`` on the uniform grid ``x_j = j/X``."""

    theta_grid: int
    x_grid: np.ndarray
    values: np.ndarray = field(repr=False)
    r_resolution: float = 0.0

    def __post_init__(self):
        if self.values.shape != (self.theta_grid, self.x_grid.size):
            raise ValueError("table shape does not match the grids")

    def fibre(self, i: int, x) -> np.ndarray:
        """``H`` on fibre ``i`` at arbitrary lifted heights (degree-one extension)."""
        x = np.asarray(x, dtype=float)
        fl = np.floor(x)
        xs = np.append(self.x_grid, 1.0)
        hs = np.append(self.values[i], self.values[i, 0] + 1.0)
        return np.interp(x - fl, xs, hs) + fl

    def __call__(self, bins, x) -> np.ndarray:
        bins = np.asarray(bins, dtype=np.int64)
        x = np.asarray(x, dtype=float)
        bins, x = np.broadcast_arrays(bins, x)
        fl = np.floor(x)
        t = (x - fl) * self.x_grid.size
        j = np.minimum(t.astype(np.int64), self.x_grid.size - 1)
        w = t - j
        ext = np.concatenate([self.values, self.values[:, :1] + 1.0], axis=1)
        return (1 - w) * ext[bins, j] + w * ext[bins, j + 1] + fl

    @property
    def monotone(self) -> bool:
        ext = np.concatenate([self.values, self.values[:, :1] + 1.0], axis=1)
        return bool(np.all(np.diff(ext, axis=1) >= 0))

    def shifted_fibre(self, i: int, delta: float) -> "SemiConjugacy":
        """A copy with fibre ``i`` moved by ``delta`` (for fault injection)."""
        v = self.values.copy()
        v[i] += delta
        return SemiConjugacy(self.theta_grid, self.x_grid, v, self.r_resolution)


def build_semiconjugacy(family: StripFamily, x_resolution: int = 256) -> SemiConjugacy:
    """``H_theta(x) = sup{r : phi_r(theta) <= x}``, linear between grid values of ``r``."""
    if x_resolution < 2:
        raise ValueError("need x_resolution >= 2")
    if not family.ordered:
        raise ValueError("strip family is not ordered")
    r, up = family.upper_extended()
    xs = np.arange(x_resolution) / x_resolution
    H = np.empty((family.G, x_resolution))
    for i in range(family.G):
        # ties in a flat stretch of phi_r resolve to the largest r, as the sup does
        col = up[:, i]
        H[i] = np.interp(xs, col, r)
        right = np.searchsorted(col, xs, side="right") - 1
        exact = (right >= 0) & (col[np.clip(right, 0, None)] == xs)
        H[i, exact] = r[right[exact]]
    return SemiConjugacy(family.G, xs, H, 1.0 / family.R)


@dataclass(frozen=True)
class DefectReport:
    defect: float
    quantization: float
    r_resolution: float

    def to_dict(self) -> dict:
        return {"defect": self.defect, "quantization": self.quantization, "r_resolution": self.r_resolution}


def semiconjugacy_defect(H: SemiConjugacy, m: LiftedSkewMap, rho: float, report: bool = False):
    """``max |H_{theta+omega}(T(x)) - H_theta(x) - rho|`` over all table points.

    ``theta + omega`` is resolved to the nearest bin. With ``report`` a
    :class:`DefectReport` is returned whose ``quantization`` estimates the
    part of the defect caused by that rounding.
    """
    G = H.theta_grid
    th = np.arange(G) / G
    x = H.x_grid
    TH, XX = np.meshgrid(th, x, indexing="ij")
    y = np.asarray(m.fibre_lift(TH, XX), dtype=float)
    pos = np.mod(th + m.omega, 1.0) * G
    j = np.mod(np.rint(pos), G).astype(np.int64)
    lhs = H(j[:, None], y)
    rhs = H.values + rho
    defect = float(np.max(np.abs(lhs - rhs)))
    if not report:
        return defect
    frac = pos - np.rint(pos)
    nb = np.mod(j + np.where(frac >= 0, 1, -1), G)
    quant = float(np.max(np.abs(frac)[:, None] * np.abs(H(nb[:, None], y) - lhs)))
    return DefectReport(defect, quant, H.r_resolution)


def uniqueness_gap(H1: SemiConjugacy, H2: SemiConjugacy) -> float:
    """Sup norm of ``H1 - H2`` after removing the mean of each."""
    d1 = H1.values - H1.values.mean()
    d2 = H2.values - H2.values.mean()
    return float(np.max(np.abs(d1 - d2)))


def save_semiconjugacy(H: SemiConjugacy, path) -> Path:
    """Long-format CSV ``theta,x_hat,H`` with one row per table point."""
    path = Path(path)
    G = H.theta_grid
    th = np.repeat(np.arange(G) / G, H.x_grid.size)
    xs = np.tile(H.x_grid, G)
    data = np.column_stack([th, xs, H.values.ravel()])
    np.savetxt(path, data, delimiter=",", header="theta,x_hat,H", comments="", fmt="%.17g")
    return path

