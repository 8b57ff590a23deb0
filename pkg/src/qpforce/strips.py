"""Grid graphs, strips, reflexive closure, pullback graphs and q-cover strips.

A graph is stored by its values at the bin centres ``theta_i = span*i/G``.
``span`` is 1 on the torus and ``q`` on the q-fold cover.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circle import LiftedCurve, QCurve
from .models import MAGNITUDE_LIMIT, LiftedSkewMap
from .rotation import RationalRelation

__all__ = [
    "GridGraph",
    "StripApprox",
    "StripOrder",
    "PullbackResult",
    "StripSearchResult",
    "bounding_graphs",
    "reflexive_closure",
    "erode",
    "dilate",
    "strip_order",
    "pinched_measure",
    "graph_transform",
    "pullback_attractor",
    "invariance_residual",
    "attractor_strip",
    "strip_search",
    "save_strip",
    "load_strip",
]

KINDS = ("upper", "lower")


@dataclass(frozen=True)
class GridGraph:
    theta_grid: int
    values: np.ndarray
    kind: str = "upper"
    span: int = 1

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if self.theta_grid < 16:
            raise ValueError("grid graphs need G >= 16")
        if v.size != self.theta_grid:
            raise ValueError(f"expected {self.theta_grid} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("graph values must be finite")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.span < 1:
            raise ValueError("span must be a positive integer")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def theta(self) -> np.ndarray:
        return self.span * np.arange(self.theta_grid) / self.theta_grid

    def with_values(self, values, kind: str | None = None) -> "GridGraph":
        return GridGraph(self.theta_grid, values, kind or self.kind, self.span)

    def bin_of(self, theta) -> np.ndarray:
        """Nearest bin index for base points given on ``[0, span)`` (wrapped)."""
        g = self.theta_grid
        return np.mod(np.rint(np.asarray(theta, dtype=float) * g / self.span), g).astype(np.int64)

    def modulus(self) -> float:
        """Largest jump between neighbouring bins, wraparound excluded on covers."""
        return float(np.max(np.abs(np.diff(self.values)))) if self.span > 1 else float(
            np.max(np.abs(np.diff(np.append(self.values, self.values[0]))))
        )


@dataclass(frozen=True)
class StripApprox:
    """The region between two grid graphs, possibly on the q-fold cover.

    On the cover the graphs live over ``[0, q)`` and continue by
    ``phi(theta + q) = phi(theta) + winding_k``.
    """

    lower: GridGraph
    upper: GridGraph
    cover_q: int = 1
    winding_k: int = 0

    def __post_init__(self):
        lo, up = self.lower, self.upper
        if lo.theta_grid != up.theta_grid or lo.span != up.span:
            raise ValueError("lower and upper graphs must share a grid")
        if lo.span != self.cover_q:
            raise ValueError("graph span must equal the cover degree")
        if np.any(lo.values > up.values):
            raise ValueError("lower graph exceeds upper graph")

    @property
    def grid(self) -> int:
        return self.lower.theta_grid

    @property
    def theta(self) -> np.ndarray:
        return self.lower.theta

    @property
    def width(self) -> float:
        return float(np.max(self.upper.values - self.lower.values))

    def evaluate(self, theta_hat):
        """``(lower, upper)`` at arbitrary lifted base points, nearest bin."""
        th = np.asarray(theta_hat, dtype=float)
        turns = np.floor(th / self.cover_q)
        i = self.lower.bin_of(th)
        # a point rounding up into bin 0 belongs to the next turn
        turns = turns + ((i == 0) & (th - turns * self.cover_q > self.cover_q / 2))
        shift = turns * self.winding_k
        return self.lower.values[i] + shift, self.upper.values[i] + shift

    def to_qcurve(self, tol: float = 1e-9) -> QCurve:
        """The strip as a q-curve; only valid when it has width 0."""
        if self.width > tol:
            raise ValueError(f"strip has width {self.width:.3g}, not a curve")
        th = np.append(self.theta, float(self.cover_q))
        x = np.append(self.lower.values, self.lower.values[0] + self.winding_k)
        return QCurve(self.cover_q, self.winding_k, LiftedCurve(th, x))


@dataclass(frozen=True)
class StripOrder:
    """Result of :func:`strip_order`; compares equal to its relation string."""

    relation: str
    overlap_bins: tuple = ()

    def __eq__(self, other):
        if isinstance(other, str):
            return self.relation == other
        return isinstance(other, StripOrder) and (self.relation, self.overlap_bins) == (
            other.relation, other.overlap_bins)

    def __hash__(self):
        return hash(self.relation)

    def __str__(self):
        return self.relation


# --------------------------------------------------------------------------
# envelopes


def bounding_graphs(points, G: int, span: int = 1, cover_k: int = 0) -> StripApprox:
    """Per-bin max and min of lifted points ``(theta_hat, x_hat)``.

    Points are assigned to the nearest bin. On a cover (``span > 1``) base
    points are reduced mod ``span`` with the matching shift by ``cover_k``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    th, x = pts[:, 0], pts[:, 1]
    turns = np.floor(th / span)
    th = th - turns * span
    x = x - turns * cover_k
    idx = np.rint(th * G / span).astype(np.int64)
    wrap = idx >= G
    idx[wrap] -= G
    x = x - wrap * cover_k
    upper = np.full(G, -np.inf)
    lower = np.full(G, np.inf)
    np.maximum.at(upper, idx, x)
    np.minimum.at(lower, idx, x)
    empty = np.flatnonzero(~np.isfinite(upper))
    if empty.size:
        shown = ", ".join(str(int(i)) for i in empty[:10])
        raise ValueError(f"{empty.size} empty theta bins (first: {shown})")
    if np.any(upper - lower >= 1.0):
        bad = int(np.flatnonzero(upper - lower >= 1.0)[0])
        raise ValueError(f"points in bin {bad} span a full fibre; reduce them to one lift branch first")
    return StripApprox(GridGraph(G, lower, "lower", span), GridGraph(G, upper, "upper", span), span, cover_k)


def _neighbours(v: np.ndarray, k: int):
    left = np.roll(v, 1)
    right = np.roll(v, -1)
    # across the seam the continuation is shifted by the winding k
    left[0] -= k
    right[-1] += k
    return left, right


def erode(graph: GridGraph, k: int = 0) -> GridGraph:
    """Lower envelope of the one-bin closure: ``min`` over a bin and its neighbours."""
    left, right = _neighbours(graph.values, k)
    return graph.with_values(np.minimum(graph.values, np.minimum(left, right)), "lower")


def dilate(graph: GridGraph, k: int = 0) -> GridGraph:
    """Upper envelope of the one-bin closure: ``max`` over a bin and its neighbours."""
    left, right = _neighbours(graph.values, k)
    return graph.with_values(np.maximum(graph.values, np.maximum(left, right)), "upper")


def reflexive_closure(graph: GridGraph, k: int = 0, max_sweeps: int = 64) -> GridGraph:
    """Grid analogue of passing from an upper graph to its reflexive lower graph.

    For an upper graph this erodes, then alternates dilation and erosion
    until the lower graph stops changing (one sweep suffices in exact
    arithmetic). A lower graph is treated symmetrically. The output has
    the opposite kind. ``k`` is the winding used across the seam of a cover.
    """
    down = graph.kind == "upper"
    first, back = (erode, dilate) if down else (dilate, erode)
    cur = first(graph, k)
    for _ in range(max_sweeps):
        nxt = first(back(cur, k), k)
        if np.array_equal(nxt.values, cur.values):
            return cur
        cur = nxt
    return cur


def strip_order(a: StripApprox, b: StripApprox, tol: float = 1e-9) -> StripOrder:
    """``precedes`` / ``succeeds`` / ``equal`` / ``overlap`` for two strips on one grid."""
    if a.grid != b.grid or a.cover_q != b.cover_q:
        raise ValueError("strips live on different grids")
    if np.all(a.upper.values < b.lower.values):
        return StripOrder("precedes")
    if np.all(b.upper.values < a.lower.values):
        return StripOrder("succeeds")
    if np.allclose(a.lower.values, b.lower.values, rtol=0, atol=tol) and np.allclose(
        a.upper.values, b.upper.values, rtol=0, atol=tol
    ):
        return StripOrder("equal")
    bins = (a.upper.values >= b.lower.values) & (b.upper.values >= a.lower.values)
    return StripOrder("overlap", tuple(int(i) for i in np.flatnonzero(bins)))


def pinched_measure(strip: StripApprox, gap_tol: float) -> float:
    """Fraction of bins where the strip is thinner than ``gap_tol``."""
    return float(np.mean(strip.upper.values - strip.lower.values < gap_tol))


# --------------------------------------------------------------------------
# graph transform


def graph_transform(m: LiftedSkewMap, graph: GridGraph, direction: str = "forward") -> GridGraph:
    """One step of ``phi -> T(phi)`` on the torus grid with nearest-bin base shifts."""
    if graph.span != 1:
        raise ValueError("graph transform works on the torus grid")
    th = graph.theta
    g = graph.theta_grid
    if direction == "forward":
        src = graph.bin_of(th - m.omega)
        new = m.fibre_lift(th[src], graph.values[src])
    elif direction == "backward":
        src = graph.bin_of(th + m.omega)
        new = m.inverse(th, graph.values[src])
    else:
        raise ValueError("direction must be 'forward' or 'backward'")
    new = np.asarray(new, dtype=float) * np.ones(g)
    if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > MAGNITUDE_LIMIT:
        raise OverflowError("graph transform diverged")
    return graph.with_values(new)


@dataclass(frozen=True)
class PullbackResult:
    strip: StripApprox
    converged: bool
    last_change: float
    graph: GridGraph = field(repr=False)

    def to_dict(self) -> dict:
        return {"G": self.strip.grid, "converged": self.converged, "last_change": self.last_change,
                "width": self.strip.width}


def pullback_attractor(
    m: LiftedSkewMap, init: GridGraph, iterations: int, direction: str = "forward", tol: float = 1e-6
) -> PullbackResult:
    """Iterate the graph transform and bound the last quarter of the iterates.

    ``converged`` is set when the final two iterates differ by less than
    ``tol`` in sup norm.
    """
    if iterations < 1:
        raise ValueError("need at least one iteration")
    keep = math.ceil(iterations / 4)
    g = init
    hi = np.full(init.theta_grid, -np.inf)
    lo = np.full(init.theta_grid, np.inf)
    change = math.inf
    for i in range(iterations):
        nxt = graph_transform(m, g, direction)
        change = float(np.max(np.abs(nxt.values - g.values)))
        g = nxt
        if i >= iterations - keep:
            np.maximum(hi, g.values, out=hi)
            np.minimum(lo, g.values, out=lo)
    strip = StripApprox(GridGraph(init.theta_grid, lo, "lower"), GridGraph(init.theta_grid, hi, "upper"))
    return PullbackResult(strip, change < tol, change, g)


def attractor_strip(m: LiftedSkewMap, n: int, G: int = 1024, settle: int = 2000, gap: float = 0.02) -> StripApprox:
    """Forward image after ``n`` steps of the strip that avoids the repeller.

    Over each base point ``theta - n omega`` the repelling graph is
    approximated by ``settle`` inverse steps from a horizontal line; the
    strip ``[psi + gap, psi + 1 - gap]`` is then pushed forward ``n`` times
    and sampled exactly on the grid. It shrinks onto the attractor, and
    :func:`pinched_measure` of the result grows with ``n``.
    """
    if n < 1 or settle < 1 or not 0.0 < gap < 0.5:
        raise ValueError("need n, settle >= 1 and 0 < gap < 1/2")
    w = m.omega
    th0 = np.mod(np.arange(G) / G - n * w, 1.0)
    th = np.mod(th0 + settle * w, 1.0)
    psi = np.zeros(G)
    for _ in range(settle):
        th = np.mod(th - w, 1.0)
        psi = m.inverse(th, psi)
    lo, hi, th = psi + gap, psi + 1.0 - gap, th0
    for _ in range(n):
        lo = m.fibre_lift(th, lo)
        hi = m.fibre_lift(th, hi)
        th = np.mod(th + w, 1.0)
    if not np.all(np.isfinite(hi)) or np.max(np.abs(hi)) > MAGNITUDE_LIMIT:
        raise OverflowError("strip image diverged")
    return StripApprox(GridGraph(G, lo, "lower"), GridGraph(G, hi, "upper"))


def invariance_residual(m: LiftedSkewMap, graph: GridGraph) -> tuple[float, float]:
    """``max |T_theta(phi(theta)) - phi(theta + omega)|`` and the grid modulus of ``phi``."""
    th = graph.theta
    img = m.fibre_lift(th, graph.values)
    tgt = graph.values[graph.bin_of(th + m.omega)]
    return float(np.max(np.abs(img - tgt))), graph.modulus()


# --------------------------------------------------------------------------
# strips on the q-cover


@dataclass(frozen=True)
class StripSearchResult:
    strip: StripApprox
    half_width: float
    contained: bool
    max_excursion: float
    C_bound: float
    relation: RationalRelation
    n: int

    def to_dict(self) -> dict:
        return {
            "G": self.strip.grid,
            "q": self.strip.cover_q,
            "k": self.strip.winding_k,
            "width": self.strip.width,
            "half_width": self.half_width,
            "contained": self.contained,
            "max_excursion": self.max_excursion,
            "C_bound": self.C_bound,
            "relation": self.relation.to_dict(),
            "n": self.n,
        }


def _cover_step(m: LiftedSkewMap, th, u, q: int, kp: int, lp: int, forward: bool):
    """``T^q`` (or its inverse) in coordinates ``u = x - (k'/q) theta_hat`` on ``[0, q)``."""
    x = u + kp * th / q
    if forward:
        for j in range(q):
            x = m.fibre_lift(np.mod(th + j * m.omega, 1.0), x)
        th2 = th + q * m.omega
        x = x - lp
    else:
        x = x + lp
        th2 = th - q * m.omega
        for j in range(q, 0, -1):
            x = m.inverse(np.mod(th2 + (j - 1) * m.omega, 1.0), x)
    u2 = x - kp * th2 / q
    return np.mod(th2, q), u2


def strip_search(
    m: LiftedSkewMap,
    relation: RationalRelation | None,
    C_bound: float,
    n: int,
    G: int,
    max_residual: float = 1e-6,
) -> StripSearchResult:
    """Closure of the orbit of the line ``x = (k'/q) theta_hat`` on the q-cover.

    With ``rho = (k' omega + l')/q`` the line is carried by ``T^q - l'``; it
    is iterated ``n`` times forward and ``n`` times backward and the
    relative offsets ``x - (k'/q) theta_hat`` are bounded per bin.
    ``contained`` records whether every offset stayed within ``C_bound``.
    """
    if relation is None:
        raise ValueError("strip search needs a rational relation; none was supplied")
    if relation.residual > max_residual:
        raise ValueError(f"relation residual {relation.residual:.3g} is too large; the strip would drift")
    if G < 16:
        raise ValueError("need G >= 16")
    kp, lp, q = relation.cover
    th0 = q * np.arange(G) / G
    hi = np.zeros(G)
    lo = np.zeros(G)
    excursion = 0.0
    for forward in (True, False):
        th, u = th0.copy(), np.zeros(G)
        for _ in range(n):
            th, u = _cover_step(m, th, u, q, kp, lp, forward)
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > MAGNITUDE_LIMIT:
                raise OverflowError("cover iteration diverged")
            idx = np.rint(th * G / q).astype(np.int64)
            # u is invariant under the deck shift, so bin G is bin 0
            idx[idx >= G] -= G
            np.maximum.at(hi, idx, u)
            np.minimum.at(lo, idx, u)
            excursion = max(excursion, float(np.max(np.abs(u))))
    line = kp * th0 / q
    strip = StripApprox(GridGraph(G, line + lo, "lower", q), GridGraph(G, line + hi, "upper", q), q, kp)
    return StripSearchResult(
        strip, float(np.max(hi - lo)) / 2, excursion <= C_bound, excursion, float(C_bound), relation, n
    )


# --------------------------------------------------------------------------
# persistence


def save_strip(strip: StripApprox, path, converged: bool | None = None, extra: dict | None = None) -> Path:
    """Write ``theta_hat,lower,upper`` CSV plus a JSON sidecar next to it."""
    path = Path(path)
    data = np.column_stack([strip.theta, strip.lower.values, strip.upper.values])
    np.savetxt(path, data, delimiter=",", header="theta_hat,lower,upper", comments="", fmt="%.17g")
    meta = {"G": strip.grid, "q": strip.cover_q, "k": strip.winding_k, "width": strip.width,
            "converged": converged}
    meta.update(extra or {})
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def load_strip(path) -> StripApprox:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    G, q, k = int(meta["G"]), int(meta["q"]), int(meta["k"])
    return StripApprox(GridGraph(G, data[:, 1], "lower", q), GridGraph(G, data[:, 2], "upper", q), q, k)
