"""Deviations from uniform rotation and the regular/irregular diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models import GOLDEN, LiftedSkewMap, _check_magnitude

__all__ = [
    "DeviationProfile",
    "RegularityVerdict",
    "CoboundarySolution",
    "deviation_profile",
    "deviation_profiles",
    "regularity_diagnostic",
    "orbit_seeds",
    "solve_coboundary",
]


@dataclass(frozen=True)
class DeviationProfile:
    """Summary of ``D_n = T_theta^n(x) - x - n*rho`` for ``n = 0..n_max``."""

    rho_used: float
    start: tuple[float, float]
    n_max: int
    sup_dev: float
    inf_dev: float
    growth_exponent: float
    stabilized: bool
    growing: bool
    bounded_above: bool
    bounded_below: bool
    trace: tuple = field(default=(), repr=False)

    @property
    def max_abs(self) -> float:
        return max(abs(self.sup_dev), abs(self.inf_dev))

    def summary(self) -> dict:
        return {
            "start": list(self.start),
            "n": self.n_max,
            "sup_dev": self.sup_dev,
            "inf_dev": self.inf_dev,
            "growth_exponent": self.growth_exponent,
            "stabilized": self.stabilized,
            "growing": self.growing,
            "bounded_above": self.bounded_above,
            "bounded_below": self.bounded_below,
        }


def _marks(n: int, count: int = 32) -> np.ndarray:
    # second half of the run on a log scale: sqrt(n) .. n
    half = np.geomspace(max(math.sqrt(n), 1.0), n, count)
    return np.unique(np.concatenate([np.round(half), [round(0.9 * n), n]]).astype(int))


# deviations below this are rounding noise, not growth
NOISE_FLOOR = 1e-6


def _growth_exponent(ns: np.ndarray, sups: np.ndarray) -> float:
    slope = np.polyfit(np.log(ns), np.log(np.maximum(sups, NOISE_FLOOR)), 1)[0]
    return float(max(slope, 0.0))


def _growing(ns: np.ndarray, sups: np.ndarray, pieces: int = 4) -> bool:
    """Running sup strictly increased on each of ``pieces`` log-equal stretches."""
    edges = np.geomspace(ns[0], ns[-1], pieces + 1)
    idx = np.searchsorted(ns, edges, side="right") - 1
    return bool(np.all(np.diff(sups[idx]) > 0) and sups[-1] > NOISE_FLOOR)


def _grew(before, after, rel: float = 0.01):
    """True where a running extremum grew by more than ``rel`` over the last stretch."""
    before = np.abs(before)
    after = np.abs(after)
    return (after - before) > rel * after + NOISE_FLOOR


def _summarize(rho, starts, n, sup, inf, absmax_at_marks, hi_at_90, lo_at_90, marks, traces):
    out = []
    i90 = int(np.flatnonzero(marks == int(round(0.9 * n)))[0])
    for j, start in enumerate(starts):
        sups = absmax_at_marks[:, j]
        stab = not _grew(sups[i90], sups[-1])
        above = not _grew(hi_at_90[j], sup[j])
        below = not _grew(lo_at_90[j], inf[j])
        out.append(
            DeviationProfile(
                float(rho), (float(start[0]), float(start[1])), n, float(sup[j]), float(inf[j]),
                _growth_exponent(marks.astype(float), sups), bool(stab),
                _growing(marks.astype(float), sups), bool(above), bool(below),
                traces[j] if traces else (),
            )
        )
    return out


def deviation_profile(
    m: LiftedSkewMap, theta: float, x_hat: float, rho: float, n: int, decimate: int | None = None
) -> DeviationProfile:
    """Stream ``D_n`` along one orbit, keeping only extrema and checkpoints.

    With ``decimate`` set, every ``decimate``-th ``(n, D_n)`` is kept in
    ``trace``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not math.isfinite(rho):
        raise ValueError("rho must be finite")
    marks = _marks(n)
    th, x0 = float(theta) % 1.0, float(x_hat)
    x, w, step = x0, m.omega, m.step
    hi = lo = 0.0
    k = 0
    absmax = np.zeros((marks.size, 1))
    hi90 = lo90 = 0.0
    trace = [(0, 0.0)] if decimate else None
    for i, mark in enumerate(marks):
        while k < mark:
            x = step(th, x)
            th += w
            if th >= 1.0:
                th -= 1.0
            k += 1
            d = x - x0 - k * rho
            if d > hi:
                hi = d
            elif d < lo:
                lo = d
            if decimate and k % decimate == 0:
                trace.append((k, d))
        absmax[i, 0] = max(hi, -lo)
        if mark == int(round(0.9 * n)):
            hi90, lo90 = hi, lo
    _check_magnitude(x)
    prof = _summarize(rho, [(theta, x_hat)], n, [hi], [lo], absmax, [hi90], [lo90], marks,
                      [tuple(trace)] if decimate else None)
    return prof[0]


def deviation_profiles(m: LiftedSkewMap, starts, rho: float, n: int) -> list[DeviationProfile]:
    """Vectorised :func:`deviation_profile` for many starting points at once."""
    if n < 2:
        raise ValueError("need n >= 2")
    starts = np.asarray(starts, dtype=float).reshape(-1, 2)
    th = np.mod(starts[:, 0], 1.0)
    x0 = starts[:, 1].copy()
    x = x0.copy()
    hi = np.zeros_like(x)
    lo = np.zeros_like(x)
    marks = _marks(n)
    absmax = np.zeros((marks.size, x.size))
    hi90 = lo90 = None
    f, w = m.fibre_lift, m.omega
    k = 0
    for i, mark in enumerate(marks):
        while k < mark:
            x = f(th, x)
            th = th + w
            th[th >= 1.0] -= 1.0
            k += 1
            d = x - x0 - k * rho
            np.maximum(hi, d, out=hi)
            np.minimum(lo, d, out=lo)
        absmax[i] = np.maximum(hi, -lo)
        if mark == int(round(0.9 * n)):
            hi90, lo90 = hi.copy(), lo.copy()
    _check_magnitude(x)
    return _summarize(rho, starts, n, hi, lo, absmax, hi90, lo90, marks, None)


def orbit_seeds(count: int) -> np.ndarray:
    """Stratified starting points: one per theta stratum, x on a golden-ratio lattice."""
    j = np.arange(count)
    return np.column_stack([(j + 0.5) / count, np.mod(0.25 + j * GOLDEN, 1.0)])


@dataclass(frozen=True)
class RegularityVerdict:
    verdict: str
    C_estimate: float
    evidence: tuple
    asymmetry: tuple
    confidence: str
    exponent_threshold: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "C_estimate": self.C_estimate,
            "confidence": self.confidence,
            "exponent_threshold": self.exponent_threshold,
            "orbits": [p.summary() for p in self.evidence],
        }


def regularity_diagnostic(
    m: LiftedSkewMap, rho: float, n_orbits: int = 8, n: int = 10**5, exponent_threshold: float = 0.1
) -> RegularityVerdict:
    """Classify deviation growth over ``n_orbits`` stratified orbits.

    Regular: every orbit has growth exponent below the threshold and a
    running sup that grew by less than 1% over the last tenth of the run.
    Irregular: some orbit has exponent above twice the threshold and a
    running sup that kept growing on every quarter of the log-scale window.
    Anything else is undecided.
    """
    if n_orbits < 4:
        raise ValueError("need at least 4 orbits")
    if n < 10**4:
        raise ValueError("need n >= 10^4")
    profiles = deviation_profiles(m, orbit_seeds(n_orbits), rho, n)
    exps = np.array([p.growth_exponent for p in profiles])
    stab = np.array([p.stabilized for p in profiles])
    grow = np.array([p.growing for p in profiles])
    C = float(max(p.max_abs for p in profiles))
    thr = exponent_threshold
    if np.all(exps < thr) and np.all(stab):
        verdict = "regular"
        confident = bool(np.all(exps < thr / 2))
    elif np.any((exps > 2 * thr) & grow):
        verdict = "irregular"
        confident = bool(np.any((exps > 4 * thr) & grow))
    else:
        verdict, confident = "undecided", False
    asym = tuple(
        {"bounded_above": p.bounded_above, "bounded_below": p.bounded_below} for p in profiles
    )
    return RegularityVerdict(verdict, C, tuple(profiles), asym, "high" if confident else "low", thr)


# --------------------------------------------------------------------------
# skew translations: the cohomological equation in Fourier space


@dataclass(frozen=True)
class CoboundarySolution:
    """``a(theta) = phi(theta + omega) - phi(theta) + rho`` solved on a grid."""

    rho: float
    phi: np.ndarray
    small_divisors: tuple
    residual: float

    def __call__(self, theta):
        g = self.phi.size
        return np.interp(np.mod(theta, 1.0) * g, np.arange(g + 1), np.append(self.phi, self.phi[0]))


def solve_coboundary(a, omega: float, modes: int = 1024, small: float = 1e-8) -> CoboundarySolution:
    """Truncated Fourier solution of the cohomological equation for a skew term ``a``.

    ``a`` is a callable on the circle, sampled at ``2*modes`` points. Modes
    whose divisor ``|exp(2 pi i k omega) - 1|`` falls below ``small`` are
    dropped and reported.
    """
    g = 2 * modes
    th = np.arange(g) / g
    coeffs = np.fft.rfft(np.asarray(a(th), dtype=float) * np.ones(g)) / g
    rho = float(coeffs[0].real)
    k = np.arange(coeffs.size)
    div = np.exp(2j * np.pi * k * omega) - 1.0
    phi_hat = np.zeros_like(coeffs)
    tiny = np.abs(div) < small
    tiny[0] = False
    use = (k > 0) & ~tiny
    phi_hat[use] = coeffs[use] / div[use]
    phi = np.fft.irfft(phi_hat * g, n=g)
    shifted = np.fft.irfft(phi_hat * np.exp(2j * np.pi * k * omega) * g, n=g)
    resid = float(np.max(np.abs(shifted - phi + rho - np.asarray(a(th), dtype=float))))
    return CoboundarySolution(rho, phi, tuple(int(v) for v in k[tiny]), resid)
