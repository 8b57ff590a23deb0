"""Box-to-box reachability on the torus and winding growth of curve images."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import LiftedSkewMap, _check_magnitude

__all__ = ["BoxScanResult", "box_transitivity_scan", "WindingGrowth", "winding_growth", "save_hit_times"]


@dataclass(frozen=True)
class BoxScanResult:
    """``hit_time[s, t]`` is the first ``n >= 1`` at which a sample from box ``s`` sat in box ``t`` (-1: never)."""

    grid: int
    n: int
    samples_per_box: int
    hit_time: np.ndarray = field(repr=False)
    verdict: str = "inconclusive"
    witness: tuple | None = None
    unreached: int = 0
    unreached_half: int = 0
    steps_run: int = 0

    def box(self, index: int) -> tuple[int, int]:
        """``(theta_bin, x_bin)`` of a flat box index."""
        return divmod(int(index), self.grid)

    def to_dict(self) -> dict:
        w = None
        if self.witness is not None:
            s, t = self.witness
            w = {"source": list(self.box(s)), "target": list(self.box(t))}
        return {
            "grid": self.grid,
            "n": self.n,
            "samples_per_box": self.samples_per_box,
            "verdict": self.verdict,
            "unreached_pairs": self.unreached,
            "unreached_pairs_at_half": self.unreached_half,
            "steps_run": self.steps_run,
            "witness": w,
        }


def _stencil(G: int, per_box: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    side = int(round(np.sqrt(per_box)))
    if side * side != per_box:
        raise ValueError("samples_per_box must be a perfect square")
    off = (np.arange(side) + 0.5) / side
    bi, bj = np.divmod(np.arange(G * G), G)
    oi, oj = np.meshgrid(off, off, indexing="ij")
    th = (bi[:, None] + oi.ravel()[None, :]) / G
    x = (bj[:, None] + oj.ravel()[None, :]) / G
    src = np.repeat(np.arange(G * G), per_box)
    return th.ravel(), x.ravel(), src


def box_transitivity_scan(m: LiftedSkewMap, G: int = 16, samples_per_box: int = 9, n: int = 10**5) -> BoxScanResult:
    """Iterate a stencil of points from every box and record which boxes they enter.

    ``transitive-evidence``: every (source, target) pair was realised.
    ``obstruction-found``: some pair was not, and the unreached set was the
    same at ``n/2`` as at ``n``. Otherwise ``inconclusive``. The scan stops
    early once every pair has been realised.
    """
    if G < 4:
        raise ValueError("need G >= 4")
    if n < 2:
        raise ValueError("need n >= 2")
    th, x, src = _stencil(G, samples_per_box)
    B = G * G
    hit = np.full((B, B), -1, dtype=np.int64)
    flat = hit.ravel()
    row = src * B
    f, w = m.fibre_lift, m.omega
    half = n // 2
    unreached_half = None
    half_mask = None
    step = 0
    for step in range(1, n + 1):
        x = np.mod(f(th, x), 1.0)
        th = th + w
        th[th >= 1.0] -= 1.0
        tgt = np.minimum((th * G).astype(np.int64), G - 1) * G + np.minimum((x * G).astype(np.int64), G - 1)
        cell = row + tgt
        new = flat[cell] < 0
        if new.any():
            flat[cell[new]] = step
        if step == half:
            half_mask = hit < 0
            unreached_half = int(half_mask.sum())
        if step % 1024 == 0 and not (flat < 0).any():
            break
    _check_magnitude(x)
    missing = hit < 0
    unreached = int(missing.sum())
    witness = None
    if unreached == 0:
        verdict = "transitive-evidence"
    else:
        s, t = np.argwhere(missing)[0]
        witness = (int(s), int(t))
        verdict = "obstruction-found" if np.array_equal(missing, half_mask) else "inconclusive"
    if unreached_half is None:
        unreached_half = 0
    return BoxScanResult(G, n, samples_per_box, hit, verdict, witness, unreached, unreached_half, step)


def save_hit_times(result: BoxScanResult, path) -> None:
    """CSV matrix, one row per source box, ``-1`` for unreached targets."""
    np.savetxt(path, result.hit_time, delimiter=",", fmt="%d")


@dataclass(frozen=True)
class WindingGrowth:
    """``k`` and ``v`` of the images ``T^m psi`` of a horizontal curve over ``[theta1, theta2]``."""

    steps: np.ndarray
    k: np.ndarray
    v: np.ndarray
    interval: tuple[float, float]

    @property
    def max_k(self) -> float:
        return float(np.max(np.abs(self.k)))

    def exceeds(self, v_phi: float) -> bool:
        """Whether some image satisfies ``|k(T^m psi)| >= v_phi + 1``."""
        return bool(self.max_k >= v_phi + 1.0)

    def to_dict(self) -> dict:
        return {"interval": list(self.interval), "max_k": self.max_k, "final_k": float(self.k[-1]),
                "final_v": float(self.v[-1])}


def winding_growth(
    m: LiftedSkewMap, theta1: float, theta2: float, x0: float = 0.0, n: int = 10**4,
    samples: int = 65, checkpoints: int = 64,
) -> WindingGrowth:
    """Track the curve ``psi = x0`` over ``[theta1, theta2]`` under iteration.

    The fibre lift is continuous in theta for maps homotopic to the
    identity, so the image of the curve is lifted by iterating every sample
    with the same lift: ``k`` is the endpoint difference and ``v`` the
    height of the sampled image.
    """
    if not 0.0 <= theta1 < theta2 <= 1.0:
        raise ValueError("need 0 <= theta1 < theta2 <= 1")
    th = np.linspace(theta1, theta2, samples)
    x = np.full(samples, float(x0))
    marks = set(np.unique(np.geomspace(1, n, checkpoints).astype(int)).tolist())
    f, w = m.fibre_lift, m.omega
    steps, ks, vs = [], [], []
    for step in range(1, n + 1):
        x = f(np.mod(th, 1.0), x)
        th = th + w
        if step in marks:
            steps.append(step)
            ks.append(x[-1] - x[0])
            vs.append(np.ptp(x))
    _check_magnitude(x)
    return WindingGrowth(np.array(steps), np.array(ks), np.array(vs), (float(theta1), float(theta2)))
