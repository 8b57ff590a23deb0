"""Acceptance criteria, one PASS/FAIL line each.

Runs under pytest (one test per criterion) or directly:

    python tests/test_acceptance.py
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from conftest import SMALL, SQRT3_RHO, conjugated_rigid, example_suite, random_curve_pair  # noqa: E402
from qpforce import cocycle as cc  # noqa: E402
from qpforce.circle import curves_intersect, offset_range, oscillation, winding_number  # noqa: E402
from qpforce.classify import classify, to_json  # noqa: E402
from qpforce.models import GOLDEN, attracting_graph_model, build_map, map_from_config, variation_V  # noqa: E402
from qpforce.regularity import deviation_profile  # noqa: E402
from qpforce.rotation import rational_relation_search, rotation_number_orbit  # noqa: E402
from qpforce.semiconj import (  # noqa: E402
    build_semiconjugacy,
    build_strip_family,
    semiconjugacy_defect,
    uniqueness_gap,
)
from qpforce.strips import GridGraph, invariance_residual, pullback_attractor, strip_search  # noqa: E402
from qpforce.transitivity import box_transitivity_scan  # noqa: E402

CRITERIA = {}


def criterion(number, title):
    def register(func):
        CRITERIA[number] = (title, func)
        return func
    return register


@criterion(1, "rotation number of a rigid rotation")
def rigid_rotation():
    m = build_map("rigid", params={"rho": 0.25})
    t = time.perf_counter()
    est = rotation_number_orbit(m, 0.0, 0.0, 10**6)
    dt = time.perf_counter() - t
    err = abs(est.value - 0.25)
    return err < 1e-9 and dt < 1.0, f"|error|={err:.2e}, {dt:.2f} s"


@criterion(2, "skew translation drifts at the mean of a")
def skew_mean():
    m = build_map("skew", params={"a": "0.3 + 0.1*sin(2*pi*theta)"})
    err = abs(rotation_number_orbit(m, 0.0, 0.0, 10**6).value - 0.3)
    return err < 1e-3, f"|error|={err:.2e}"


@criterion(3, "rational relation search")
def relations():
    t = time.perf_counter()
    rel = rational_relation_search(GOLDEN, (1 + GOLDEN) / 2, 10, 10, 1e-9)
    none = rational_relation_search(math.sqrt(2) - 1, math.sqrt(3) - 1, 50, 50, 1e-9)
    dt = time.perf_counter() - t
    found = rel is not None and (rel.l, rel.k, rel.q) == (-1, -1, 2) and rel.residual < 1e-12
    return found and none is None and dt < 1.0, f"relation {rel}, independent pair -> {none}, {dt:.3f} s"


@criterion(4, "skew deviations reach the coboundary bound")
def coboundary_bound():
    m = build_map("skew", params={"a": f"{SQRT3_RHO} + 0.1*sin(2*pi*theta)"})
    p = deviation_profile(m, 0.0, 0.0, SQRT3_RHO, 10**6)
    bound = oracles.coboundary_bound(0.1, GOLDEN)
    # D_n = phi(theta_n) - phi(theta_0) sweeps the whole range of phi, so sup - inf is the bound
    osc = p.sup_dev - p.inf_dev
    rel = abs(osc - bound) / bound
    return rel < 0.05, f"sup-inf={osc:.6f}, bound={bound:.6f}, relative gap {rel:.1e}"


@criterion(5, "attracting graph recovered by pullback")
def attracting_graph():
    m = attracting_graph_model(0.1, 0.5)
    G = 1024
    res = pullback_attractor(m, GridGraph(G, np.zeros(G)), 200)
    err = float(np.max(np.abs(res.graph.values - 0.1 * np.sin(2 * np.pi * np.arange(G) / G))))
    resid, modulus = invariance_residual(m, res.graph)
    ok = res.converged and err < 1e-3 and resid < 10 * modulus
    return ok, f"sup error {err:.2e}, residual {resid:.2e} vs 10*modulus {10 * modulus:.2e}"


@criterion(6, "width-zero strip on the 2-cover")
def dependent_strip():
    m = build_map("rigid", params={"rho": (1 + GOLDEN) / 2})
    rel = rational_relation_search(GOLDEN, (1 + GOLDEN) / 2, 10, 10, 1e-9)
    res = strip_search(m, rel, 1e-9, 200, 256)
    s = res.strip
    ok = s.cover_q == 2 and s.winding_k == 1 and s.width == 0.0 and res.contained
    return ok, f"q={s.cover_q}, k={s.winding_k}, width={s.width:.1e}, max excursion {res.max_excursion:.1e}"


@criterion(7, "semi-conjugacy of the conjugated rotation")
def semiconjugacy():
    m = conjugated_rigid(SQRT3_RHO, GOLDEN)
    R = G = 256
    t = time.perf_counter()
    H = build_semiconjugacy(build_strip_family(m, SQRT3_RHO, R, 10**4, G), 256)
    defect = semiconjugacy_defect(H, m, SQRT3_RHO)
    dt = time.perf_counter() - t
    x = np.linspace(-1, 1, 41)
    degree_one = all(np.allclose(H.fibre(i, x + 1), H.fibre(i, x) + 1, atol=1e-12) for i in range(G))
    other = build_semiconjugacy(build_strip_family(m, SQRT3_RHO, R, 10**4, G, r_offset=0.5), 256)
    gap = uniqueness_gap(H, other)
    ok = defect < 1e-2 and H.monotone and degree_one and gap < 2 / R + 1e-2 and dt < 60
    return ok, f"defect {defect:.2e}, monotone {H.monotone}, degree one {degree_one}, gap {gap:.2e}, {dt:.1f} s"


@criterion(8, "Lyapunov exponents of constant cocycles")
def lyapunov():
    diag = cc.lyapunov_exponent(cc.constant_cocycle([[2, 0], [0, 0.5]]), v0=(1.0, 0.0), n=10**5).value
    a = 0.7
    rot = cc.lyapunov_exponent(cc.constant_cocycle([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]]),
                               n=10**5).value
    ok = abs(diag - math.log(2)) < 1e-6 and abs(rot) < 1e-6
    return ok, f"diag {diag:.9f}, rotation {rot:.1e}"


@criterion(9, "box transitivity scan")
def transitivity():
    indep = box_transitivity_scan(build_map("rigid", params={"rho": SQRT3_RHO}), 16, 9, 10**5).verdict
    attr = box_transitivity_scan(attracting_graph_model(0.1, 0.5), 16, 9, 10**5).verdict
    dep = box_transitivity_scan(build_map("rigid", params={"rho": (1 + GOLDEN) / 2}), 16, 9, 10**5).verdict
    ok = indep == "transitive-evidence" and attr == dep == "obstruction-found"
    return ok, f"independent {indep}, attracting {attr}, dependent {dep}"


@criterion(10, "winding beats oscillation forces an intersection")
def intersections():
    rng = np.random.default_rng(20240601)
    hits = 0
    for _ in range(1000):
        phi, psi = random_curve_pair(rng)
        assert winding_number(psi) >= oscillation(phi) + 1.0
        hits += bool(curves_intersect(phi, psi, offset_range(phi, psi)))
    return hits == 1000, f"{hits}/1000 detected"


@criterion(11, "variation of the Arnold family")
def variation():
    V = variation_V(build_map("arnold", params={"c": 0.25, "K": 0.5, "eps": 0.3}), 64, 4096)
    return abs(V - 2.0) < 1e-6, f"V={V:.9f}"


@criterion(12, "no certified strip without a relation or with an irregular verdict")
def consistency():
    bad = []
    for name, (m, th) in example_suite().items():
        rep = classify(m, SMALL, th)
        if rep.strip is not None and rep.relation is None and rep.quadrant != "undecided":
            bad.append(name)
        if rep.strip is not None and rep.strip["contained"] and rep.regularity["verdict"] == "irregular":
            bad.append(name)
    return not bad, f"{len(example_suite())} maps, violations: {bad or 'none'}"


@criterion(13, "classification reports are reproducible")
def determinism():
    cfg = {"family": "projective-cocycle", "params": {
        "m11": "2*cos(pi*theta)", "m12": "-2*sin(pi*theta)", "m21": "sin(pi*theta)/2", "m22": "cos(pi*theta)/2"}}
    budgets = {**SMALL, "seed": 7}
    a = to_json(classify(map_from_config(cfg), budgets).to_dict())
    b = to_json(classify(map_from_config(cfg), budgets).to_dict())
    return a == b, f"{len(a)} bytes, identical {a == b}"


def _line(number, ok, detail):
    title = CRITERIA[number][0]
    return f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion-{n:02d}")
def test_acceptance(number, capsys):
    try:
        ok, detail = CRITERIA[number][1]()
    except Exception as exc:  # noqa: BLE001 - a crash is a failure, reported on the same line
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    with capsys.disabled():
        print("\n" + _line(number, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        try:
            ok, detail = CRITERIA[n][1]()
        except Exception as exc:  # noqa: BLE001
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failed += not ok
        print(_line(n, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
