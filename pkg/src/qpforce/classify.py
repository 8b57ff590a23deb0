"""Run every diagnostic on one map and place it in the regular/irregular x graph/no-graph table.

Quadrants:

    IA   relation found, regular, invariant strip found on the q-cover
    IB   no relation, regular, semi-conjugacy to the torus translation
    IIA  irregular, positive Lyapunov exponent (cocycle-backed maps only)
    IIB  irregular, zero Lyapunov exponent (cocycle-backed maps only)

Everything else, including any contradiction between stages, is
``undecided`` with a note saying why.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

import numpy as np

from . import cocycle as cc
from .models import GOLDEN, ConfigError, LiftedSkewMap, build_map, validate_homeomorphism
from .regularity import deviation_profile, regularity_diagnostic, solve_coboundary
from .rotation import AmbiguousRelationError, rational_relation_search, rotation_number_orbit, rotation_number_weighted
from .semiconj import build_semiconjugacy, build_strip_family, semiconjugacy_defect
from .strips import strip_search
from .transitivity import box_transitivity_scan

__all__ = ["SCHEMA_VERSION", "THRESHOLDS", "Budgets", "ClassificationReport", "classify", "sweep", "to_json"]

SCHEMA_VERSION = "1.0"

# every cutoff used to pick a quadrant
THRESHOLDS: dict[str, float] = {
    "relation_tol": 1e-7,
    "relation_max_q": 64,
    "relation_max_k": 64,
    "exponent_threshold": 0.1,
    "containment_slack": 0.1,
    "defect_threshold": 1e-2,
    "lyapunov_positive": 1e-3,
}


@dataclass(frozen=True)
class Budgets:
    rotation_n: int = 10**5
    regularity_orbits: int = 8
    regularity_n: int = 10**5
    strip_n: int = 200
    strip_grid: int = 256
    family_r: int = 256
    family_n: int = 10**4
    family_grid: int = 256
    family_lines: int = 64
    family_starts: int = 32
    lyapunov_n: int = 10**6
    lyapunov_seeds: int = 5
    transit_grid: int = 16
    transit_n: int = 10**4
    seed: int = 0

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any] | None) -> "Budgets":
        values = dict(values or {})
        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown budget keys: {sorted(unknown)}")
        return cls(**{k: int(v) for k, v in values.items()})


@dataclass
class ClassificationReport:
    rotation: dict | None = None
    relation: dict | None = None
    regularity: dict | None = None
    strip: dict | None = None
    semiconjugacy_defect: float | None = None
    lyapunov: float | None = None
    transitivity: str | None = None
    quadrant: str = "undecided"
    notes: list = field(default_factory=list)
    evidence: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    map: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **_plain(asdict(self))}


def _plain(obj):
    """Convert numpy scalars and tuples so the report serialises the same way every time."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_json(data: Mapping) -> str:
    return json.dumps(_plain(data), sort_keys=True, indent=2) + "\n"


def _bound(C: float, th: Mapping[str, float]) -> float:
    """Sampled deviation bounds undershoot the true sup; allow a relative slack."""
    return C * (1.0 + th["containment_slack"]) + 1e-9


def _relation_rho(rel, omega: float) -> float:
    return -(rel["l"] + rel["k"] * omega) / rel["q"]


def classify(
    m: LiftedSkewMap, budgets: Budgets | Mapping | None = None, thresholds: Mapping[str, float] | None = None
) -> ClassificationReport:
    """Rotation, relation, regularity, then the branch that the regularity verdict selects."""
    b = budgets if isinstance(budgets, Budgets) else Budgets.from_mapping(budgets)
    th = dict(THRESHOLDS)
    th.update(thresholds or {})
    check = validate_homeomorphism(m, 64, 64)
    if not check.passed:
        raise ConfigError(f"map is not a family of degree-one homeomorphisms: {check.error or 'validation failed'}")
    rep = ClassificationReport(thresholds=th, budgets=asdict(b), map=_plain(dict(m.description)))
    rep.map["label"] = m.label
    rep.map["omega"] = m.omega

    def fail(stage: str, exc: Exception) -> ClassificationReport:
        rep.notes.append(f"stage {stage} failed: {type(exc).__name__}: {exc}")
        rep.quadrant = "undecided"
        return rep

    try:
        # deviations are judged against this value, so it needs the accuracy of the weighted average
        rot = rotation_number_weighted(m, 0.0, 0.0, b.rotation_n)
        rep.rotation = rot.to_dict()
    except Exception as exc:  # noqa: BLE001 - any stage failure downgrades the verdict
        return fail("rotation", exc)
    rho = rot.value

    try:
        tol = max(th["relation_tol"], rot.spread)
        rel = rational_relation_search(m.omega, rho, int(th["relation_max_q"]), int(th["relation_max_k"]), tol)
        rep.relation = None if rel is None else rel.to_dict()
    except AmbiguousRelationError as exc:
        return fail("relation", exc)
    if rel is not None:
        rho = _relation_rho(rep.relation, m.omega)

    if m.skew_term is not None:
        sol = solve_coboundary(lambda t: m.skew_term(t), m.omega)
        rep.evidence["cohomology"] = {
            "rho": sol.rho,
            "oscillation": float(np.ptp(sol.phi)),
            "residual": sol.residual,
            "small_divisors": list(sol.small_divisors),
        }

    try:
        reg = regularity_diagnostic(m, rho, b.regularity_orbits, b.regularity_n, th["exponent_threshold"])
        d = reg.to_dict()
        rep.regularity = {k: d[k] for k in ("verdict", "C_estimate", "confidence", "exponent_threshold")}
        rep.evidence["regularity"] = d
    except Exception as exc:  # noqa: BLE001
        return fail("regularity", exc)

    if m.cocycle is not None:
        try:
            ly = cc.lyapunov_seeds(m.cocycle, b.lyapunov_n, b.lyapunov_seeds, b.seed)
            rep.lyapunov = ly.value
            rep.evidence["lyapunov"] = ly.to_dict()
            rep.evidence["cocycle_degree"] = m.cocycle.degree
            if not m.cocycle.homotopic_to_identity:
                rep.notes.append(f"cocycle has degree {m.cocycle.degree}; the map is not homotopic to the identity")
        except Exception as exc:  # noqa: BLE001
            return fail("lyapunov", exc)

    verdict = reg.verdict
    if verdict == "regular":
        if rel is not None:
            try:
                res = strip_search(m, rel, _bound(reg.C_estimate, th), b.strip_n, b.strip_grid,
                                   max_residual=max(1e-6, tol))
                rep.strip = res.to_dict()
            except Exception as exc:  # noqa: BLE001
                return fail("strip", exc)
            rep.quadrant = "IA" if res.contained else "undecided"
            if not res.contained:
                rep.notes.append("strip iterates left the deviation bound; no strip certified")
        else:
            try:
                fam = build_strip_family(
                    m, rho, b.family_r, b.family_n, b.family_grid, b.family_lines, b.family_starts,
                    C_bound=_bound(reg.C_estimate, th),
                )
                H = build_semiconjugacy(fam, b.family_grid)
                dr = semiconjugacy_defect(H, m, rho, report=True)
            except Exception as exc:  # noqa: BLE001
                return fail("semiconjugacy", exc)
            rep.semiconjugacy_defect = dr.defect
            rep.evidence["semiconjugacy"] = {**dr.to_dict(), "ordered": fam.ordered, "monotone": H.monotone,
                                             "containment_violations": len(fam.containment_violations)}
            rep.quadrant = "IB" if dr.defect < th["defect_threshold"] else "undecided"
            if rep.quadrant == "undecided":
                rep.notes.append("semi-conjugacy defect above threshold")
    elif verdict == "irregular":
        try:
            scan = box_transitivity_scan(m, b.transit_grid, 9, b.transit_n)
            rep.transitivity = scan.verdict
            rep.evidence["transitivity"] = scan.to_dict()
        except Exception as exc:  # noqa: BLE001
            return fail("transitivity", exc)
        if rep.lyapunov is None:
            rep.notes.append("irregular, but without a cocycle there is no proxy for measurable invariant graphs")
        elif rep.lyapunov > th["lyapunov_positive"]:
            rep.quadrant = "IIA"
        else:
            rep.quadrant = "IIB"
    else:
        rep.notes.append("regularity verdict undecided")

    _cross_checks(rep, th)
    return rep


def _cross_checks(rep: ClassificationReport, th: Mapping[str, float]) -> None:
    """Downgrade to undecided whenever two stages disagree with the theory."""
    problems = []
    if rep.strip is not None and rep.relation is None:
        problems.append("a strip was certified although no rational relation was found")
    if rep.strip is not None and rep.regularity and rep.regularity["verdict"] == "irregular":
        problems.append("a strip was certified for a map diagnosed irregular")
    if rep.quadrant.startswith("II") and rep.transitivity == "obstruction-found":
        problems.append("irregular verdict but the box scan found an obstruction to transitivity")
    if (
        rep.lyapunov is not None and rep.lyapunov > th["lyapunov_positive"] and rep.relation is None
        and rep.regularity and rep.regularity["verdict"] == "regular"
    ):
        problems.append("positive Lyapunov exponent with independent rotation numbers cannot be regular")
    if problems:
        rep.notes.extend(problems)
        rep.quadrant = "undecided"


# --------------------------------------------------------------------------
# sweeps

STAGES = ("rotnum", "deviations", "regularity", "lyapunov", "classify")


def _stage_row(stage: str, m: LiftedSkewMap, b: Budgets, th: Mapping[str, float]) -> dict:
    if stage == "rotnum":
        r = rotation_number_orbit(m, 0.0, 0.0, b.rotation_n)
        return {"rho_estimate": r.value, "spread": r.spread}
    if stage == "deviations":
        r = rotation_number_weighted(m, 0.0, 0.0, b.rotation_n)
        p = deviation_profile(m, 0.0, 0.0, r.value, b.regularity_n)
        return {"rho_estimate": r.value, "sup_dev": p.sup_dev, "inf_dev": p.inf_dev, "growth_exponent": p.growth_exponent}
    if stage == "regularity":
        r = rotation_number_weighted(m, 0.0, 0.0, b.rotation_n)
        v = regularity_diagnostic(m, r.value, b.regularity_orbits, b.regularity_n, th["exponent_threshold"])
        return {"rho_estimate": r.value, "verdict": v.verdict, "C_estimate": v.C_estimate}
    if stage == "lyapunov":
        if m.cocycle is None:
            raise ConfigError("lyapunov stage needs a cocycle-backed map")
        ly = cc.lyapunov_seeds(m.cocycle, b.lyapunov_n, b.lyapunov_seeds, b.seed)
        return {"lyapunov": ly.value, "drift": ly.drift}
    if stage == "classify":
        rep = classify(m, b, th)
        rho = rep.rotation["value"] if rep.rotation else None
        return {"rho_estimate": rho, "quadrant": rep.quadrant}
    raise ConfigError(f"unknown stage {stage!r}; expected one of {STAGES}")


def sweep(
    family: str,
    ranges: Mapping[str, list],
    stage: str,
    base: Mapping[str, Any] | None = None,
    omega: float = GOLDEN,
    budgets: Budgets | Mapping | None = None,
    thresholds: Mapping[str, float] | None = None,
) -> list[dict]:
    """One row per point of the Cartesian product of ``ranges``.

    Failures at a point are recorded in that row's ``error`` column and the
    sweep moves on.
    """
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {STAGES}")
    b = budgets if isinstance(budgets, Budgets) else Budgets.from_mapping(budgets)
    th = dict(THRESHOLDS)
    th.update(thresholds or {})
    names = list(ranges)
    rows = []
    if not names or any(len(ranges[k]) == 0 for k in names):
        return rows
    for combo in itertools.product(*(ranges[k] for k in names)):
        point = dict(zip(names, combo))
        row: dict[str, Any] = dict(point)
        try:
            m = build_map(family, omega, {**dict(base or {}), **point})
            row.update(_stage_row(stage, m, b, th))
            row["error"] = ""
        except Exception as exc:  # noqa: BLE001 - per-point failures are data
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows

