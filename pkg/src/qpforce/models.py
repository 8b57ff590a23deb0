"""Quasiperiodically forced circle maps: the map type, the model zoo and
the operations every other module builds on (iteration, fibre inverses,
contract validation, conjugation, the variation functional).

A map is described by its base frequency ``omega`` and a *fibre lift*
``f(theta, x_hat)`` with ``f(theta, x_hat + 1) = f(theta, x_hat) + 1`` and
``f`` strictly increasing in ``x_hat``. Fibre lifts are vectorised numpy
callables; a separate float-only callable is kept for long single orbits,
where numpy's per-call overhead dominates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from .expression import MapExpression, parse_map_expression

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

__all__ = [
    "GOLDEN",
    "FAMILIES",
    "LiftedSkewMap",
    "ValidationReport",
    "ConfigError",
    "InversionError",
    "build_map",
    "iterate",
    "iterate_inverse",
    "invert_fibre",
    "validate_homeomorphism",
    "conjugate",
    "variation_V",
    "attracting_graph_model",
    "load_config",
    "map_from_config",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
MAGNITUDE_LIMIT = 1e12

FAMILIES = ("rigid", "skew", "arnold", "conjugated", "projective-cocycle", "custom", "attracting-graph")


class ConfigError(ValueError):
    """A map or cocycle description is malformed or out of range."""


class InversionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LiftedSkewMap:
    """``(theta, x) -> (theta + omega, fibre_lift(theta, x))`` on the cover."""

    omega: float
    fibre_lift: Callable
    fibre_derivative: Callable | None = None
    label: str = ""
    scalar_lift: Callable | None = None
    fibre_inverse: Callable | None = None
    scalar_inverse: Callable | None = None
    description: Mapping[str, Any] = field(default_factory=dict)
    cocycle: Any = None
    skew_term: Callable | None = None

    def __post_init__(self):
        w = float(self.omega)
        if not (0.0 < w < 1.0) or not math.isfinite(w):
            raise ConfigError(f"omega must lie in (0, 1), got {self.omega!r}")
        object.__setattr__(self, "omega", w)

    def __call__(self, theta, x_hat):
        return self.fibre_lift(theta, x_hat)

    def step(self, theta: float, x_hat: float) -> float:
        if self.scalar_lift is not None:
            return self.scalar_lift(theta, x_hat)
        return float(self.fibre_lift(theta, x_hat))

    def inverse(self, theta, y_hat, tol: float = 1e-12):
        """Fibre inverse ``T_theta^{-1}``; bisection unless the map carries its own."""
        if self.fibre_inverse is not None:
            return self.fibre_inverse(theta, y_hat)
        return invert_fibre(self.fibre_lift, theta, y_hat, self.fibre_derivative, tol)

    def inverse_step(self, theta: float, y_hat: float) -> float:
        if self.scalar_inverse is not None:
            return self.scalar_inverse(theta, y_hat)
        return float(self.inverse(theta, y_hat))

    def with_lift_shift(self, m: int) -> "LiftedSkewMap":
        """The same torus map with the lift ``fibre_lift + m``."""
        f, fs = self.fibre_lift, self.scalar_lift
        inv, sinv = self.fibre_inverse, self.scalar_inverse
        return LiftedSkewMap(
            self.omega,
            lambda th, x: f(th, x) + m,
            self.fibre_derivative,
            f"{self.label}+{m}",
            None if fs is None else (lambda th, x: fs(th, x) + m),
            None if inv is None else (lambda th, y: inv(th, y - m)),
            None if sinv is None else (lambda th, y: sinv(th, y - m)),
            dict(self.description, lift_shift=m),
            self.cocycle,
            None,
        )


# --------------------------------------------------------------------------
# fibre inverses


def invert_fibre(f, theta, y, df=None, tol: float = 1e-12, max_iter: int = 200):
    """Solve ``f(theta, x) = y`` for ``x`` on every fibre at once.

    Uses the degree-one property to bracket the root in a unit interval and
    then bisects; when a derivative is supplied, Newton steps are taken
    whenever they stay inside the bracket.
    """
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    shape = np.broadcast_shapes(theta.shape, y.shape)
    y = np.broadcast_to(y, shape).astype(float)
    theta = np.broadcast_to(theta, shape)
    d = f(theta, y) - y
    k = np.floor(d)
    lo = y - k - 1.0
    hi = y - k
    x = np.clip(y - d, lo, hi) if df is not None else 0.5 * (lo + hi)
    tol_eff = np.maximum(tol, 4.0 * np.spacing(np.abs(y) + 1.0))
    last = hi - lo
    done = np.zeros(shape, dtype=bool)
    for _ in range(max_iter):
        fx = f(theta, x) - y
        # a residual at the rounding level of y ends flat fibres where Newton steps do not shrink
        settled = done | (np.abs(fx) <= tol_eff)
        lo = np.where(fx <= 0, x, lo)
        hi = np.where(fx >= 0, x, hi)
        if df is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = x - fx / df(theta, x)
            # Newton may cycle between the bracket ends; bisect when it stops halving its step
            outside = ~((xn >= lo) & (xn <= hi)) | ~np.isfinite(xn) | (np.abs(xn - x) > 0.5 * last)
            xn = np.where(outside, 0.5 * (lo + hi), xn)
            last = np.abs(xn - x)
        else:
            xn = 0.5 * (lo + hi)
        done = settled | (np.abs(xn - x) <= tol_eff) | (hi - lo <= tol_eff)
        # settled entries are frozen while the rest of the batch keeps iterating
        x = np.where(settled, x, xn)
        if np.all(done):
            return x if x.ndim else float(x)
    raise InversionError("fibre inverse did not converge")


def _invert_scalar(f, df, theta: float, y: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    d = f(theta, y) - y
    k = math.floor(d)
    lo, hi = y - k - 1.0, y - k
    x = min(max(y - d, lo), hi) if df is not None else 0.5 * (lo + hi)
    tol_eff = max(tol, 4.0 * math.ulp(abs(y) + 1.0))
    last = hi - lo
    for _ in range(max_iter):
        fx = f(theta, x) - y
        if abs(fx) <= tol_eff:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        xn = 0.5 * (lo + hi)
        if df is not None:
            slope = df(theta, x)
            if slope > 0:
                cand = x - fx / slope
                if lo <= cand <= hi and abs(cand - x) <= 0.5 * last:
                    xn = cand
        last = abs(xn - x)
        if abs(xn - x) <= tol_eff or hi - lo <= tol_eff:
            return xn
        x = xn
    raise InversionError(f"fibre inverse did not converge at theta={theta!r}, y={y!r}")


# --------------------------------------------------------------------------
# map construction


def _from_expression(expr: MapExpression, omega: float, label: str, description, **extra) -> LiftedSkewMap:
    deriv = expr.diff("x")
    return LiftedSkewMap(
        omega,
        expr,
        deriv,
        label,
        scalar_lift=expr.scalar,
        scalar_inverse=lambda th, y: _invert_scalar(expr.scalar, deriv.scalar, th, y),
        fibre_inverse=lambda th, y: invert_fibre(expr, th, y, deriv),
        description=description,
        **extra,
    )


def _expr(source, params, omega) -> MapExpression:
    if isinstance(source, MapExpression):
        return source
    bound = {"omega": omega}
    bound.update(params or {})
    return parse_map_expression(str(source), bound)


def _number(params, name, default=None) -> float:
    if name not in params:
        if default is None:
            raise ConfigError(f"missing parameter {name!r}")
        return default
    value = params[name]
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {name!r} must be a number, got {value!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"parameter {name!r} must be finite")
    return value


def build_map(spec, omega: float = GOLDEN, params: Mapping[str, Any] | None = None) -> LiftedSkewMap:
    """Build a map from a family name plus parameters, or from an expression.

    ``spec`` is either a :class:`MapExpression` (the custom family) or one of
    the names in :data:`FAMILIES`:

    ``rigid``
        ``rho``: ``x + rho``.
    ``skew``
        ``a``: expression in ``theta``; ``x + a(theta)``.
    ``arnold``
        ``c``, ``K`` (``|K| < 1``), ``eps``:
        ``x + c + K/(2 pi) sin(2 pi x) + eps sin(2 pi theta)``.
    ``attracting-graph``
        ``amplitude``, ``b`` (``0 < b < 1``): a map whose invariant graph is
        ``amplitude * sin(2 pi theta)`` and attracts with fibre rate ``1 - b``.
    ``conjugated``
        ``inner`` (a nested ``{"family", "params"}`` or expression) and ``h``
        (expression for the per-fibre conjugacy lift).
    ``projective-cocycle``
        ``m11``, ``m12``, ``m21``, ``m22``: expressions in ``theta``.
    ``custom``
        ``expression``: any fibre lift in the expression language.

    Extra entries of ``params`` are available as names inside expressions.
    """
    params = dict(params or {})
    if isinstance(spec, MapExpression):
        return _from_expression(spec, omega, "custom", {"family": "custom", "expression": spec.source})
    family = str(spec).replace("_", "-")
    scalars = {k: v for k, v in params.items() if isinstance(v, (int, float))}

    if family == "rigid":
        rho = _number(params, "rho")
        expr = parse_map_expression("x + rho", {"rho": rho})
        return _from_expression(expr, omega, f"rigid(rho={rho:g})", {"family": "rigid", "rho": rho},
                                skew_term=lambda th: np.full_like(np.asarray(th, dtype=float), rho))
    if family == "skew":
        if "a" not in params:
            raise ConfigError("skew family needs an expression 'a'")
        a = _expr(params["a"], scalars, omega)
        if a.depends_on("x"):
            raise ConfigError("the skew term a(theta) may not depend on x")
        expr = MapExpression(f"x + ({a.source})", {}, _tree=_add_x(a))
        return _from_expression(expr, omega, f"skew(a={params['a']})",
                                {"family": "skew", "a": str(params["a"])},
                                skew_term=lambda th: a(th, 0.0))
    if family == "arnold":
        c, K, eps = _number(params, "c"), _number(params, "K"), _number(params, "eps", 0.0)
        if abs(K) >= 1.0:
            raise ConfigError(f"arnold family requires |K| < 1 for invertible fibres, got K={K}")
        expr = parse_map_expression(
            "x + c + K/(2*pi)*sin(2*pi*x) + eps*sin(2*pi*theta)", {"c": c, "K": K, "eps": eps}
        )
        return _from_expression(expr, omega, f"arnold(c={c:g},K={K:g},eps={eps:g})",
                                {"family": "arnold", "c": c, "K": K, "eps": eps})
    if family == "attracting-graph":
        amp, b = _number(params, "amplitude", 0.1), _number(params, "b", 0.5)
        return attracting_graph_model(amp, b, omega)
    if family == "conjugated":
        inner_spec = params.get("inner")
        if inner_spec is None or "h" not in params:
            raise ConfigError("conjugated family needs 'inner' and 'h'")
        inner = map_from_config(inner_spec, omega) if isinstance(inner_spec, Mapping) else build_map(
            _expr(inner_spec, scalars, omega), omega)
        h = _expr(params["h"], {k: v for k, v in params.get("h_params", {}).items()}, omega)
        out = conjugate(inner, h)
        return LiftedSkewMap(out.omega, out.fibre_lift, out.fibre_derivative, out.label, out.scalar_lift,
                             out.fibre_inverse, out.scalar_inverse,
                             {"family": "conjugated", "inner": inner.description, "h": str(params["h"])})
    if family == "projective-cocycle":
        from .cocycle import cocycle_from_config, projectivize

        return projectivize(cocycle_from_config(dict(params, omega=omega)))
    if family == "custom":
        if "expression" not in params:
            raise ConfigError("custom family needs an 'expression'")
        expr = _expr(params["expression"], scalars, omega)
        return _from_expression(expr, omega, f"custom({params['expression']})",
                                {"family": "custom", "expression": str(params["expression"])})
    raise ConfigError(f"unknown map family {spec!r}; expected one of {FAMILIES}")


def _add_x(a: MapExpression):
    from .expression import BinOp, Var

    return BinOp("+", Var("x"), a.tree)


def attracting_graph_model(amplitude: float = 0.1, b: float = 0.5, omega: float = GOLDEN) -> LiftedSkewMap:
    """Fibre maps ``u -> u - b/(2 pi) sin(2 pi u)`` in coordinates ``u = x - g(theta)``.

    ``g(theta) = amplitude * sin(2 pi theta)`` is then an attracting invariant
    graph (fibre derivative ``1 - b`` on it) and ``g + 1/2`` a repelling one.
    """
    if not 0.0 < b < 1.0:
        raise ConfigError("attracting-graph needs 0 < b < 1")
    src = (
        "A*sin(2*pi*(theta + omega)) + (x - A*sin(2*pi*theta))"
        " - b/(2*pi)*sin(2*pi*(x - A*sin(2*pi*theta)))"
    )
    expr = parse_map_expression(src, {"A": amplitude, "b": b, "omega": omega})
    return _from_expression(expr, omega, f"attracting-graph(A={amplitude:g},b={b:g})",
                            {"family": "attracting-graph", "amplitude": amplitude, "b": b})


# --------------------------------------------------------------------------
# iteration


def _check_magnitude(x):
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > MAGNITUDE_LIMIT):
        raise OverflowError("fibre coordinate left the representable range during iteration")


def iterate(m: LiftedSkewMap, theta, x_hat, n: int):
    """Apply the map ``n`` times; returns ``(theta_n, x_hat_n)``.

    Float inputs run a plain Python loop, arrays are iterated in lockstep.
    Negative ``n`` iterates the fibre inverse.
    """
    n = int(n)
    if n < 0:
        return iterate_inverse(m, theta, x_hat, -n)
    w = m.omega
    if np.ndim(theta) == 0 and np.ndim(x_hat) == 0:
        th, x = float(theta), float(x_hat)
        step = m.scalar_lift or (lambda a, b: float(m.fibre_lift(a, b)))
        for _ in range(n):
            x = step(th, x)
            th += w
            if th >= 1.0:
                th -= 1.0
        _check_magnitude(x)
        return th, x
    th = np.mod(np.asarray(theta, dtype=float), 1.0)
    x = np.asarray(x_hat, dtype=float).copy()
    th = np.broadcast_to(th, np.broadcast_shapes(th.shape, x.shape)).copy()
    for _ in range(n):
        x = m.fibre_lift(th, x)
        th += w
        th[th >= 1.0] -= 1.0
    _check_magnitude(x)
    return th, x


def iterate_inverse(m: LiftedSkewMap, theta, x_hat, n: int):
    w = m.omega
    if np.ndim(theta) == 0 and np.ndim(x_hat) == 0:
        th, x = float(theta), float(x_hat)
        for _ in range(int(n)):
            th -= w
            if th < 0.0:
                th += 1.0
            x = m.inverse_step(th, x)
        _check_magnitude(x)
        return th, x
    th = np.mod(np.asarray(theta, dtype=float), 1.0)
    x = np.asarray(x_hat, dtype=float).copy()
    th = np.broadcast_to(th, np.broadcast_shapes(th.shape, x.shape)).copy()
    for _ in range(int(n)):
        th -= w
        th[th < 0.0] += 1.0
        x = m.inverse(th, x)
    _check_magnitude(x)
    return th, x


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    periodicity_defect: float
    min_increment: float
    theta_grid: int
    x_grid: int
    error: str | None = None

    @property
    def periodic(self) -> bool:
        return self.periodicity_defect < 1e-9

    @property
    def monotone(self) -> bool:
        return self.min_increment > 0


def validate_homeomorphism(m, theta_grid: int = 256, x_grid: int = 256) -> ValidationReport:
    """Grid check of degree-one periodicity and strict monotonicity.

    ``m`` may be a :class:`LiftedSkewMap` or a bare ``f(theta, x)``.
    """
    if theta_grid < 16 or x_grid < 16:
        raise ValueError("validation grids must have at least 16 points")
    f = m.fibre_lift if isinstance(m, LiftedSkewMap) else m
    th = (np.arange(theta_grid) / theta_grid)[:, None]
    xs = (np.arange(x_grid + 1) / x_grid)[None, :]
    try:
        vals = np.asarray(f(th, xs), dtype=float) * np.ones((theta_grid, x_grid + 1))
        shifted = np.asarray(f(th, xs[:, :-1] + 1.0), dtype=float) * np.ones((theta_grid, x_grid))
    except ArithmeticError as exc:
        return ValidationReport(False, math.inf, -math.inf, theta_grid, x_grid, str(exc))
    defect = float(np.max(np.abs(shifted - vals[:, :-1] - 1.0)))
    min_inc = float(np.min(np.diff(vals, axis=1)))
    return ValidationReport(defect < 1e-9 and min_inc > 0, defect, min_inc, theta_grid, x_grid)


# --------------------------------------------------------------------------
# conjugation


def conjugate(m: LiftedSkewMap, h_lift: MapExpression, tol: float = 1e-12) -> LiftedSkewMap:
    """Fibre lift ``h_{theta+omega}^{-1} o m_theta o h_theta``.

    ``h_lift`` is an expression in ``theta`` and ``x`` defining a degree-one,
    strictly increasing lift on every fibre; inverses are solved per fibre
    to ``tol``.
    """
    report = validate_homeomorphism(h_lift, 64, 64)
    if not report.passed:
        raise ConfigError(
            f"conjugacy is not a degree-one increasing lift "
            f"(periodicity defect {report.periodicity_defect:.3g}, min increment {report.min_increment:.3g})"
        )
    w = m.omega
    dh = h_lift.diff("x")
    f, fs, df = m.fibre_lift, m.step, m.fibre_derivative
    hs, dhs = h_lift.scalar, dh.scalar

    def h_inv(th, y):
        return invert_fibre(h_lift, th, y, dh, tol)

    def lift(th, x):
        th = np.asarray(th, dtype=float)
        return h_inv(np.mod(th + w, 1.0), f(th, h_lift(th, x)))

    def lift_scalar(th, x):
        t1 = th + w
        if t1 >= 1.0:
            t1 -= 1.0
        return _invert_scalar(hs, dhs, t1, fs(th, hs(th, x)), tol)

    def inverse(th, z):
        th = np.asarray(th, dtype=float)
        return h_inv(th, m.inverse(th, h_lift(np.mod(th + w, 1.0), z)))

    def inverse_scalar(th, z):
        t1 = th + w
        if t1 >= 1.0:
            t1 -= 1.0
        return _invert_scalar(hs, dhs, th, m.inverse_step(th, hs(t1, z)), tol)

    deriv = None
    if df is not None:
        def deriv(th, x):
            th = np.asarray(th, dtype=float)
            u = h_lift(th, x)
            v = f(th, u)
            return df(th, u) * dh(th, x) / dh(np.mod(th + w, 1.0), h_inv(np.mod(th + w, 1.0), v))

    return LiftedSkewMap(
        w, lift, deriv, f"conjugated({m.label} by {h_lift.source})",
        scalar_lift=lift_scalar, fibre_inverse=inverse, scalar_inverse=inverse_scalar,
        description={"family": "conjugated", "inner": dict(m.description), "h": h_lift.source},
    )


# --------------------------------------------------------------------------
# variation functional


def variation_V(m: LiftedSkewMap, theta_quadrature: int = 1024, x_grid: int = 4096) -> float:
    """Theta-average of the total variation of ``x -> DT_theta(x)`` over one period."""
    if m.fibre_derivative is None:
        raise ValueError("variation_V needs a map with a fibre derivative")
    th = (np.arange(theta_quadrature) / theta_quadrature)[:, None]
    xs = (np.arange(x_grid) / x_grid)[None, :]
    total = 0.0
    # chunk over theta to bound memory at large grids
    chunk = max(1, 2**22 // x_grid)
    for start in range(0, theta_quadrature, chunk):
        d = np.asarray(m.fibre_derivative(th[start:start + chunk], xs), dtype=float)
        d = d * np.ones((min(chunk, theta_quadrature - start), x_grid))
        wrapped = np.concatenate([d, d[:, :1]], axis=1)
        total += float(np.abs(np.diff(wrapped, axis=1)).sum())
    return total / theta_quadrature


# --------------------------------------------------------------------------
# configuration files


def load_config(path) -> dict:
    """Read a TOML or JSON map/cocycle description."""
    p = Path(path)
    text = p.read_text()
    try:
        if p.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from None


def map_from_config(cfg: Mapping[str, Any], omega: float | None = None) -> LiftedSkewMap:
    """Build a map from ``{family, params, omega, expression}``; ``omega`` overrides."""
    w = float(omega if omega is not None else cfg.get("omega", GOLDEN))
    params = dict(cfg.get("params", {}))
    if "expression" in cfg:
        params.setdefault("expression", cfg["expression"])
    family = cfg.get("family", "custom" if "expression" in params else None)
    if family is None:
        raise ConfigError("map config needs a 'family' or an 'expression'")
    return build_map(family, w, params)
