"""A small arithmetic language for user-defined fibre maps.

Grammar (``^`` and ``**`` bind tighter than unary minus and associate to
the right)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom (("^" | "**") unary)?
    atom   := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Free variables are ``theta`` and ``x``; ``pi`` is a constant and every other
name must be bound through ``parameters``. There are deliberately no
conditionals: fibre maps have to be continuous.

A parsed expression compiles to two callables, one on Python floats via
:mod:`math` (for long single orbits) and one on numpy arrays. Symbolic
differentiation is supported so that derivative evaluators come for free.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

__all__ = [
    "ExpressionSyntaxError",
    "UnboundNameError",
    "ExpressionDomainError",
    "MapExpression",
    "parse_map_expression",
]

VARIABLES = ("theta", "x")
CONSTANTS = {"pi": math.pi}


class ExpressionSyntaxError(ValueError):
    def __init__(self, message: str, source: str, position: int):
        self.position = position
        self.source = source
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {source}\n  {pointer}")


class UnboundNameError(NameError):
    def __init__(self, name: str):
        super().__init__(f"unbound identifier {name!r}")
        self.name = name


class ExpressionDomainError(ArithmeticError):
    """Evaluation left the domain of the expression (e.g. division by zero)."""

    def __init__(self, message: str, theta=None, x=None, count: int = 1):
        self.theta = theta
        self.x = x
        self.count = count
        where = "" if theta is None else f" at theta={theta!r}, x={x!r}"
        more = "" if count <= 1 else f" ({count} points affected)"
        super().__init__(f"{message}{where}{more}")


# --------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


# name -> (arity, numpy source, math source)
FUNCTIONS = {
    "sin": (1, "np.sin", "math.sin"),
    "cos": (1, "np.cos", "math.cos"),
    "tan": (1, "np.tan", "math.tan"),
    "atan": (1, "np.arctan", "math.atan"),
    "exp": (1, "np.exp", "math.exp"),
    "log": (1, "np.log", "_mlog"),
    "sqrt": (1, "np.sqrt", "_msqrt"),
    "abs": (1, "np.abs", "abs"),
    "sinh": (1, "np.sinh", "math.sinh"),
    "cosh": (1, "np.cosh", "math.cosh"),
    "tanh": (1, "np.tanh", "math.tanh"),
    "sign": (1, "np.sign", "_msign"),
    "atan2": (2, "np.arctan2", "math.atan2"),
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(source: str):
    pos = 0
    tokens = []
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {source[bad]!r}", source, bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, tok, what=None):
        kind, text, pos = tok
        if kind == "end":
            raise ExpressionSyntaxError("unexpected end of expression", self.source, pos)
        raise ExpressionSyntaxError(what or f"unexpected {text!r}", self.source, pos)

    def expect(self, text):
        tok = self.take()
        if tok[1] != text or tok[0] != "op":
            self.error(tok, f"expected {text!r} but found {tok[1]!r}")

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.error(tok)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] in (("op", "^"), ("op", "**")):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if text not in FUNCTIONS:
                    self.error(tok, f"unknown function {text!r}")
                self.take()
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[text][0]
                if len(args) != arity:
                    self.error(tok, f"{text} takes {arity} argument(s), got {len(args)}")
                return Call(text, tuple(args))
            return Var(text)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        self.error(tok)


# --------------------------------------------------------------------------
# binding, simplification, differentiation


def _bind(node, params: Mapping[str, float]):
    if isinstance(node, Var):
        if node.name in VARIABLES:
            return node
        if node.name in params:
            return Num(float(params[node.name]))
        if node.name in CONSTANTS:
            return Num(CONSTANTS[node.name])
        raise UnboundNameError(node.name)
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return _neg(_bind(node.arg, params))
    if isinstance(node, BinOp):
        return _binop(node.op, _bind(node.left, params), _bind(node.right, params))
    if isinstance(node, Call):
        return Call(node.fn, tuple(_bind(a, params) for a in node.args))
    raise TypeError(node)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _binop(op, a, b):
    # light constant folding; keeps derivative trees readable
    if isinstance(a, Num) and isinstance(b, Num) and not (op == "/" and b.value == 0.0):
        if op == "^" and a.value < 0 and not float(b.value).is_integer():
            return BinOp(op, a, b)
        return Num(_fold(op, a.value, b.value))
    if op == "+":
        if a == Num(0.0):
            return b
        if b == Num(0.0):
            return a
    elif op == "-":
        if b == Num(0.0):
            return a
        if a == Num(0.0):
            return _neg(b)
    elif op == "*":
        if a == Num(0.0) or b == Num(0.0):
            return Num(0.0)
        if a == Num(1.0):
            return b
        if b == Num(1.0):
            return a
    elif op == "/":
        if a == Num(0.0) and not b == Num(0.0):
            return Num(0.0)
        if b == Num(1.0):
            return a
    elif op == "^":
        if b == Num(1.0):
            return a
        if b == Num(0.0):
            return Num(1.0)
    return BinOp(op, a, b)


def _fold(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return a**b


def _depends(node, var) -> bool:
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return _depends(node.arg, var)
    if isinstance(node, BinOp):
        return _depends(node.left, var) or _depends(node.right, var)
    return any(_depends(a, var) for a in node.args)


def _diff(node, var):
    if not _depends(node, var):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0)
    if isinstance(node, Neg):
        return _neg(_diff(node.arg, var))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = _diff(a, var), _diff(b, var)
        if node.op in "+-":
            return _binop(node.op, da, db)
        if node.op == "*":
            return _binop("+", _binop("*", da, b), _binop("*", a, db))
        if node.op == "/":
            num = _binop("-", _binop("*", da, b), _binop("*", a, db))
            return _binop("/", num, _binop("^", b, Num(2.0)))
        # power
        if not _depends(b, var):
            return _binop("*", _binop("*", b, _binop("^", a, _binop("-", b, Num(1.0)))), da)
        log_term = _binop("*", db, Call("log", (a,)))
        ratio = _binop("/", _binop("*", b, da), a)
        return _binop("*", node, _binop("+", log_term, ratio))
    u = node.args[0]
    du = _diff(u, var) if node.fn != "atan2" else None
    fn = node.fn
    if fn == "sin":
        outer = Call("cos", (u,))
    elif fn == "cos":
        outer = _neg(Call("sin", (u,)))
    elif fn == "tan":
        outer = _binop("+", Num(1.0), _binop("^", node, Num(2.0)))
    elif fn == "atan":
        outer = _binop("/", Num(1.0), _binop("+", Num(1.0), _binop("^", u, Num(2.0))))
    elif fn == "exp":
        outer = node
    elif fn == "log":
        outer = _binop("/", Num(1.0), u)
    elif fn == "sqrt":
        outer = _binop("/", Num(0.5), node)
    elif fn == "abs":
        outer = Call("sign", (u,))
    elif fn == "sinh":
        outer = Call("cosh", (u,))
    elif fn == "cosh":
        outer = Call("sinh", (u,))
    elif fn == "tanh":
        outer = _binop("-", Num(1.0), _binop("^", node, Num(2.0)))
    elif fn == "sign":
        return Num(0.0)
    else:  # atan2(y, x)
        y, w = node.args
        num = _binop("-", _binop("*", w, _diff(y, var)), _binop("*", y, _diff(w, var)))
        den = _binop("+", _binop("^", y, Num(2.0)), _binop("^", w, Num(2.0)))
        return _binop("/", num, den)
    return _binop("*", outer, du)


# --------------------------------------------------------------------------
# code generation

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _unparse(node, parent=0) -> str:
    if isinstance(node, Num):
        s = repr(node.value)
        return f"({s})" if node.value < 0 and parent > 0 else s
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        s = "-" + _unparse(node.arg, _PREC["neg"])
        return f"({s})" if parent >= _PREC["neg"] else s
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        if node.op == "^":
            s = f"{_unparse(node.left, p + 1)}^{_unparse(node.right, p)}"
        else:
            s = f"{_unparse(node.left, p)} {node.op} {_unparse(node.right, p + 1)}"
        return f"({s})" if parent > p else s
    return f"{node.fn}({', '.join(_unparse(a) for a in node.args)})"


def _emit(node, mode: str) -> str:
    if isinstance(node, Num):
        return f"({node.value!r})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_emit(node.arg, mode)})"
    if isinstance(node, BinOp):
        a, b = _emit(node.left, mode), _emit(node.right, mode)
        if node.op == "/":
            return f"_div({a}, {b})"
        if node.op == "^":
            return f"_pow({a}, {b})"
        return f"({a} {node.op} {b})"
    fn = FUNCTIONS[node.fn][1 if mode == "np" else 2]
    return f"{fn}({', '.join(_emit(a, mode) for a in node.args)})"


def _mlog(v):
    if v <= 0:
        raise ExpressionDomainError("log of a non-positive number")
    return math.log(v)


def _msqrt(v):
    if v < 0:
        raise ExpressionDomainError("sqrt of a negative number")
    return math.sqrt(v)


def _msign(v):
    return (v > 0) - (v < 0)


def _sdiv(a, b):
    if b == 0:
        raise ExpressionDomainError("division by zero")
    return a / b


def _spow(a, b):
    try:
        r = a**b
    except ZeroDivisionError:
        raise ExpressionDomainError("zero raised to a negative power") from None
    if isinstance(r, complex):
        raise ExpressionDomainError("fractional power of a negative number")
    return r


class _VectorDomainError(Exception):
    def __init__(self, message, mask):
        self.message = message
        self.mask = mask


def _vdiv(a, b):
    zero = np.asarray(b) == 0
    if np.any(zero):
        raise _VectorDomainError("division by zero", zero)
    return np.divide(a, b)


def _vpow(a, b):
    return np.power(a, b)


_SCALAR_NS = {"math": math, "_mlog": _mlog, "_msqrt": _msqrt, "_msign": _msign,
              "_div": _sdiv, "_pow": _spow, "abs": abs}
_VECTOR_NS = {"np": np, "_div": _vdiv, "_pow": _vpow}


def _compile(tree, mode: str):
    body = _emit(tree, mode)
    ns = dict(_SCALAR_NS if mode == "math" else _VECTOR_NS)
    code = compile(f"lambda theta, x: {body}", f"<map-expression:{mode}>", "eval")
    return eval(code, ns)  # noqa: S307 - source generated from our own tree


# --------------------------------------------------------------------------
# public type


class MapExpression:
    """A parsed, fully bound expression in ``theta`` and ``x``.

    Calling the object evaluates it elementwise on arrays; ``scalar`` is the
    faster path for Python floats. Both report leaving the domain (division
    by zero, log of a non-positive number, ...) as
    :class:`ExpressionDomainError` naming the offending point.
    """

    def __init__(self, source: str, parameters: Mapping[str, float] | None = None, *, _tree=None):
        self.source = source
        self.parameters = dict(parameters or {})
        if _tree is None:
            _tree = _bind(_Parser(source).parse(), self.parameters)
        self.tree = _tree
        self._scalar = _compile(self.tree, "math")
        self._vector = _compile(self.tree, "np")

    def __repr__(self):
        return f"MapExpression({self.source!r}, {self.parameters!r})"

    def __str__(self):
        return _unparse(self.tree)

    def depends_on(self, name: str) -> bool:
        return _depends(self.tree, name)

    def scalar(self, theta: float, x: float) -> float:
        try:
            return self._scalar(theta, x)
        except ExpressionDomainError as exc:
            raise ExpressionDomainError(str(exc).split(" at ")[0], theta, x) from None
        except (OverflowError, ValueError) as exc:
            raise ExpressionDomainError(str(exc), theta, x) from None

    def __call__(self, theta, x):
        theta_arr = np.asarray(theta, dtype=float)
        x_arr = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(theta_arr.shape, x_arr.shape)
        try:
            with np.errstate(all="ignore"):
                out = self._vector(theta_arr, x_arr)
        except _VectorDomainError as exc:
            self._report(exc.message, np.broadcast_to(exc.mask, shape), theta_arr, x_arr)
        out = np.asarray(out, dtype=float)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).astype(float)
        if not np.all(np.isfinite(out)):
            self._report("expression is not finite", ~np.isfinite(out), theta_arr, x_arr)
        return out if out.ndim else float(out)

    @staticmethod
    def _report(message, bad, theta_arr, x_arr):
        idx = tuple(np.argwhere(bad)[0]) if bad.ndim else ()
        th, xv = np.broadcast_arrays(theta_arr, x_arr)
        raise ExpressionDomainError(message, float(th[idx]), float(xv[idx]), int(bad.sum()))

    def diff(self, var: str = "x") -> "MapExpression":
        """Symbolic partial derivative with respect to ``theta`` or ``x``."""
        if var not in VARIABLES:
            raise ValueError(f"can only differentiate with respect to {VARIABLES}")
        tree = _diff(self.tree, var)
        return MapExpression(_unparse(tree), {}, _tree=tree)


def parse_map_expression(source: str, parameters: Mapping[str, float] | None = None) -> MapExpression:
    """Parse ``source`` with the given parameter bindings."""
    return MapExpression(source, parameters)
