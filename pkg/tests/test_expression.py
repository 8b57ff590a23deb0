import math

import numpy as np
import pytest

from qpforce.expression import (
    ExpressionDomainError,
    ExpressionSyntaxError,
    UnboundNameError,
    parse_map_expression,
)

ARNOLD = "x + c + K/(2*pi)*sin(2*pi*x) + eps*sin(2*pi*theta)"


def test_translation():
    e = parse_map_expression("x + 0.25")
    assert e(0.1, 0.5) == 0.75
    assert e.scalar(0.1, 0.5) == 0.75


def test_arnold_at_origin():
    e = parse_map_expression(ARNOLD, {"c": 0.25, "K": 0.5, "eps": 0.3})
    assert e(0.0, 0.0) == pytest.approx(0.25, abs=1e-15)


def test_scalar_and_vector_paths_agree():
    e = parse_map_expression(ARNOLD, {"c": 0.25, "K": 0.5, "eps": 0.3})
    th = np.linspace(0, 1, 17)
    x = np.linspace(-2, 2, 17)
    vec = e(th, x)
    assert np.array_equal(vec, [e.scalar(a, b) for a, b in zip(th, x)])


def test_syntax_error_position():
    with pytest.raises(ExpressionSyntaxError) as err:
        parse_map_expression("x + + 1")
    assert err.value.position == 4


@pytest.mark.parametrize("src", ["x +", "(x", "sin x", "x 2", "sin(x, theta)", ""])
def test_malformed(src):
    with pytest.raises(ExpressionSyntaxError):
        parse_map_expression(src)


def test_unbound_name():
    with pytest.raises(UnboundNameError) as err:
        parse_map_expression("x + a")
    assert err.value.name == "a"


def test_power_precedence():
    e = parse_map_expression("-2^2 + 2**3**0")
    assert e(0.0, 0.0) == -4 + 2


def test_domain_error_names_point():
    e = parse_map_expression("x + 1/(theta - 0.5)")
    with pytest.raises(ExpressionDomainError) as err:
        e(np.array([0.1, 0.5]), np.array([0.0, 0.0]))
    assert err.value.theta == 0.5
    with pytest.raises(ExpressionDomainError):
        e.scalar(0.5, 0.0)
    with pytest.raises(ExpressionDomainError):
        parse_map_expression("log(x)").scalar(0.0, -1.0)


def test_derivative():
    e = parse_map_expression(ARNOLD, {"c": 0.25, "K": 0.5, "eps": 0.3})
    d = e.diff("x")
    x = np.linspace(0, 1, 33)
    assert np.allclose(d(0.3, x), 1 + 0.5 * np.cos(2 * np.pi * x), atol=1e-14)
    dt = e.diff("theta")
    assert dt.scalar(0.2, 0.0) == pytest.approx(0.3 * 2 * math.pi * math.cos(2 * math.pi * 0.2))


def test_depends_on():
    e = parse_map_expression("x + 0.1*sin(2*pi*theta)")
    assert e.depends_on("theta") and e.depends_on("x")
    assert not parse_map_expression("0.3 + 0.1*theta").depends_on("x")


def test_broadcast_constant_expression():
    e = parse_map_expression("0.5")
    assert np.array_equal(e(np.zeros(3), 0.0), [0.5, 0.5, 0.5])
