import pickle

import numpy as np
import pytest

from semidiscrete.errors import ExpressionError
from semidiscrete.expr import Expression


@pytest.mark.parametrize(
    "source, u, expected",
    [
        ("u^2", 3.0, 9.0),
        ("2*u", 1.5, 3.0),
        ("-u + 4", 1.0, 3.0),
        ("(u + 1)/2", 3.0, 2.0),
        ("exp(0)", 7.0, 1.0),
        ("sqrt(u)", 16.0, 4.0),
        ("log(exp(u))", 2.5, 2.5),
        ("2^3^2", 0.0, 512.0),
    ],
)
def test_evaluates(source, u, expected):
    assert Expression(source)(u) == pytest.approx(expected, rel=1e-15)


def test_constant_broadcasts_to_array():
    out = Expression("0.5")(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(out, [0.5, 0.5, 0.5])


@pytest.mark.parametrize(
    "source",
    ["__import__('os')", "x", "u.real", "u if u else 1", "[u]", "sin(u)", "u % 2",
     "exp(u, 2)", "'a'", "True", "lambda: 1", ""],
)
def test_rejects_outside_grammar(source):
    with pytest.raises(ExpressionError):
        Expression(source)


def test_pickles_by_source():
    e = pickle.loads(pickle.dumps(Expression("u^2 + 1")))
    assert e == Expression("u^2 + 1")
    assert e(2.0) == 5.0
