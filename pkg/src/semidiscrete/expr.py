"""Tiny arithmetic grammar for user-supplied coefficient factors.

Accepted syntax: numeric literals, the variable ``u``, the binary operators
``+ - * / ^`` (``^`` is exponentiation), unary ``+``/``-``, parentheses and
the one-argument functions ``exp``, ``log`` and ``sqrt``.

Parsing is delegated to the :mod:`ast` module and the resulting tree is
checked against a whitelist before it is compiled, so no other Python
construct can be evaluated.
"""

import ast

import numpy as np

from .errors import ExpressionError

_FUNCTIONS = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.UAdd, ast.USub)


def _check(node, source):
    if isinstance(node, ast.Expression):
        _check(node.body, source)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"unsupported operator in {source!r}")
        _check(node.left, source)
        _check(node.right, source)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _UNARYOPS):
            raise ExpressionError(f"unsupported unary operator in {source!r}")
        _check(node.operand, source)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"non-numeric literal {node.value!r} in {source!r}")
    elif isinstance(node, ast.Name):
        if node.id != "u":
            raise ExpressionError(f"unknown name {node.id!r} in {source!r}")
    elif isinstance(node, ast.Call):
        if (
            not isinstance(node.func, ast.Name)
            or node.func.id not in _FUNCTIONS
            or len(node.args) != 1
            or node.keywords
        ):
            raise ExpressionError(f"unsupported function call in {source!r}")
        _check(node.args[0], source)
    else:
        raise ExpressionError(
            f"unsupported syntax {type(node).__name__} in {source!r}"
        )


class Expression:
    """A compiled coefficient factor ``u -> f(u)``.

    Instances are callable on scalars or numpy arrays and always return
    float64 with the shape of the input. They pickle by source text, which
    keeps them usable from process pools.

    >>> Expression("2*u^2")(3.0)
    18.0
    """

    def __init__(self, source):
        if not isinstance(source, str) or not source.strip():
            raise ExpressionError("expression must be a non-empty string")
        self.source = source.strip()
        try:
            tree = ast.parse(self.source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.source!r}: {exc.msg}") from None
        _check(tree, self.source)
        self._code = compile(tree, "<coefficient>", "eval")

    def __call__(self, u):
        arr = np.asarray(u, dtype=np.float64)
        with np.errstate(all="ignore"):
            out = eval(self._code, {"__builtins__": {}, **_FUNCTIONS}, {"u": arr})
        out = np.asarray(out, dtype=np.float64)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape).copy()
        if out.ndim == 0:
            return float(out)
        return out

    def __getstate__(self):
        return {"source": self.source}

    def __setstate__(self, state):
        self.__init__(state["source"])

    def __eq__(self, other):
        return isinstance(other, Expression) and other.source == self.source

    def __hash__(self):
        return hash(self.source)

    def __repr__(self):
        return f"Expression({self.source!r})"
