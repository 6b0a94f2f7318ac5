"""
Expression trees for coordinate functions and curvature profiles.

Grammar (a safe subset of Python expression syntax)::

    expr   := number | name | expr op expr | -expr | +expr | func(expr) | (expr)
    op     := +  -  *  /  **  ^          (``^`` is read as power)
    func   := sin cos exp log sqrt
    name   := the free variable (``t`` for curves, ``s`` for profiles) | pi | e

Expressions evaluate on floats, numpy arrays, or :class:`~helixlab.taylor.Taylor`
series, so one tree serves plain evaluation and forward-mode differentiation.
"""

import ast
import math
import operator

import numpy as np

from .errors import ExpressionError
from .taylor import Taylor

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}


def _dispatch(name):
    npf = getattr(np, name)

    def f(x):
        if isinstance(x, Taylor):
            return getattr(x, name)()
        return npf(x)

    f.__name__ = name
    return f


FUNCTIONS = {name: _dispatch(name) for name in ("sin", "cos", "exp", "log", "sqrt")}


class Expression:
    """A parsed expression in one free variable.

    Parameters
    ----------
    source : str
        Expression text, see the module docstring for the grammar.
    variable : str
        Name of the free variable.
    """

    def __init__(self, source, variable="t"):
        self.source = str(source)
        self.variable = variable
        text = self.source.replace("^", "**")
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.source!r}: {exc.msg}") from None
        self._fn = self._compile(tree.body)

    def _compile(self, node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            value = float(node.value)
            return lambda x: value
        if isinstance(node, ast.Name):
            if node.id == self.variable:
                return lambda x: x
            if node.id in _CONSTANTS:
                value = _CONSTANTS[node.id]
                return lambda x: value
            raise ExpressionError(f"unknown name {node.id!r} in {self.source!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = self._compile(node.left), self._compile(node.right)
            return lambda x: op(left(x), right(x))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = self._compile(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda x: -inner(x)
            return inner
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if node.func.id not in FUNCTIONS or len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"unsupported call {node.func.id!r} in {self.source!r}")
            f = FUNCTIONS[node.func.id]
            arg = self._compile(node.args[0])
            return lambda x: f(arg(x))
        raise ExpressionError(f"unsupported syntax {type(node).__name__} in {self.source!r}")

    def __call__(self, x):
        out = self._fn(x)
        if isinstance(out, Taylor):
            return out
        # constant expressions must still broadcast against the input
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy()

    def series(self, x0, order):
        """Taylor coefficients of the expression about each point of `x0`.

        Returns an array of shape ``(order + 1, *x0.shape)``.
        """
        x0 = np.asarray(x0, dtype=float)
        out = self._fn(Taylor.variable(x0, order))
        if isinstance(out, Taylor):
            return np.broadcast_to(out.c, (order + 1,) + x0.shape).copy()
        c = np.zeros((order + 1,) + x0.shape)
        c[0] = out
        return c

    def __repr__(self):
        return f"Expression({self.source!r}, variable={self.variable!r})"


def constant(value, variable="t"):
    return Expression(repr(float(value)), variable)
