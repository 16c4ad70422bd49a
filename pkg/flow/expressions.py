from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from core.exceptions import InvalidInitialData

_BIN_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY_OPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
}
NAMES = frozenset({"u", "x1", "y1", "x2", "y2", "s1", "s2", "s3", "L", "pi"})


def _check(node: ast.AST, text: str) -> set[str]:
    """Walk the tree once, rejecting anything outside the grammar; returns the free names."""
    if isinstance(node, ast.Expression):
        return _check(node.body, text)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return set()
    if isinstance(node, ast.Name):
        if node.id not in NAMES:
            raise InvalidInitialData(f"unknown name {node.id!r} in initial data", {"expression": text, "name": node.id})
        return {node.id}
    if isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
        return _check(node.left, text) | _check(node.right, text)
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
        return _check(node.operand, text)
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCTIONS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _check(node.args[0], text)
    raise InvalidInitialData(
        "unsupported construct in initial data expression",
        {"expression": text, "node": type(node).__name__},
    )


def _eval(node: ast.AST, env: Mapping[str, Any], text: str) -> Any:
    if isinstance(node, ast.Expression):
        return _eval(node.body, env, text)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.Call):
        assert isinstance(node.func, ast.Name)
        return _FUNCTIONS[node.func.id](_eval(node.args[0], env, text))
    try:
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.BinOp):
            return _BIN_OPS[type(node.op)](_eval(node.left, env, text), _eval(node.right, env, text))
        assert isinstance(node, ast.UnaryOp)
        return _UNARY_OPS[type(node.op)](_eval(node.operand, env, text))
    except (OverflowError, ZeroDivisionError) as exc:
        raise InvalidInitialData(
            f"initial data cannot be evaluated: {exc}",
            {"expression": text, "offset": node.col_offset},
        ) from exc


@dataclass(frozen=True)
class InitialData:
    text: str
    tree: ast.Expression
    names: frozenset[str]

    @property
    def is_constant(self) -> bool:
        return not (self.names - {"L", "pi"})

    def evaluate(self, env: Mapping[str, Any], shape: tuple[int, ...]) -> np.ndarray:
        missing = self.names - set(env)
        if missing:
            raise InvalidInitialData(
                f"initial data uses {sorted(missing)} which this grid does not provide",
                {"expression": self.text, "available": sorted(env)},
            )
        scope = dict(env)
        scope.setdefault("pi", math.pi)
        with np.errstate(all="ignore"):
            values = np.broadcast_to(np.asarray(_eval(self.tree, scope, self.text), dtype=float), shape).copy()
        if not np.all(np.isfinite(values)):
            raise InvalidInitialData("initial data is not finite on the grid", {"expression": self.text})
        return values


def parse_initial_data(text: str) -> InitialData:
    try:
        tree = ast.parse(text.strip() or "0", mode="eval")
    except SyntaxError as exc:
        raise InvalidInitialData(f"cannot parse initial data: {exc.msg}", {"expression": text}) from exc
    names = _check(tree, text)
    return InitialData(text=text, tree=tree, names=frozenset(names))
