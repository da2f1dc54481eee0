"""Expression trees over named inputs, parsed from prefix s-expressions.

    >>> tree = parse("(sqrt (add (pow x 2) (pow y 2)))")
    >>> sorted(tree.inputs())
    ['x', 'y']
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ModelError

ARITY = {
    "add": (2, None),
    "mul": (2, None),
    "sub": (2, 2),
    "div": (2, 2),
    "neg": (1, 1),
    "sqrt": (1, 1),
    "pow": (2, 2),
}

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.:\-]*$")


@dataclass(frozen=True)
class Node:
    op: str  # "const", "ref" or one of ARITY
    args: tuple["Node", ...] = ()
    value: float | None = None
    name: str | None = None

    def inputs(self) -> list[str]:
        """Referenced input names in order of first appearance."""
        seen: list[str] = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.op == "ref" and node.name not in seen:
                seen.append(node.name)
            stack.extend(reversed(node.args))
        return seen

    def __str__(self):
        if self.op == "const":
            return repr(self.value)
        if self.op == "ref":
            return self.name
        if self.op == "pow":
            return f"(pow {self.args[0]} {int(self.args[1].value)})"
        return "(" + " ".join([self.op, *map(str, self.args)]) + ")"


def const(value: float) -> Node:
    return Node("const", value=float(value))


def ref(name: str) -> Node:
    return Node("ref", name=name)


def op(name: str, *args: Node) -> Node:
    return _checked(Node(name, tuple(args)))


def _checked(node: Node) -> Node:
    lo, hi = ARITY[node.op]
    n = len(node.args)
    if n < lo or (hi is not None and n > hi):
        raise ModelError(f"'{node.op}' takes {lo}{'' if hi == lo else '+'} arguments, got {n}", "parse-error")
    if node.op == "pow":
        exp = node.args[1]
        if exp.op != "const" or exp.value != int(exp.value):
            raise ModelError("pow exponent must be an integer literal", "parse-error")
    return node


def parse(text: str) -> Node:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ModelError("empty expression", "parse-error")
    pos = 0

    def parse_at():
        nonlocal pos
        if pos >= len(tokens):
            raise ModelError("unexpected end of expression", "parse-error")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens) or tokens[pos] in "()":
                raise ModelError(f"expected operator after '(' at token {pos}", "parse-error")
            name = tokens[pos]
            pos += 1
            if name not in ARITY:
                raise ModelError(f"unknown operator {name!r}", "parse-error")
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse_at())
            if pos >= len(tokens):
                raise ModelError("missing ')'", "parse-error")
            pos += 1
            return _checked(Node(name, tuple(args)))
        if tok == ")":
            raise ModelError(f"unexpected ')' at token {pos - 1}", "parse-error")
        try:
            return const(float(tok))
        except ValueError:
            pass
        if not _NAME.match(tok):
            raise ModelError(f"invalid symbol {tok!r}", "parse-error")
        return ref(tok)

    tree = parse_at()
    if pos != len(tokens):
        raise ModelError(f"trailing tokens after expression: {' '.join(tokens[pos:])}", "parse-error")
    return tree


def evaluate_columns(node: Node, columns: dict[str, np.ndarray], n_rows: int):
    """Vectorised evaluation.

    Returns ``(values, bad, singular)`` where ``bad`` marks rows that hit a
    domain error and ``singular`` marks rows where a square root was taken
    exactly at zero (value fine, derivative unbounded).
    """
    bad = np.zeros(n_rows, dtype=bool)
    singular = np.zeros(n_rows, dtype=bool)

    def ev(nd: Node) -> np.ndarray:
        if nd.op == "const":
            return np.full(n_rows, nd.value)
        if nd.op == "ref":
            return columns[nd.name]
        vals = [ev(a) for a in nd.args]
        if nd.op == "add":
            out = vals[0]
            for v in vals[1:]:
                out = out + v
            return out
        if nd.op == "mul":
            out = vals[0]
            for v in vals[1:]:
                out = out * v
            return out
        if nd.op == "sub":
            return vals[0] - vals[1]
        if nd.op == "neg":
            return -vals[0]
        if nd.op == "div":
            zero = vals[1] == 0
            bad[zero] = True
            return vals[0] / np.where(zero, 1.0, vals[1])
        if nd.op == "sqrt":
            neg = vals[0] < 0
            bad[neg] = True
            singular[vals[0] == 0] = True
            return np.sqrt(np.where(neg, 0.0, vals[0]))
        if nd.op == "pow":
            k = int(nd.args[1].value)
            base = vals[0]
            if k < 0:
                zero = base == 0
                bad[zero] = True
                base = np.where(zero, 1.0, base)
            return base**k
        raise ModelError(f"unknown operator {nd.op!r}")

    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(ev(node), dtype=float)
    bad |= ~np.isfinite(values)
    return values, bad, singular
