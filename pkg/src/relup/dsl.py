"""A small arithmetic expression language for limit states and predictions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?
    unary  := '-'? atom
    atom   := number | identifier | func '(' args ')' | '(' expr ')'

``^`` is right-associative and the unary minus binds tighter than ``^``,
so ``-2^2`` is 4.  ``pi`` is a constant.  Evaluation is vectorised over
numpy arrays.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

from . import kernels
from .limit_state import Leaf

__all__ = [
    "DslError", "DslSyntaxError", "UnknownFunctionError", "ArityError", "UnboundNameError",
    "Num", "Var", "Neg", "BinOp", "Call", "Node", "FUNCTIONS", "CONSTANTS",
    "parse_expression", "to_text", "evaluate", "free_variables", "compile_leaf",
]


class DslError(ValueError):
    """Error at a source position; ``line`` and ``col`` are 1-based."""

    kind = "error"

    def __init__(self, message: str, line: int = 0, col: int = 0, token: str = ""):
        self.message, self.line, self.col, self.token = message, line, col, token
        where = f" at line {line}, column {col}" if line else ""
        near = f" near {token!r}" if token else ""
        super().__init__(f"{self.kind}: {message}{where}{near}")


class DslSyntaxError(DslError):
    kind = "syntax error"


class UnknownFunctionError(DslError):
    kind = "unknown function"


class ArityError(DslError):
    kind = "wrong number of arguments"


class UnboundNameError(DslError, KeyError):
    kind = "unbound variable"

    def __str__(self):
        return ValueError.__str__(self)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]


def _phi(x):
    return kernels.norm_pdf(np.asarray(x, float))


def _Phi(x):
    return kernels.norm_cdf(np.asarray(x, float))


def _Phi_inv(p):
    p = np.asarray(p, float)
    inside = (p >= 0) & (p <= 1)
    return np.where(inside, kernels.norm_ppf(np.where(inside, p, 0.5)), np.nan)


def _fold(f):
    def g(*xs):
        out = xs[0]
        for x in xs[1:]:
            out = f(out, x)
        return out
    return g


# name -> (callable, min arity, max arity or None)
FUNCTIONS: dict[str, tuple[Callable, int, int | None]] = {
    "min": (_fold(np.minimum), 1, None),
    "max": (_fold(np.maximum), 1, None),
    "exp": (np.exp, 1, 1),
    "ln": (np.log, 1, 1),
    "sqrt": (np.sqrt, 1, 1),
    "abs": (np.abs, 1, 1),
    "phi": (_phi, 1, 1),
    "Phi": (_Phi, 1, 1),
    "Phi_inv": (_Phi_inv, 1, 1),
    "pow": (np.power, 2, 2),
}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError("unexpected character", line, pos - line_start + 1, text[pos])
        kind = m.lastgroup
        if kind == "ws":
            for i, ch in enumerate(m.group(), start=pos):
                if ch == "\n":
                    line, line_start = line + 1, i + 1
        else:
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("end", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None, cls=DslSyntaxError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.col, tok.text or "end of input")

    def take(self, text=None) -> Token:
        tok = self.tok
        if text is not None and tok.text != text:
            raise self.error(f"expected {text!r}")
        self.i += 1
        return tok

    def parse(self) -> Node:
        if self.tok.kind == "end":
            raise self.error("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error("unexpected token")
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.take().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        base = self.unary()
        if self.tok.text == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def unary(self):
        if self.tok.text == "-":
            self.take()
            return Neg(self.atom())
        return self.atom()

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.take()
            if self.tok.text != "(":
                return Var(tok.text)
            if tok.text not in FUNCTIONS:
                raise self.error(f"no function named {tok.text!r}", tok, UnknownFunctionError)
            self.take("(")
            args = []
            if self.tok.text != ")":
                args.append(self.expr())
                while self.tok.text == ",":
                    self.take()
                    args.append(self.expr())
            self.take(")")
            _, lo, hi = FUNCTIONS[tok.text]
            if len(args) < lo or (hi is not None and len(args) > hi):
                want = str(lo) if lo == hi else f"at least {lo}"
                raise self.error(f"{tok.text} takes {want} argument(s), got {len(args)}", tok, ArityError)
            return Call(tok.text, tuple(args))
        if tok.text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        raise self.error("expected a number, name or '('")


def parse_expression(text: str) -> Node:
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _num_text(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def to_text(node: Node) -> str:
    """Print with the fewest parentheses that reparse to the same tree."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = node.operand
        atomic = isinstance(inner, (Num, Var, Call))
        return "-" + (to_text(inner) if atomic else f"({to_text(inner)})")
    p = _PREC[node.op]
    if node.op == "^":
        # base is a unary, exponent a factor
        left = to_text(node.left) if isinstance(node.left, (Num, Var, Call, Neg)) else f"({to_text(node.left)})"
        r = node.right
        right_ok = isinstance(r, (Num, Var, Call, Neg)) or (isinstance(r, BinOp) and r.op == "^")
        right = to_text(r) if right_ok else f"({to_text(r)})"
        return f"{left}^{right}"
    left = to_text(node.left)
    if isinstance(node.left, BinOp) and _PREC[node.left.op] < p:
        left = f"({left})"
    right = to_text(node.right)
    if isinstance(node.right, BinOp) and _PREC[node.right.op] <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return set() if node.name in CONSTANTS else {node.name}
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        return set().union(*(free_variables(a) for a in node.args))
    return set()


def evaluate(node: Node, env: Mapping[str, object]):
    """Value of ``node`` with variables from ``env`` (scalars or arrays)."""
    with np.errstate(all="ignore"):
        return _eval(node, env)


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        raise UnboundNameError(f"no value for {node.name!r}", token=node.name)
    if isinstance(node, Neg):
        return -np.asarray(_eval(node.operand, env), float)
    if isinstance(node, Call):
        return FUNCTIONS[node.func][0](*(np.asarray(_eval(a, env), float) for a in node.args))
    a = np.asarray(_eval(node.left, env), float)
    b = np.asarray(_eval(node.right, env), float)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return np.true_divide(a, b)
    return np.power(a, b)


def compile_leaf(text: str | Node, bindings: Mapping[str, float] | None = None, label: str = "") -> Leaf:
    """Limit state leaf evaluating an expression.

    ``bindings`` fixes names that are not random variables (such as a
    cycle count); the remaining free names become the leaf's variables.
    """
    node = parse_expression(text) if isinstance(text, str) else text
    fixed = {k: float(v) for k, v in (bindings or {}).items()}
    names = tuple(sorted(free_variables(node) - set(fixed)))

    def func(env):
        out = evaluate(node, {**env, **fixed})
        out = np.asarray(out, float)
        return out if out.ndim else float(out)

    return Leaf(func, names, label or (text if isinstance(text, str) else to_text(node)))
