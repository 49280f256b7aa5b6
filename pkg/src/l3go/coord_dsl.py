"""Restricted arithmetic programs that place a part's center.

A program is three assignments, one per axis, over numeric literals, the
base-part box quantities, the new part's dimensions, the four arithmetic
operators, unary minus, parentheses, and min/max/abs.  Repeated samples are
combined by a per-axis majority vote over rounded values.
"""

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .geometry import Aabb, Vec3


class DslError(Exception):
    """Base class for coordinate-program errors."""


class DslSyntaxError(DslError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class UnknownIdentifierError(DslSyntaxError):
    pass


class MissingAxisError(DslError):
    pass


class DuplicateAxisError(DslSyntaxError):
    pass


class UnboundIdentifierError(DslError):
    pass


class DivisionByZeroError(DslError):
    pass


class EmptyInputError(DslError):
    pass


BINDING_NAMES = tuple(
    [f"base.{w}.{a}" for w in ("min", "max", "center", "size") for a in ("x", "y", "z")]
    + [f"part.size.{a}" for a in ("x", "y", "z")]
)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str  # min, max (2-arity) or abs (1-arity)
    args: tuple["Expr", ...]


Expr = Union[Num, Ref, Neg, BinOp, Call]


@dataclass(frozen=True)
class CoordProgram:
    x: Expr
    y: Expr
    z: Expr


_TOKEN_RE = re.compile(
    r"(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)"
    r"|(?P<op>[-+*/(),=;])"
    r"|(?P<ws>[ \t]+)"
)

_FUNCS = {"min": 2, "max": 2, "abs": 1}


@dataclass
class _Token:
    kind: str  # number, ident, op, newline, eof
    text: str
    line: int
    col: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        pos = 0
        while pos < len(raw):
            m = _TOKEN_RE.match(raw, pos)
            if not m:
                raise DslSyntaxError(f"unexpected character {raw[pos]!r}", lineno, pos + 1)
            if m.lastgroup != "ws":
                tokens.append(_Token(m.lastgroup, m.group(), lineno, pos + 1))
            pos = m.end()
        tokens.append(_Token("newline", "\n", lineno, len(raw) + 1))
    tokens.append(_Token("eof", "", len(source.splitlines()) + 1, 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def error(self, message: str) -> DslSyntaxError:
        return DslSyntaxError(message, self.cur.line, self.cur.col)

    def skip_separators(self):
        while self.cur.kind == "newline" or (self.cur.kind == "op" and self.cur.text == ";"):
            self.advance()

    def parse_program(self) -> CoordProgram:
        axes: dict[str, Expr] = {}
        self.skip_separators()
        while self.cur.kind != "eof":
            tok = self.cur
            if tok.kind != "ident" or tok.text not in ("x", "y", "z"):
                raise self.error(f"expected axis assignment, got {tok.text!r}")
            if tok.text in axes:
                raise DuplicateAxisError(f"duplicate assignment to {tok.text}",
                                         tok.line, tok.col)
            axis = self.advance().text
            if not (self.cur.kind == "op" and self.cur.text == "="):
                raise self.error("expected '='")
            self.advance()
            axes[axis] = self.parse_expr()
            if self.cur.kind not in ("newline", "eof") and not (
                    self.cur.kind == "op" and self.cur.text == ";"):
                raise self.error(f"unexpected {self.cur.text!r} after expression")
            self.skip_separators()
        for axis in ("x", "y", "z"):
            if axis not in axes:
                raise MissingAxisError(f"no assignment for axis {axis}")
        return CoordProgram(x=axes["x"], y=axes["y"], z=axes["z"])

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.cur.kind == "op" and self.cur.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while self.cur.kind == "op" and self.cur.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.parse_factor())
        return node

    def parse_factor(self) -> Expr:
        tok = self.cur
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.parse_factor())
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            if tok.text in _FUNCS:
                return self.parse_call()
            if tok.text not in BINDING_NAMES:
                raise UnknownIdentifierError(f"unknown identifier {tok.text!r}",
                                             tok.line, tok.col)
            self.advance()
            return Ref(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.parse_expr()
            if not (self.cur.kind == "op" and self.cur.text == ")"):
                raise self.error("expected ')'")
            self.advance()
            return node
        raise self.error(f"unexpected {tok.text!r}")

    def parse_call(self) -> Expr:
        func = self.advance().text
        arity = _FUNCS[func]
        if not (self.cur.kind == "op" and self.cur.text == "("):
            raise self.error(f"expected '(' after {func}")
        self.advance()
        args = [self.parse_expr()]
        while self.cur.kind == "op" and self.cur.text == ",":
            self.advance()
            args.append(self.parse_expr())
        if not (self.cur.kind == "op" and self.cur.text == ")"):
            raise self.error("expected ')'")
        self.advance()
        if len(args) != arity:
            raise self.error(f"{func} takes {arity} argument(s), got {len(args)}")
        return Call(func, tuple(args))


def parse_program(source: str) -> CoordProgram:
    """Parse three axis assignments into an AST."""
    return _Parser(_tokenize(source)).parse_program()


def make_bindings(base: Aabb, part_size: Vec3) -> dict[str, float]:
    """Bind the base part's box quantities and the new part's dimensions."""
    center = base.center
    size = base.size
    values = {
        "base.min.x": base.min.x, "base.min.y": base.min.y, "base.min.z": base.min.z,
        "base.max.x": base.max.x, "base.max.y": base.max.y, "base.max.z": base.max.z,
        "base.center.x": center.x, "base.center.y": center.y, "base.center.z": center.z,
        "base.size.x": size.x, "base.size.y": size.y, "base.size.z": size.z,
        "part.size.x": part_size.x, "part.size.y": part_size.y, "part.size.z": part_size.z,
    }
    return values


def _eval_expr(expr: Expr, bindings: Mapping[str, float]) -> float:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Ref):
        if expr.name not in bindings:
            raise UnboundIdentifierError(f"unbound identifier {expr.name!r}")
        return float(bindings[expr.name])
    if isinstance(expr, Neg):
        return -_eval_expr(expr.operand, bindings)
    if isinstance(expr, BinOp):
        left = _eval_expr(expr.left, bindings)
        right = _eval_expr(expr.right, bindings)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if right == 0.0:
            raise DivisionByZeroError("division by zero")
        return left / right
    if isinstance(expr, Call):
        args = [_eval_expr(a, bindings) for a in expr.args]
        if expr.func == "min":
            return min(args)
        if expr.func == "max":
            return max(args)
        return abs(args[0])
    raise TypeError(f"not an expression node: {expr!r}")  # pragma: no cover


def eval_program(program: CoordProgram, bindings: Mapping[str, float]) -> Vec3:
    """Evaluate the three axis expressions; never returns a non-finite value."""
    for name in BINDING_NAMES:
        if name not in bindings:
            raise UnboundIdentifierError(f"missing binding {name!r}")
        if not math.isfinite(bindings[name]):
            raise UnboundIdentifierError(f"non-finite binding {name!r}")
    out = []
    for expr in (program.x, program.y, program.z):
        value = _eval_expr(expr, bindings)
        if not math.isfinite(value):
            raise DivisionByZeroError("expression overflowed to a non-finite value")
        out.append(value)
    return Vec3(*out)


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _print_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Ref):
        return expr.name
    if isinstance(expr, Neg):
        return f"-{_print_expr(expr.operand, 3)}"
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(_print_expr(a) for a in expr.args)})"
    prec = _PRECEDENCE[expr.op]
    # The right operand needs parentheses at equal precedence to survive
    # left-associative reparsing.
    text = f"{_print_expr(expr.left, prec)} {expr.op} {_print_expr(expr.right, prec + 1)}"
    if prec < parent_prec:
        return f"({text})"
    return text


def format_program(program: CoordProgram) -> str:
    """Print a program so that parsing it back yields an equal AST."""
    return "\n".join(f"{axis} = {_print_expr(getattr(program, axis))}"
                     for axis in ("x", "y", "z"))


@dataclass(frozen=True)
class VoteConfig:
    """How repeated coordinate samples are combined."""

    samples: int = 3
    decimals: int = 3

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


def _vote_axis(values: Sequence[float], decimals: int) -> float:
    counts: dict[float, int] = {}
    for v in values:
        key = round(v, decimals)
        counts[key] = counts.get(key, 0) + 1
    best = max(counts.values())
    winners = [k for k, n in counts.items() if n == best]
    if len(winners) != 1:
        return values[0]
    target = winners[0]
    for v in values:
        if round(v, decimals) == target:
            return v
    return values[0]  # pragma: no cover - a winner always has a representative


def majority_vote(samples: Sequence[Vec3], cfg: VoteConfig = VoteConfig()) -> Vec3:
    """Per-axis plurality over rounded values; ties fall back to the first sample."""
    if not samples:
        raise EmptyInputError("no samples to vote on")
    return Vec3(
        _vote_axis([s.x for s in samples], cfg.decimals),
        _vote_axis([s.y for s in samples], cfg.decimals),
        _vote_axis([s.z for s in samples], cfg.decimals),
    )
