"""Expression language for nonlinearities h(t, u, v) and weights g(s).

Grammar (``^`` is right-associative and binds tighter than unary minus;
implicit multiplication and unary plus are rejected)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | CONST | VAR | FUNC "(" expr ("," expr)* ")" | "(" expr ")"

Functions: sin cos tan exp log sqrt abs (one argument), min max (two or
more).  Constants: pi, e.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from .errors import EvaluationError, ParseError

STATE_VARS = ("t", "u", "v")
WEIGHT_VARS = ("s",)

_UNARY_FUNCS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
_VARIADIC_FUNCS = ("min", "max")
FUNCTIONS = _UNARY_FUNCS + _VARIADIC_FUNCS
CONSTANTS = {"pi": math.pi, "e": math.e}


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


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
    name: str
    args: tuple


Node = Union[Num, Const, Var, Neg, BinOp, Call]


# --- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | op | end
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos, source=src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


_OPERAND_START = ("number", "identifier", "(", "-")


class _Parser:
    def __init__(self, src: str, variables: Iterable[str]):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables = tuple(variables)

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _fail(self, message, expected=()):
        raise ParseError(message, self.tok.offset, expected, self.src)

    def _describe(self, tok: _Token) -> str:
        return "end of input" if tok.kind == "end" else f"{tok.text!r}"

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail(
                f"unexpected {self._describe(self.tok)}",
                ("+", "-", "*", "/", "^", "end of input"),
            )
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self._accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self._accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            name = tok.text
            if name in FUNCTIONS:
                return self._call(name, tok)
            if name in CONSTANTS:
                return Const(name)
            if name in self.variables:
                return Var(name)
            raise ParseError(
                f"unknown identifier {name!r}",
                tok.offset,
                (*self.variables, *CONSTANTS, *FUNCTIONS),
                self.src,
            )
        if self._accept("("):
            node = self.expr()
            if not self._accept(")"):
                self._fail(f"unexpected {self._describe(self.tok)}", (")",))
            return node
        self._fail(f"unexpected {self._describe(tok)}", _OPERAND_START)

    def _call(self, name: str, name_tok: _Token) -> Node:
        if not self._accept("("):
            self._fail(f"function {name!r} must be followed by '('", ("(",))
        args = [self.expr()]
        while self._accept(","):
            args.append(self.expr())
        if not self._accept(")"):
            self._fail(f"unexpected {self._describe(self.tok)}", (",", ")"))
        if name in _UNARY_FUNCS and len(args) != 1:
            raise ParseError(f"{name} takes exactly one argument", name_tok.offset, source=self.src)
        if name in _VARIADIC_FUNCS and len(args) < 2:
            raise ParseError(f"{name} takes at least two arguments", name_tok.offset, source=self.src)
        return Call(name, tuple(args))


# --- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def _fmt_num(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot print non-finite literal {x!r}")
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def to_source(node: Node) -> str:
    """Print an AST with the minimal parentheses that reparse to the same tree."""

    def wrap(child, ok):
        text = to_source(child)
        return text if ok else f"({text})"

    if isinstance(node, Num):
        text = _fmt_num(abs(node.value))
        return text if node.value >= 0 else f"(-{text})"
    if isinstance(node, (Const, Var)):
        return node.name
    if isinstance(node, Neg):
        return "-" + wrap(node.operand, _prec(node.operand) >= _NEG_PREC)
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    p = _PREC[node.op]
    if node.op == "^":
        left = wrap(node.left, _prec(node.left) > p)
        right = wrap(node.right, _prec(node.right) >= _NEG_PREC)
        return f"{left}^{right}"
    left = wrap(node.left, _prec(node.left) >= p)
    right = wrap(node.right, _prec(node.right) > p)
    return f"{left} {node.op} {right}"


# --- evaluation --------------------------------------------------------------

_SCALAR_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
    "min": min,
    "max": max,
}

_ARRAY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "min": lambda *a: _reduce(np.minimum, a),
    "max": lambda *a: _reduce(np.maximum, a),
}


def _reduce(fn, args):
    out = args[0]
    for a in args[1:]:
        out = fn(out, a)
    return out


def _eval_scalar(node: Node, env: dict, exact: bool):
    if isinstance(node, Num):
        return Fraction(node.value) if exact else node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval_scalar(node.operand, env, exact)
    if isinstance(node, Call):
        args = [_eval_scalar(a, env, exact) for a in node.args]
        if node.name == "log" and args[0] <= 0:
            raise EvaluationError(f"log of non-positive value {float(args[0])!r}")
        if node.name == "sqrt" and args[0] < 0:
            raise EvaluationError(f"sqrt of negative value {float(args[0])!r}")
        return _SCALAR_FUNCS[node.name](*args)
    a = _eval_scalar(node.left, env, exact)
    b = _eval_scalar(node.right, env, exact)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if b == 0:
            raise EvaluationError("division by zero")
        return a / b
    if a == 0 and b < 0:
        raise EvaluationError("zero raised to a negative power")
    if exact and isinstance(b, Fraction) and b.denominator != 1:
        a, b = float(a), float(b)
    result = a**b
    if isinstance(result, complex):
        raise EvaluationError(f"{float(a)!r} ^ {float(b)!r} is not real")
    return result


def _eval_array(node: Node, env: dict):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval_array(node.operand, env)
    if isinstance(node, Call):
        return _ARRAY_FUNCS[node.name](*(_eval_array(a, env) for a in node.args))
    a, b = _eval_array(node.left, env), _eval_array(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(np.asarray(b) == 0):
            raise EvaluationError("division by zero")
        return a / b
    return np.power(a, b)


@dataclass(frozen=True)
class NonlinearityExpr:
    """Parsed expression over a fixed tuple of variable names."""

    ast: Node
    variables: tuple = STATE_VARS

    def to_source(self) -> str:
        return to_source(self.ast)

    def __str__(self) -> str:
        return self.to_source()

    def free_variables(self) -> set:
        found = set()

        def walk(n):
            if isinstance(n, Var):
                found.add(n.name)
            elif isinstance(n, Neg):
                walk(n.operand)
            elif isinstance(n, BinOp):
                walk(n.left)
                walk(n.right)
            elif isinstance(n, Call):
                for a in n.args:
                    walk(a)

        walk(self.ast)
        return found

    def _env(self, args, kwargs):
        if len(args) > len(self.variables):
            raise TypeError(f"expected at most {len(self.variables)} positional values")
        env = dict(zip(self.variables, args))
        env.update(kwargs)
        missing = self.free_variables() - env.keys()
        if missing:
            raise TypeError(f"missing values for {sorted(missing)}")
        return env

    def __call__(self, *args, exact: bool = False, **kwargs):
        """Scalar evaluation; with ``exact=True`` literals become Fractions."""
        env = self._env(args, kwargs)
        try:
            value = _eval_scalar(self.ast, env, exact)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvaluationError(str(exc)) from exc
        if isinstance(value, Fraction):
            return value
        value = float(value)
        if not math.isfinite(value):
            raise EvaluationError(f"expression evaluated to {value!r}")
        return value

    def evaluate_array(self, *args, **kwargs) -> np.ndarray:
        """Vectorized evaluation; any non-finite or undefined value raises."""
        env = {k: np.asarray(v, dtype=float) for k, v in self._env(args, kwargs).items()}
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
        try:
            with np.errstate(divide="raise", invalid="raise", over="raise"):
                out = np.asarray(_eval_array(self.ast, env), dtype=float)
        except FloatingPointError as exc:
            raise EvaluationError(f"undefined value during evaluation: {exc}") from exc
        out = np.broadcast_to(out, shape).copy() if out.shape != shape else out
        if not np.all(np.isfinite(out)):
            raise EvaluationError("expression produced a non-finite value")
        return out

    def is_constant(self) -> bool:
        return not self.free_variables()


def parse(source: str, variables: Iterable[str] = STATE_VARS) -> NonlinearityExpr:
    """Parse ``source`` into an expression over ``variables``."""
    variables = tuple(variables)
    return NonlinearityExpr(_Parser(source, variables).parse(), variables)


def parse_weight(source: str) -> NonlinearityExpr:
    return parse(source, WEIGHT_VARS)


def _num(x: float) -> Node:
    return Num(float(x)) if x >= 0 else Neg(Num(-float(x)))


def shift_to_f(h: NonlinearityExpr, omega: float) -> NonlinearityExpr:
    """f(t, u, v) = h(t, u, v) + omega * v."""
    term = BinOp("*", Num(abs(float(omega))), Var("v"))
    op = "+" if omega >= 0 else "-"
    return NonlinearityExpr(BinOp(op, h.ast, term), h.variables)


def substitute(node: Node, mapping: dict) -> Node:
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Call):
        return Call(node.name, tuple(substitute(a, mapping) for a in node.args))
    return node


def _clamp_node(name: str, lo: float, hi: float) -> Node:
    return Call("min", (Call("max", (Var(name), _num(lo))), _num(hi)))


def clamp_extend(f: NonlinearityExpr, u_range, v_range) -> NonlinearityExpr:
    """Extend f off a box by freezing u, then v, at the nearest box face."""
    mapping = {}
    for name, (lo, hi) in (("u", u_range), ("v", v_range)):
        if not lo <= hi:
            raise ValueError(f"invalid range for {name}: [{lo}, {hi}]")
        mapping[name] = _clamp_node(name, lo, hi)
    return NonlinearityExpr(substitute(f.ast, mapping), f.variables)


# --- box extrema ---------------------------------------------------------------


@dataclass(frozen=True)
class Box3:
    t_range: tuple
    u_range: tuple
    v_range: tuple

    def __post_init__(self):
        for name, (lo, hi) in zip("tuv", self.ranges):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"invalid {name}-range [{lo}, {hi}]")

    @property
    def ranges(self) -> tuple:
        return (tuple(self.t_range), tuple(self.u_range), tuple(self.v_range))

    def as_dict(self) -> dict:
        return {"t": list(self.t_range), "u": list(self.u_range), "v": list(self.v_range)}


@dataclass(frozen=True)
class BoxExtremum:
    value: float
    point: tuple
    rigorous: bool = False


def _box_extremum(f: NonlinearityExpr, box: Box3, sense: str, grid: int, step_tol: float, starts: int):
    sign = 1.0 if sense == "max" else -1.0
    axes = [np.linspace(lo, hi, grid) if hi > lo else np.array([lo]) for lo, hi in box.ranges]
    T, U, V = np.meshgrid(*axes, indexing="ij")
    vals = sign * f.evaluate_array(T, U, V).ravel()
    order = np.argsort(-vals, kind="stable")[:starts]
    lows = np.array([r[0] for r in box.ranges])
    highs = np.array([r[1] for r in box.ranges])
    widths = highs - lows
    spacing = np.array([w / (grid - 1) if grid > 1 else w for w in widths])
    min_step = step_tol * np.maximum(widths, 1.0)

    def score(points):
        return sign * f.evaluate_array(points[:, 0], points[:, 1], points[:, 2])

    best_val, best_pt = -np.inf, None
    for idx in order:
        x = np.array([T.ravel()[idx], U.ravel()[idx], V.ravel()[idx]])
        fx = float(vals[idx])
        step = spacing.copy()
        while np.any((step >= min_step) & (widths > 0)):
            moved = False
            for d in range(3):
                if widths[d] == 0 or step[d] < min_step[d]:
                    continue
                probes = np.vstack([x, x])
                probes[0, d] = min(x[d] + step[d], highs[d])
                probes[1, d] = max(x[d] - step[d], lows[d])
                pv = score(probes)
                j = int(np.argmax(pv))
                if pv[j] > fx:
                    x, fx, moved = probes[j], float(pv[j]), True
            if not moved:
                step = step / 2
        if fx > best_val:
            best_val, best_pt = fx, x
    return BoxExtremum(sign * best_val, tuple(float(c) for c in best_pt))


def box_sup(f: NonlinearityExpr, box: Box3, grid: int = 41, step_tol: float = 1e-9, starts: int = 8) -> BoxExtremum:
    """Heuristic supremum over a box: dense grid, then coordinate descent.

    Not rigorous; callers must flag any bound derived from it.
    """
    return _box_extremum(f, box, "max", grid, step_tol, starts)


def box_inf(f: NonlinearityExpr, box: Box3, grid: int = 41, step_tol: float = 1e-9, starts: int = 8) -> BoxExtremum:
    """Heuristic infimum over a box (see :func:`box_sup`)."""
    return _box_extremum(f, box, "min", grid, step_tol, starts)
