"""Small expression language for coefficient and terminal-condition functions.

Grammar (EBNF):

    expr    = term { ("+" | "-") term } ;
    term    = factor { ("*" | "/") factor } ;
    factor  = unary [ "^" factor ] ;              (* right-associative *)
    unary   = "-" unary | atom ;
    atom    = number | "t" | coordinate | call | "(" expr ")" ;
    coordinate = "x" digits ;                     (* x1 ... xd *)
    call    = name "(" [ expr { "," expr } ] ")" ;

Functions: exp, cos, sin, pospart (one argument); norm2() (squared norm of x);
phi_bump(k, alpha), psi_getoor(k, alpha) (numeric parameters, applied to x);
indicator_box(lo, hi) (1 if every coordinate of x lies in [lo, hi]).

Evaluation is vectorized: x may be a single point (d,) or a batch (n, d).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionError, EvaluationError, ParseError,
                     UnknownIdentifierError)
from .specfun import phi_bump as _phi_bump
from .specfun import psi_getoor_batch

# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class VarT:
    pass


@dataclass(frozen=True)
class VarX:
    index: int  # 1-based coordinate


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_UNARY_FUNCS = ("exp", "cos", "sin", "pospart")
_PARAM_FUNCS = ("phi_bump", "psi_getoor", "indicator_box")
_FUNC_ARITY = {**{f: 1 for f in _UNARY_FUNCS}, "norm2": 0,
               **{f: 2 for f in _PARAM_FUNCS}}

_TOKEN_RE = re.compile(r"""
    (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
  | (?P<ws>\s+)
""", re.VERBOSE)


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos,
                             expected=("number", "identifier", "operator"))
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, d: int):
        self.src = src
        self.d = d
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, value, offset = self.peek()
        if value != text:
            raise ParseError(f"expected {text!r}, found {value or 'end of input'!r}",
                             offset, expected=(text,))
        return self.advance()

    def parse(self):
        ast = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {value!r}", offset,
                             expected=("end of input",))
        return ast

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.unary()
        if self.peek()[1] == "^":
            self.advance()
            node = BinOp("^", node, self.factor())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        kind, value, offset = self.advance()
        if kind == "num":
            return Const(float(value))
        if value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if value == "t":
                return VarT()
            m = re.fullmatch(r"x(\d+)", value)
            if m:
                j = int(m.group(1))
                if not 1 <= j <= self.d:
                    raise DimensionError(
                        f"coordinate x{j} exceeds dimension d={self.d}")
                return VarX(j)
            if value in _FUNC_ARITY:
                return self.call(value, offset)
            raise UnknownIdentifierError(f"unknown identifier {value!r}", offset,
                                         expected=tuple(_FUNC_ARITY) + ("t", "x<j>"))
        raise ParseError(f"unexpected token {value or 'end of input'!r}", offset,
                         expected=("number", "identifier", "("))

    def call(self, name, offset):
        self.expect("(")
        args = []
        if self.peek()[1] != ")":
            args.append(self.expr())
            while self.peek()[1] == ",":
                self.advance()
                args.append(self.expr())
        self.expect(")")
        arity = _FUNC_ARITY[name]
        if len(args) != arity:
            raise ParseError(f"{name} takes {arity} argument(s), got {len(args)}",
                             offset, expected=(f"{arity} arguments",))
        if name in _PARAM_FUNCS:
            # parameters must be numeric (possibly negated) constants
            args = tuple(Const(_const_value(a, name, offset)) for a in args)
        return Call(name, tuple(args))


def _const_value(node, name, offset):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg):
        return -_const_value(node.arg, name, offset)
    raise ParseError(f"{name} parameters must be numeric constants", offset,
                     expected=("number",))


def parse_expression(src: str, d: int):
    """Parse ``src`` into an AST; coordinates are validated against ``d``."""
    if d < 1:
        raise DimensionError(f"dimension must be positive, got {d}")
    return _Parser(src, d).parse()


# --------------------------------------------------------------------------
# Pretty-printing (round-trips through parse_expression)
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(node, _prec=0) -> str:
    """Render an AST back to grammar text; re-parsing yields an equal AST."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, VarT):
        return "t"
    if isinstance(node, VarX):
        return f"x{node.index}"
    if isinstance(node, Neg):
        # unary minus binds tighter than every binary operator, so any BinOp
        # argument needs parentheses
        s = "-" + to_source(node.arg, 5)
        return f"({s})" if _prec > 3 else s
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        # left-assoc for + - * /, right-assoc for ^
        ls = to_source(node.left, p if node.op != "^" else p + 1)
        rs = to_source(node.right, p + 1 if node.op != "^" else p)
        s = f"{ls} {node.op} {rs}"
        return f"({s})" if _prec > p else s
    raise TypeError(f"not an AST node: {node!r}")


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def eval_expression(ast, t, x):
    """Evaluate at time t and point(s) x: x of shape (d,) gives a scalar,
    (n, d) gives an (n,) array.  t may be scalar or shape (n,)."""
    xa = np.asarray(x, dtype=float)
    batch = xa.ndim == 2
    pts = xa if batch else xa[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = _eval(ast, np.asarray(t, dtype=float), pts)
    val = np.broadcast_to(val, (pts.shape[0],))
    if not np.all(np.isfinite(val)):
        raise EvaluationError("expression evaluated to a non-finite value")
    return val.copy() if batch else float(val[0])


def _eval(node, t, pts):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, VarT):
        return t
    if isinstance(node, VarX):
        return pts[:, node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.arg, t, pts)
    if isinstance(node, BinOp):
        lv = _eval(node.left, t, pts)
        rv = _eval(node.right, t, pts)
        if node.op == "+":
            return lv + rv
        if node.op == "-":
            return lv - rv
        if node.op == "*":
            return lv * rv
        if node.op == "/":
            if np.any(rv == 0.0):
                raise EvaluationError("division by zero")
            return lv / rv
        lv = np.asarray(lv, dtype=float)
        rv = np.asarray(rv, dtype=float)
        if np.any((lv < 0.0) & (rv != np.floor(rv))):
            raise EvaluationError("negative base with non-integer exponent")
        return lv ** rv
    if isinstance(node, Call):
        return _eval_call(node, t, pts)
    raise TypeError(f"not an AST node: {node!r}")


def _eval_call(node, t, pts):
    name = node.name
    if name in _UNARY_FUNCS:
        v = _eval(node.args[0], t, pts)
        if name == "exp":
            return np.exp(v)
        if name == "cos":
            return np.cos(v)
        if name == "sin":
            return np.sin(v)
        return np.maximum(0.0, v)
    if name == "norm2":
        return np.sum(pts ** 2, axis=1)
    params = [a.value for a in node.args]
    if name == "phi_bump":
        return _phi_bump(int(params[0]), params[1], pts)
    if name == "psi_getoor":
        r2 = np.sum(pts ** 2, axis=1)
        return psi_getoor_batch(int(params[0]), params[1], pts.shape[1], r2)
    # indicator_box
    lo, hi = params
    return np.all((pts >= lo) & (pts <= hi), axis=1).astype(float)
