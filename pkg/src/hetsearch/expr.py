"""Integer expression language for assertions and costs.

Expressions are parsed once into an immutable AST. Two evaluators exist:
``evaluate`` walks the tree with Python integers, and ``compile_vector``
turns the tree into a closure over numpy ``int64`` arrays so a whole batch
of candidate values is checked in one pass. Both use the same semantics:

* integer arithmetic confined to the signed 64-bit range (overflow raises),
* ``/`` and ``%`` truncate toward zero, like C,
* comparisons produce 1 or 0,
* ``&&``, ``||`` and ``!`` are min, max and complement over truth values,
  where any nonzero value counts as 1.

There is no short-circuiting; both operands of ``&&`` and ``||`` are always
evaluated so that the scalar and batch paths agree on errors.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

from .errors import EvalError, ParseError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

ARITH_OPS = ("add", "sub", "mul", "idiv", "mod", "pow")
CMP_OPS = ("lt", "le", "gt", "ge", "eq", "ne")
LOGIC_OPS = ("and", "or")
FUNCTIONS = {"min": 2, "max": 2, "abs": 1}


@dataclass(frozen=True, slots=True)
class Num:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    path: str


@dataclass(frozen=True, slots=True)
class Unary:
    op: str  # "neg" | "not"
    operand: "Expr"


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, Unary, Binary, Call]


# --------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<op>\|\||&&|==|!=|<=|>=|[<>+\-*/%!^(),])
    """,
    re.VERBOSE,
)

_BINOP_TOKENS = {
    "||": "or", "&&": "and",
    "==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge",
    "+": "add", "-": "sub", "*": "mul", "/": "idiv", "%": "mod", "^": "pow",
}
_CMP_TOKENS = ("==", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # "int" | "ident" | "op" | "end"
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte_pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", byte_pos)
        chunk = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, chunk, byte_pos))
        pos = m.end()
        byte_pos += len(chunk.encode("utf-8"))
    tokens.append(_Token("end", "", byte_pos))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.advance()
        if tok.text != text or tok.kind not in ("op",):
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.offset)
        return tok

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in ops

    def parse(self) -> Expr:
        e = self.or_expr()
        if isinstance(e, Num) and e.value > INT64_MAX:
            raise ParseError("integer literal out of 64-bit range", 0)
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected token {tok.text!r}", tok.offset)
        return e

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.at_op("||"):
            self.advance()
            e = Binary("or", e, self.and_expr())
        return e

    def and_expr(self) -> Expr:
        e = self.comparison()
        while self.at_op("&&"):
            self.advance()
            e = Binary("and", e, self.comparison())
        return e

    def comparison(self) -> Expr:
        e = self.additive()
        if self.at_op(*_CMP_TOKENS):
            op = self.advance()
            e = Binary(_BINOP_TOKENS[op.text], e, self.additive())
            if self.at_op(*_CMP_TOKENS):
                raise ParseError("chained comparison", self.peek().offset)
        return e

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.at_op("+", "-"):
            op = self.advance()
            e = Binary(_BINOP_TOKENS[op.text], e, self.multiplicative())
        return e

    def multiplicative(self) -> Expr:
        e = self.operand()
        while self.at_op("*", "/", "%"):
            op = self.advance()
            e = Binary(_BINOP_TOKENS[op.text], e, self.operand())
        return e

    def operand(self) -> Expr:
        # 2**63 is only legal as the magnitude of a negated literal
        offset = self.peek().offset
        e = self.unary()
        if isinstance(e, Num) and e.value > INT64_MAX:
            raise ParseError("integer literal out of 64-bit range", offset)
        return e

    def unary(self) -> Expr:
        if self.at_op("-"):
            tok = self.advance()
            operand = self.unary()
            if isinstance(operand, Num):
                # fold so that printed negative literals reparse to the same node
                return _checked_literal(-operand.value, tok.offset)
            return Unary("neg", operand)
        if self.at_op("!"):
            self.advance()
            return Unary("not", self.operand())
        return self.power()

    def power(self) -> Expr:
        start = self.peek().offset
        base = self.atom()
        if not self.at_op("^"):
            return base
        if isinstance(base, Num):
            _checked_literal(base.value, start)
        tok = self.advance()
        exponent = self.operand()
        if free_vars(exponent):
            raise ParseError("exponent must be a constant", tok.offset)
        try:
            value = evaluate(exponent, {})
        except EvalError as exc:
            raise ParseError(f"bad exponent: {exc}", tok.offset) from None
        if value < 0:
            raise ParseError("negative exponent", tok.offset)
        return Binary("pow", base, exponent)

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "int":
            value = int(tok.text)
            if value > INT64_MAX + 1:
                raise ParseError("integer literal out of 64-bit range", tok.offset)
            return Num(value)
        if tok.kind == "ident":
            if self.at_op("("):
                if tok.text not in FUNCTIONS:
                    raise ParseError(f"unknown function {tok.text!r}", tok.offset)
                self.advance()
                args = [self.or_expr()]
                while self.at_op(","):
                    self.advance()
                    args.append(self.or_expr())
                self.expect(")")
                if len(args) != FUNCTIONS[tok.text]:
                    raise ParseError(
                        f"{tok.text}() takes {FUNCTIONS[tok.text]} argument(s), got {len(args)}",
                        tok.offset,
                    )
                return Call(tok.text, tuple(args))
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            e = self.or_expr()
            self.expect(")")
            return e
        if tok.kind == "end":
            raise ParseError("unexpected end of input", tok.offset)
        raise ParseError(f"unexpected token {tok.text!r}", tok.offset)


def _checked_literal(value: int, offset: int) -> Num:
    if not INT64_MIN <= value <= INT64_MAX:
        raise ParseError("integer literal out of 64-bit range", offset)
    return Num(value)


def parse_expr(text: str) -> Expr:
    """Parse expression text into an AST.

    Precedence from loosest to tightest: ``||``, ``&&``, comparisons
    (non-associative), ``+ -``, ``* / %``, unary ``- !``, ``^`` (right
    associative, constant non-negative exponent).

    >>> parse_expr("x + 2*y <= 10")
    Binary(op='le', left=Binary(op='add', left=Var(path='x'), right=Binary(op='mul', left=Num(value=2), right=Var(path='y'))), right=Num(value=10))
    """
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Tree utilities

def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.path,))
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Unary):
        return free_vars(e.operand)
    if isinstance(e, Binary):
        return free_vars(e.left) | free_vars(e.right)
    out: frozenset[str] = frozenset()
    for a in e.args:
        out |= free_vars(a)
    return out


_OP_SYMBOLS = {v: k for k, v in _BINOP_TOKENS.items()}


def to_source(e: Expr) -> str:
    """Render ``e`` as text that parses back to an equal tree."""
    if isinstance(e, Num):
        return f"({e.value})" if e.value < 0 else str(e.value)
    if isinstance(e, Var):
        return e.path
    if isinstance(e, Unary):
        return "(" + ("-" if e.op == "neg" else "!") + f"({to_source(e.operand)}))"
    if isinstance(e, Binary):
        return f"({to_source(e.left)} {_OP_SYMBOLS[e.op]} {to_source(e.right)})"
    return f"{e.fn}({', '.join(to_source(a) for a in e.args)})"


def is_boolean_valued(e: Expr) -> bool:
    """True when ``e`` can only evaluate to 0 or 1."""
    if isinstance(e, Num):
        return e.value in (0, 1)
    if isinstance(e, Unary):
        return e.op == "not"
    if isinstance(e, Binary):
        return e.op in CMP_OPS or e.op in LOGIC_OPS
    return False


# --------------------------------------------------------------------------
# Scalar evaluation

def _fit(v: int) -> int:
    if not INT64_MIN <= v <= INT64_MAX:
        raise EvalError("integer overflow")
    return v


def _tdiv(a: int, b: int) -> int:
    if b == 0:
        raise EvalError("division by zero")
    q = abs(a) // abs(b)
    return _fit(-q if (a < 0) != (b < 0) else q)


def _tmod(a: int, b: int) -> int:
    if b == 0:
        raise EvalError("modulo by zero")
    r = abs(a) % abs(b)
    return -r if a < 0 else r


def _ipow(a: int, b: int) -> int:
    if b < 0:
        raise EvalError("negative exponent")
    if abs(a) > 1 and b >= 64:
        raise EvalError("integer overflow")
    return _fit(a**b)


def _truth(v: int) -> int:
    return 1 if v != 0 else 0


_SCALAR_BINARY: dict[str, Callable[[int, int], int]] = {
    "add": lambda a, b: _fit(a + b),
    "sub": lambda a, b: _fit(a - b),
    "mul": lambda a, b: _fit(a * b),
    "idiv": _tdiv,
    "mod": _tmod,
    "pow": _ipow,
    "lt": lambda a, b: int(a < b),
    "le": lambda a, b: int(a <= b),
    "gt": lambda a, b: int(a > b),
    "ge": lambda a, b: int(a >= b),
    "eq": lambda a, b: int(a == b),
    "ne": lambda a, b: int(a != b),
    "and": lambda a, b: min(_truth(a), _truth(b)),
    "or": lambda a, b: max(_truth(a), _truth(b)),
}


def evaluate(e: Expr, bindings: Mapping[str, int]) -> int:
    """Evaluate ``e`` with every free variable taken from ``bindings``."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return int(bindings[e.path])
        except KeyError:
            raise EvalError(f"unbound variable {e.path!r}") from None
    if isinstance(e, Unary):
        v = evaluate(e.operand, bindings)
        return _fit(-v) if e.op == "neg" else 1 - _truth(v)
    if isinstance(e, Binary):
        return _SCALAR_BINARY[e.op](evaluate(e.left, bindings), evaluate(e.right, bindings))
    args = [evaluate(a, bindings) for a in e.args]
    if e.fn == "abs":
        return _fit(abs(args[0]))
    return min(args) if e.fn == "min" else max(args)


def is_truthy(e: Expr, bindings: Mapping[str, int]) -> bool:
    return evaluate(e, bindings) != 0


# --------------------------------------------------------------------------
# Substitution with constant folding

def substitute(e: Expr, bindings: Mapping[str, int]) -> Expr:
    """Replace bound variables by literals and fold constant subtrees.

    Subtrees whose folding would raise (say, a literal division by zero) are
    left in place so the error still surfaces at evaluation time.
    """
    if isinstance(e, Num):
        return e
    if isinstance(e, Var):
        return Num(int(bindings[e.path])) if e.path in bindings else e
    if isinstance(e, Unary):
        return _fold(Unary(e.op, substitute(e.operand, bindings)))
    if isinstance(e, Binary):
        left = substitute(e.left, bindings)
        right = substitute(e.right, bindings)
        if e.op in LOGIC_OPS:
            simplified = _simplify_logic(e.op, left, right)
            if simplified is not None:
                return simplified
        return _fold(Binary(e.op, left, right))
    return _fold(Call(e.fn, tuple(substitute(a, bindings) for a in e.args)))


def _fold(e: Expr) -> Expr:
    if free_vars(e):
        return e
    try:
        return Num(evaluate(e, {}))
    except EvalError:
        return e


def _simplify_logic(op: str, left: Expr, right: Expr) -> Expr | None:
    for const, other in ((left, right), (right, left)):
        if not isinstance(const, Num) or isinstance(other, Num):
            continue
        # absorbing element: the other side no longer matters
        if (op == "and") == (const.value == 0):
            return Num(0 if op == "and" else 1)
        # identity element: only safe when the other side is already 0/1
        if is_boolean_valued(other):
            return other
    return None


# --------------------------------------------------------------------------
# Batch evaluation over int64 arrays

VectorFn = Callable[[Mapping[str, np.ndarray]], np.ndarray]


class _BatchError(Exception):
    def __init__(self, message: str, mask):
        super().__init__(message)
        self.message = message
        self.mask = mask


def _raise_if(mask, message: str) -> None:
    if mask.any():
        raise _BatchError(message, mask)


def _v_add(a, b):
    r = a + b
    _raise_if(((a ^ r) & (b ^ r)) < 0, "integer overflow")
    return r


def _v_sub(a, b):
    r = a - b
    _raise_if(((a ^ b) & (a ^ r)) < 0, "integer overflow")
    return r


_MUL_SAFE = 2.0**62


def _v_mul(a, b):
    r = a * b
    # float product is accurate to ~1e-16 relative; only near 2**63 do we need the exact test
    if (np.abs(a.astype(np.float64) * b) < _MUL_SAFE).all():
        return r
    safe_a = np.where(a == 0, 1, a)
    bad = (a != 0) & (r // safe_a != b)
    bad = bad | ((a == -1) & (b == INT64_MIN)) | ((b == -1) & (a == INT64_MIN))
    _raise_if(bad, "integer overflow")
    return r


def _v_idiv(a, b):
    _raise_if(b == 0, "division by zero")
    _raise_if((a == INT64_MIN) & (b == -1), "integer overflow")
    safe_b = np.where(b == 0, 1, b)
    q = a // safe_b
    adjust = (a % safe_b != 0) & ((a < 0) != (safe_b < 0))
    return q + adjust.astype(np.int64)


def _v_mod(a, b):
    _raise_if(b == 0, "modulo by zero")
    safe_b = np.where((b == 0) | (b == -1), 1, b)
    return np.where(b == -1, np.int64(0), np.fmod(a, safe_b))


def _v_pow(a, b):
    exps = np.unique(b)
    if exps.size != 1:
        raise _BatchError("exponent must be a constant", np.ones_like(b, dtype=bool))
    exp = int(exps[0])
    if exp < 0:
        raise _BatchError("negative exponent", b < 0)
    if exp >= 64:
        _raise_if(np.abs(a.astype(np.float64)) > 1, "integer overflow")
        return np.where((a == -1) & (exp % 2 == 1), np.int64(-1), np.abs(a))
    r = np.ones_like(a)
    for _ in range(exp):
        r = _v_mul(r, a)
    return r


def _cmp(fn):
    return lambda a, b: fn(a, b).astype(np.int64)


_VECTOR_BINARY = {
    "add": _v_add,
    "sub": _v_sub,
    "mul": _v_mul,
    "idiv": _v_idiv,
    "mod": _v_mod,
    "pow": _v_pow,
    "lt": _cmp(np.less),
    "le": _cmp(np.less_equal),
    "gt": _cmp(np.greater),
    "ge": _cmp(np.greater_equal),
    "eq": _cmp(np.equal),
    "ne": _cmp(np.not_equal),
    "and": lambda a, b: ((a != 0) & (b != 0)).astype(np.int64),
    "or": lambda a, b: ((a != 0) | (b != 0)).astype(np.int64),
}


def _v_neg(a):
    _raise_if(a == INT64_MIN, "integer overflow")
    return -a


def _v_abs(a):
    _raise_if(a == INT64_MIN, "integer overflow")
    return np.abs(a)


def _build(e: Expr) -> VectorFn:
    if isinstance(e, Num):
        const = np.asarray(e.value, dtype=np.int64)
        return lambda env: const
    if isinstance(e, Var):
        path = e.path

        def load(env):
            try:
                return env[path]
            except KeyError:
                raise EvalError(f"unbound variable {path!r}") from None

        return load
    if isinstance(e, Unary):
        inner = _build(e.operand)
        if e.op == "neg":
            return lambda env: _v_neg(inner(env))
        return lambda env: (inner(env) == 0).astype(np.int64)
    if isinstance(e, Binary):
        left, right, op = _build(e.left), _build(e.right), _VECTOR_BINARY[e.op]
        return lambda env: op(left(env), right(env))
    args = [_build(a) for a in e.args]
    if e.fn == "abs":
        return lambda env: _v_abs(args[0](env))
    reducer = np.minimum if e.fn == "min" else np.maximum
    return lambda env: reducer(args[0](env), args[1](env))


@functools.lru_cache(maxsize=4096)
def compile_vector(e: Expr) -> VectorFn:
    """Compile ``e`` into a function of ``{path: int64 array}``.

    Arrays broadcast, so scalars (0-d arrays) and equally sized batches can
    be mixed freely. Errors are raised as ``EvalError``; ``eval_batch``
    pinpoints the offending batch position.
    """
    return _build(e)


def eval_batch(fn: VectorFn, env: Mapping[str, np.ndarray], size: int) -> np.ndarray:
    """Run a compiled expression; raise ``EvalError`` naming the first bad index."""
    with np.errstate(all="ignore"):
        try:
            out = fn(env)
        except _BatchError as exc:
            mask = np.broadcast_to(exc.mask, (size,)) if np.ndim(exc.mask) else np.ones(size, bool)
            index = int(np.argmax(mask))
            err = EvalError(f"{exc.message} at batch index {index}")
            err.index = index
            err.reason = exc.message
            raise err from None
    return np.broadcast_to(out, (size,))


def eval_over_candidates(
    e: Expr,
    target: str,
    candidates,
    bindings: Mapping[str, int],
) -> np.ndarray:
    """Evaluate ``e`` once per candidate value of ``target``.

    Element ``i`` equals ``evaluate(e, {**bindings, target: candidates[i]})``.
    """
    cand = np.asarray(candidates, dtype=np.int64)
    env = {k: np.asarray(v, dtype=np.int64) for k, v in bindings.items()}
    env[target] = cand
    try:
        return np.array(eval_batch(compile_vector(e), env, cand.size))
    except EvalError as exc:
        if not hasattr(exc, "index"):
            raise
        raise EvalError(f"{exc.reason} for {target}={int(cand[exc.index])}") from None
