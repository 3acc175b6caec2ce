"""Scalar expression language for chart functions.

Expressions are small immutable trees over numeric literals, coordinate
variables ``x0 .. x{n-1}``, the binary operators ``+ - * / ^``, unary minus
and the functions ``sin cos exp log sqrt tanh``.  They are parsed from text,
evaluated in double precision and differentiated symbolically.

Precedence, tightest first: ``^`` (right associative), unary ``-``, ``* /``,
``+ -``.  So ``-x0^2`` is ``-(x0^2)`` and ``2^3^2`` is ``2^(3^2)``.

Evaluation goes through a compiled straight-line Python function; if that
raises, the tree interpreter re-runs the evaluation to report the offending
subexpression.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Mapping, Sequence

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "DomainError",
    "parse",
    "as_expr",
    "evaluate",
    "diff",
    "to_str",
    "compile_exprs",
    "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")


class ExprSyntaxError(ValueError):
    """Malformed expression text."""

    def __init__(self, message: str, offset: int, src: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.src = src


class UnknownIdentifierError(ExprSyntaxError):
    pass


class DomainError(ArithmeticError):
    """Evaluation left the real domain (pole, log of non-positive, ...)."""

    def __init__(self, message: str, subexpr: "Expr | None" = None):
        where = f" in '{to_str(subexpr)}'" if subexpr is not None else ""
        super().__init__(message + where)
        self.subexpr = subexpr


# ---------------------------------------------------------------------------
# Tree nodes
# ---------------------------------------------------------------------------


class Expr:
    """Base class of expression nodes.

    Nodes are immutable and hash structurally; the hash is computed once at
    construction so that large trees can be used as dictionary keys cheaply.
    """

    __slots__ = ("_hash",)

    def children(self) -> tuple["Expr", ...]:
        return ()

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Expr({to_str(self)!r})"

    def __str__(self) -> str:
        return to_str(self)

    # Operator sugar builds folded trees, used heavily by the geometry layer.
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    @property
    def is_zero(self) -> bool:
        return isinstance(self, Num) and self.value == 0.0

    @property
    def is_one(self) -> bool:
        return isinstance(self, Num) and self.value == 1.0

    def __call__(self, x: Sequence[float]) -> float:
        return evaluate(self, x)


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)
        self._hash = hash(("num", self.value))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return isinstance(other, Num) and other.value == self.value


class Var(Expr):
    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("coordinate index must be non-negative")
        self.index = int(index)
        self._hash = hash(("var", self.index))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return isinstance(other, Var) and other.index == self.index


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg
        self._hash = hash(("neg", arg._hash))

    def children(self):
        return (self.arg,)

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, Neg)
            and other._hash == self._hash
            and other.arg == self.arg
        )


class BinOp(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expr, right: Expr):
        if op not in "+-*/^" or len(op) != 1:
            raise ValueError(f"unknown operator {op!r}")
        self.op = op
        self.left = left
        self.right = right
        self._hash = hash((op, left._hash, right._hash))

    def children(self):
        return (self.left, self.right)

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, BinOp)
            and other._hash == self._hash
            and other.op == self.op
            and other.left == self.left
            and other.right == self.right
        )


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn not in FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        self.fn = fn
        self.arg = arg
        self._hash = hash(("call", fn, arg._hash))

    def children(self):
        return (self.arg,)

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, Call)
            and other._hash == self._hash
            and other.fn == self.fn
            and other.arg == self.arg
        )


ZERO = Num(0.0)
ONE = Num(1.0)
TWO = Num(2.0)


def as_expr(value) -> Expr:
    """Coerce numbers and expression text to an :class:`Expr`."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, float)):
        return Num(value)
    if isinstance(value, str):
        return parse(value)
    # numpy scalars
    try:
        return Num(float(value))
    except (TypeError, ValueError):
        raise TypeError(f"cannot convert {type(value).__name__} to Expr") from None


# ---------------------------------------------------------------------------
# Folding constructors.  Literal-only subtrees fold to a literal; additive and
# multiplicative identities are dropped so that derivative trees stay small.
# ---------------------------------------------------------------------------


def _fold(node: Expr) -> Expr:
    try:
        value = _interp(node, ())
    except DomainError:
        return node
    if not math.isfinite(value):
        return node
    return Num(value)


def add(a: Expr, b: Expr) -> Expr:
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if b.is_zero:
        return a
    if a.is_zero:
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if a.is_zero or b.is_zero:
        return ZERO
    if a.is_one:
        return b
    if b.is_one:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if isinstance(a, Num) and a.value == -1.0:
        return neg(b)
    if isinstance(b, Num) and b.value == -1.0:
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if b.is_one:
        return a
    if a.is_zero and not (isinstance(b, Num) and b.value == 0.0):
        return ZERO
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold(BinOp("/", a, b))
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if b.is_zero:
        return ONE
    if b.is_one:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold(BinOp("^", a, b))
    return BinOp("^", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def call(fn: str, a: Expr) -> Expr:
    node = Call(fn, a)
    if isinstance(a, Num):
        return _fold(node)
    return node


def total(terms: Iterable[Expr]) -> Expr:
    out = ZERO
    for t in terms:
        out = add(out, t)
    return out


# ---------------------------------------------------------------------------
# Parser: recursive descent over a token stream with byte offsets.
# ---------------------------------------------------------------------------

_PUNCT = "+-*/^()"


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    data = src.encode("utf-8")
    toks: list[tuple[str, str, int]] = []
    i = 0
    n = len(data)
    while i < n:
        c = chr(data[i])
        if c in " \t\r\n":
            i += 1
            continue
        if c in _PUNCT:
            toks.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and chr(data[i + 1]).isdigit()):
            j = i
            while j < n and (chr(data[j]).isdigit() or chr(data[j]) == "."):
                j += 1
            if j < n and chr(data[j]) in "eE":
                k = j + 1
                if k < n and chr(data[k]) in "+-":
                    k += 1
                if k < n and chr(data[k]).isdigit():
                    j = k
                    while j < n and chr(data[j]).isdigit():
                        j += 1
            text = data[i:j].decode()
            try:
                ok = math.isfinite(float(text))
            except ValueError:
                ok = False
            if not ok:
                raise ExprSyntaxError(f"malformed number {text!r}", i, src)
            toks.append(("num", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (chr(data[j]).isalnum() or chr(data[j]) == "_"):
                j += 1
            toks.append(("ident", data[i:j].decode(), i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i, src)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, src: str, dim: int | None, params: Mapping[str, float]):
        self.src = src
        self.toks = _tokenize(src)
        self.pos = 0
        self.dim = dim
        self.params = params

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: str):
        kind, text, off = self.peek()
        got = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"expected {expected}, got {got}", off, self.src)

    def parse(self) -> Expr:
        e = self.additive()
        if self.peek()[0] != "end":
            self.fail("operator or end of input")
        return e

    def additive(self) -> Expr:
        left = self.multiplicative()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            right = self.multiplicative()
            left = add(left, right) if op == "+" else sub(left, right)
        return left

    def multiplicative(self) -> Expr:
        left = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            right = self.unary()
            node = BinOp(op, left, right)
            left = _fold(node) if isinstance(left, Num) and isinstance(right, Num) else node
        return left

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            # right operand binds at unary level: x^-1 and 2^3^2 both parse
            exponent = self.unary()
            node = BinOp("^", base, exponent)
            if isinstance(base, Num) and isinstance(exponent, Num):
                return _fold(node)
            return node
        return base

    def primary(self) -> Expr:
        kind, text, off = self.peek()
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "op" and text == "(":
            self.take()
            e = self.additive()
            if self.peek()[:2] != ("op", ")"):
                self.fail("')'")
            self.take()
            return e
        if kind == "ident":
            self.take()
            if text in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    self.fail(f"'(' after {text}")
                self.take()
                arg = self.additive()
                if self.peek()[:2] != ("op", ")"):
                    self.fail("')'")
                self.take()
                return call(text, arg)
            if text[0] == "x" and text[1:].isdigit():
                idx = int(text[1:])
                if self.dim is not None and idx >= self.dim:
                    raise UnknownIdentifierError(
                        f"coordinate {text} out of range for dimension {self.dim}",
                        off,
                        self.src,
                    )
                return Var(idx)
            if text in self.params:
                return Num(self.params[text])
            if text == "pi":
                return Num(math.pi)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", off, self.src)
        self.fail("number, coordinate, function or '('")


def parse(
    src: str, dim: int | None = None, params: Mapping[str, float] | None = None
) -> Expr:
    """Parse expression text.

    Args:
        src: expression source.
        dim: if given, coordinates ``x{i}`` with ``i >= dim`` are rejected.
        params: named constants substituted as literals (e.g. ``{"H": 1.0}``).

    Raises:
        ExprSyntaxError: with the byte offset of the offending token.
        UnknownIdentifierError: for names that are not coordinates, functions,
            ``pi`` or supplied parameters.
    """
    return _Parser(src, dim, params or {}).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _num_str(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v)) if v >= 0 else f"({int(v)})"
    s = repr(v)
    return s if v >= 0 else f"({s})"


def to_str(e: Expr) -> str:
    """Render with the minimal parentheses that re-parse to the same tree."""

    def go(node: Expr) -> tuple[str, int]:
        if isinstance(node, Num):
            return _num_str(node.value), 5
        if isinstance(node, Var):
            return f"x{node.index}", 5
        if isinstance(node, Call):
            return f"{node.fn}({go(node.arg)[0]})", 5
        if isinstance(node, Neg):
            s, p = go(node.arg)
            return ("-" + (s if p >= 4 else f"({s})")), 3
        assert isinstance(node, BinOp)
        p = _PREC[node.op]
        ls, lp = go(node.left)
        rs, rp = go(node.right)
        if node.op == "^":
            ls = ls if lp > p else f"({ls})"
            rs = rs if rp >= 3 else f"({rs})"
        else:
            ls = ls if lp >= p else f"({ls})"
            rs = rs if rp > p else f"({rs})"
        sep = f" {node.op} " if p == 1 else node.op
        return ls + sep + rs, p

    return go(e)[0]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _interp(e: Expr, x: Sequence[float]) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.index >= len(x):
            raise DomainError(f"coordinate x{e.index} not supplied", e)
        return float(x[e.index])
    if isinstance(e, Neg):
        return -_interp(e.arg, x)
    if isinstance(e, Call):
        a = _interp(e.arg, x)
        try:
            if e.fn == "sin":
                return math.sin(a)
            if e.fn == "cos":
                return math.cos(a)
            if e.fn == "exp":
                return math.exp(a)
            if e.fn == "tanh":
                return math.tanh(a)
            if e.fn == "log":
                if a <= 0.0:
                    raise DomainError("log of non-positive value", e)
                return math.log(a)
            if e.fn == "sqrt":
                if a < 0.0:
                    raise DomainError("sqrt of negative value", e)
                return math.sqrt(a)
        except (OverflowError, ValueError):
            raise DomainError(f"{e.fn} out of range", e) from None
        raise AssertionError(e.fn)
    assert isinstance(e, BinOp)
    a = _interp(e.left, x)
    b = _interp(e.right, x)
    if e.op == "+":
        r = a + b
    elif e.op == "-":
        r = a - b
    elif e.op == "*":
        r = a * b
    elif e.op == "/":
        if b == 0.0:
            raise DomainError("division by zero", e)
        r = a / b
    else:
        if a < 0.0 and b != int(b):
            raise DomainError("non-integer power of negative base", e)
        if a == 0.0 and b < 0.0:
            raise DomainError("negative power of zero", e)
        try:
            r = math.pow(a, b)
        except (OverflowError, ValueError):
            raise DomainError("power out of range", e) from None
    if not math.isfinite(r):
        raise DomainError("non-finite result", e)
    return r


def _codegen(exprs: Sequence[Expr]) -> str:
    lines = ["def _f(x):"]
    names: dict[Expr, str] = {}

    def emit(node: Expr) -> str:
        if isinstance(node, Num):
            return repr(node.value)
        if isinstance(node, Var):
            return f"x[{node.index}]"
        got = names.get(node)
        if got is not None:
            return got
        if isinstance(node, Neg):
            code = f"-{emit(node.arg)}"
        elif isinstance(node, Call):
            code = f"_{node.fn}({emit(node.arg)})"
        else:
            a = emit(node.left)
            b = emit(node.right)
            if node.op == "^":
                code = f"_pow({a}, {b})"
            else:
                code = f"{a} {node.op} {b}"
        name = f"t{len(names)}"
        names[node] = name
        lines.append(f"    {name} = {code}")
        return name

    outs = [emit(e) for e in exprs]
    lines.append(f"    return ({', '.join(outs)},)")
    return "\n".join(lines)


def _checked_log(a):
    if a <= 0.0:
        raise ValueError("log")
    return math.log(a)


_GLOBALS = {
    "_sin": math.sin,
    "_cos": math.cos,
    "_exp": math.exp,
    "_log": _checked_log,
    "_sqrt": math.sqrt,
    "_tanh": math.tanh,
    "_pow": math.pow,
}


def compile_exprs(exprs: Sequence[Expr]) -> Callable[[Sequence[float]], tuple]:
    """Compile several expressions into one function ``x -> tuple of floats``.

    Shared subtrees are computed once.  The returned function raises
    :class:`DomainError` exactly where :func:`evaluate` would.
    """
    exprs = tuple(exprs)
    namespace = dict(_GLOBALS)
    exec(compile(_codegen(exprs), "<expr>", "exec"), namespace)
    fast = namespace["_f"]
    isfinite = math.isfinite

    def f(x):
        try:
            out = fast(x)
        except (ZeroDivisionError, ValueError, OverflowError, IndexError):
            out = None
        # one sum is finite iff every term is, barring overflow; overflow only
        # costs a trip through the slow path
        if out is None or not isfinite(sum(out)):
            # slow path pins down the failing node
            return tuple(_interp(e, x) for e in exprs)
        return out

    return f


def evaluate(e: Expr, x: Sequence[float]) -> float:
    """Evaluate ``e`` at coordinates ``x`` (double precision).

    Raises:
        DomainError: division by zero, log of a non-positive value, sqrt of a
            negative value, non-integer power of a negative base, overflow.
    """
    return _interp(e, tuple(float(v) for v in x))


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------


def diff(e: Expr, idx: int) -> Expr:
    """Symbolic partial derivative with respect to coordinate ``x{idx}``."""
    memo: dict[Expr, Expr] = {}

    def d(node: Expr) -> Expr:
        got = memo.get(node)
        if got is not None:
            return got
        out = _d(node)
        memo[node] = out
        return out

    def _d(node: Expr) -> Expr:
        if isinstance(node, Num):
            return ZERO
        if isinstance(node, Var):
            return ONE if node.index == idx else ZERO
        if isinstance(node, Neg):
            return neg(d(node.arg))
        if isinstance(node, Call):
            u = node.arg
            du = d(u)
            if du.is_zero:
                return ZERO
            if node.fn == "sin":
                outer = call("cos", u)
            elif node.fn == "cos":
                outer = neg(call("sin", u))
            elif node.fn == "exp":
                outer = node
            elif node.fn == "log":
                return div(du, u)
            elif node.fn == "sqrt":
                return div(du, mul(TWO, node))
            else:  # tanh
                outer = sub(ONE, power(node, TWO))
            return mul(outer, du)
        assert isinstance(node, BinOp)
        u, v = node.left, node.right
        du, dv = d(u), d(v)
        if node.op == "+":
            return add(du, dv)
        if node.op == "-":
            return sub(du, dv)
        if node.op == "*":
            return add(mul(du, v), mul(u, dv))
        if node.op == "/":
            if dv.is_zero:
                return div(du, v)
            return div(sub(mul(du, v), mul(u, dv)), power(v, TWO))
        # power
        if dv.is_zero:
            if du.is_zero:
                return ZERO
            if isinstance(v, Num):
                return mul(mul(v, power(u, Num(v.value - 1.0))), du)
            return mul(mul(v, power(u, sub(v, ONE))), du)
        # general case u^v (v non-constant): u^v * (v' log u + v u'/u)
        inner = mul(dv, call("log", u))
        if not du.is_zero:
            inner = add(inner, div(mul(v, du), u))
        return mul(node, inner)

    return d(e)


def free_vars(e: Expr) -> set[int]:
    out: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.index)
        stack.extend(node.children())
    return out


# ---------------------------------------------------------------------------
# Small symbolic matrix helpers (metric inverse, frame-change inverse)
# ---------------------------------------------------------------------------


def det(m: Sequence[Sequence[Expr]]) -> Expr:
    """Determinant by cofactor expansion along the first row, skipping zeros."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return sub(mul(m[0][0], m[1][1]), mul(m[0][1], m[1][0]))
    out = ZERO
    for j in range(n):
        if m[0][j].is_zero:
            continue
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = mul(m[0][j], det(minor))
        out = add(out, term) if j % 2 == 0 else sub(out, term)
    return out


def inverse(m: Sequence[Sequence[Expr]]) -> tuple[tuple[Expr, ...], ...]:
    """Matrix inverse as adjugate over determinant.

    Diagonal inputs produce reciprocal entries directly.
    """
    n = len(m)
    m = [list(row) for row in m]
    if all(m[i][j].is_zero for i in range(n) for j in range(n) if i != j):
        return tuple(
            tuple(div(ONE, m[i][i]) if i == j else ZERO for j in range(n))
            for i in range(n)
        )
    d = det(m)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            # (adj m)_{ij} = (-1)^{i+j} det(minor_{ji})
            minor = [r[:i] + r[i + 1 :] for k, r in enumerate(m) if k != j]
            c = det(minor) if n > 1 else ONE
            if (i + j) % 2:
                c = neg(c)
            row.append(div(c, d))
        out.append(tuple(row))
    return tuple(out)
