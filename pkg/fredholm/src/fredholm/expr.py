"""Complex-valued expressions for conformal maps, kernels and right-hand sides.

Grammar (whitespace insensitive)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := primary ('^' exponent)?
    exponent := '-'? INTEGER ('^' exponent)? | '(' exponent ')'
    primary  := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

``NUMBER`` accepts an ``i`` suffix (``2i``, ``1.5i``) and the bare name ``i`` is
the imaginary unit. Exponents are integers only, so evaluation and
differentiation never meet a branch cut.

Evaluation broadcasts over numpy arrays: bind ``t`` to a column and ``s`` to a
row and a kernel evaluates to the full matrix in one call.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError

FUNCTIONS = {"exp": np.exp, "sin": np.sin, "cos": np.cos}

TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?:i(?![A-Za-z0-9_]))?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()−])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Expression


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Pow:
    base: Expression
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: Expression


Expression = Const | Var | Neg | BinOp | Pow | Call
Environment = Mapping[str, "complex | float | np.ndarray"]

ZERO = Const(0j)
ONE = Const(1 + 0j)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        match = TOKEN_RE.match(text, pos)
        if match is None:
            raise ExpressionSyntaxError(text, pos, {"number", "name", "operator"})
        kind = match.lastgroup
        if kind != "ws":
            value = match.group()
            if kind == "op":
                value = value.replace("−", "-")
                kind = value
            tokens.append(_Token(kind, value, pos))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def _advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def _fail(self, expected: set[str]) -> ExpressionSyntaxError:
        return ExpressionSyntaxError(self.text, self.current.offset, expected)

    def _expect(self, kind: str) -> _Token:
        if self.current.kind != kind:
            raise self._fail({kind})
        return self._advance()

    def parse(self) -> Expression:
        tree = self.expr()
        if self.current.kind != "end":
            raise self._fail({"+", "-", "*", "/", "^", "end of input"})
        return tree

    def expr(self) -> Expression:
        node = self.term()
        while self.current.kind in ("+", "-"):
            op = self._advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.current.kind in ("*", "/"):
            op = self._advance().kind
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.current.kind == "-":
            self._advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.primary()
        if self.current.kind == "^":
            self._advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        if self.current.kind == "(":
            self._advance()
            value = self.exponent()
            self._expect(")")
            return value
        sign = 1
        if self.current.kind == "-":
            self._advance()
            sign = -1
        token = self.current
        if token.kind != "number" or not token.text.isdigit():
            raise self._fail({"integer"})
        self._advance()
        value = sign * int(token.text)
        if self.current.kind == "^":
            self._advance()
            upper = self.exponent()
            if upper < 0:
                raise ExpressionSyntaxError(self.text, token.offset, {"integer"})
            value = value**upper
        return value

    def primary(self) -> Expression:
        token = self.current
        if token.kind == "number":
            self._advance()
            if token.text.endswith("i"):
                return Const(complex(0.0, float(token.text[:-1])))
            return Const(complex(float(token.text), 0.0))
        if token.kind == "name":
            self._advance()
            if token.text in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(token.text, arg)
            if token.text == "i":
                return Const(1j)
            return Var(token.text)
        if token.kind == "(":
            self._advance()
            inner = self.expr()
            self._expect(")")
            return inner
        raise self._fail({"number", "name", "(", "-"})


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree. Raises ExpressionSyntaxError."""
    return _Parser(text).parse()


def variables(e: Expression) -> frozenset[str]:
    """Names of all free variables referenced by ``e``."""
    match e:
        case Const():
            return frozenset()
        case Var(name):
            return frozenset({name})
        case Neg(operand) | Pow(operand, _) | Call(_, operand):
            return variables(operand)
        case BinOp(_, left, right):
            return variables(left) | variables(right)
    raise TypeError(f"not an expression: {e!r}")


def _int_power(value, n: int):
    if n < 0:
        if np.any(value == 0):
            raise EvaluationError("division by zero in negative power")
        return 1.0 / _int_power(value, -n)
    result = np.ones_like(value) if isinstance(value, np.ndarray) else 1 + 0j
    base = value
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _eval(e: Expression, env: Mapping):
    match e:
        case Const(value):
            return value
        case Var(name):
            try:
                return env[name]
            except KeyError:
                raise EvaluationError(f"unbound variable {name!r}") from None
        case Neg(operand):
            return -_eval(operand, env)
        case BinOp(op, left, right):
            a = _eval(left, env)
            b = _eval(right, env)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if np.any(b == 0):
                raise EvaluationError("division by zero")
            return a / b
        case Pow(base, exponent):
            return _int_power(_eval(base, env), exponent)
        case Call(func, arg):
            return FUNCTIONS[func](_eval(arg, env))
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expression, env: Environment):
    """Evaluate ``e`` with complex arithmetic.

    Scalar bindings give a Python ``complex``; array bindings give a complex
    ndarray with the broadcast shape of all bindings (constants included).
    """
    prepared: dict[str, complex | np.ndarray] = {}
    for name, value in env.items():
        if np.ndim(value) == 0:
            prepared[name] = complex(value)
        else:
            prepared[name] = np.asarray(value, dtype=np.complex128)
    shape = np.broadcast_shapes(*(np.shape(v) for v in prepared.values())) if prepared else ()
    with np.errstate(all="ignore"):
        result = _eval(e, prepared)
    if shape == ():
        return complex(result)
    return np.broadcast_to(np.asarray(result, dtype=np.complex128), shape).copy()


def _add(a: Expression, b: Expression) -> Expression:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return BinOp("+", a, b)


def _sub(a: Expression, b: Expression) -> Expression:
    if b == ZERO:
        return a
    if a == ZERO:
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a: Expression, b: Expression) -> Expression:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return BinOp("*", a, b)


def differentiate(e: Expression, var: str) -> Expression:
    """Symbolic derivative of ``e`` with respect to ``var``."""
    match e:
        case Const():
            return ZERO
        case Var(name):
            return ONE if name == var else ZERO
        case Neg(operand):
            d = differentiate(operand, var)
            return ZERO if d == ZERO else Neg(d)
        case BinOp("+", left, right):
            return _add(differentiate(left, var), differentiate(right, var))
        case BinOp("-", left, right):
            return _sub(differentiate(left, var), differentiate(right, var))
        case BinOp("*", left, right):
            return _add(
                _mul(left, differentiate(right, var)),
                _mul(differentiate(left, var), right),
            )
        case BinOp("/", left, right):
            dl = differentiate(left, var)
            dr = differentiate(right, var)
            if dr == ZERO:
                return ZERO if dl == ZERO else BinOp("/", dl, right)
            return BinOp("/", _sub(_mul(dl, right), _mul(left, dr)), Pow(right, 2))
        case Pow(base, exponent):
            if exponent == 0:
                return ZERO
            outer = Const(complex(exponent)) if exponent == 1 else _mul(
                Const(complex(exponent)), Pow(base, exponent - 1)
            )
            return _mul(outer, differentiate(base, var))
        case Call(func, arg):
            inner = differentiate(arg, var)
            if func == "exp":
                outer: Expression = e
            elif func == "sin":
                outer = Call("cos", arg)
            else:
                outer = Neg(Call("sin", arg))
            return _mul(outer, inner)
    raise TypeError(f"not an expression: {e!r}")


def _const_text(value: complex) -> str:
    re_part, im_part = value.real, value.imag
    if im_part == 0:
        text = repr(re_part)
        return f"({text})" if re_part < 0 or text.startswith("-") else text
    if re_part == 0:
        return f"({im_part!r}i)" if im_part < 0 else f"{im_part!r}i"
    sign = "-" if im_part < 0 else "+"
    return f"({re_part!r}{sign}{abs(im_part)!r}i)"


def to_text(e: Expression) -> str:
    """Fully parenthesised text that parses back to an equivalent tree."""
    match e:
        case Const(value):
            return _const_text(value)
        case Var(name):
            return name
        case Neg(operand):
            return f"(-{to_text(operand)})"
        case BinOp(op, left, right):
            return f"({to_text(left)} {op} {to_text(right)})"
        case Pow(base, exponent):
            return f"{to_text(base) if isinstance(base, Var) else '(' + to_text(base) + ')'}^{exponent}"
        case Call(func, arg):
            return f"{func}({to_text(arg)})"
    raise TypeError(f"not an expression: {e!r}")
