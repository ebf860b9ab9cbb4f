from __future__ import annotations

"""
Bộ phân tích biểu thức kiểu Pratt cho profile bán kính và trường vận tốc.

Ngữ pháp (thứ tự ưu tiên toàn phần, không có phép nhân ngầm):
    +, -      (10, kết hợp trái)
    *, /      (20, kết hợp trái)
    - đơn     (30)
    ^         (40, kết hợp phải)
Hàm: sin cos ln exp sqrt abs. Hằng: pi e. Biến: mặc định `r`, có thể thêm `theta`.
"""

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Tuple

import numpy as np

FUNCTIONS: Tuple[str, ...] = ("sin", "cos", "ln", "exp", "sqrt", "abs")
CONSTANTS: Dict[str, float] = {"pi": math.pi, "e": math.e}
BINARY_PRECEDENCE: Dict[str, int] = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
UNARY_PRECEDENCE = 30

_TOKEN_PATTERN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)
_OPERAND_START = ("number", "identifier", "(", "-", "+")


class ExpressionSyntaxError(ValueError):
    def __init__(self, message: str, position: int, expected: Iterable[str]) -> None:
        self.position = position
        self.expected = tuple(sorted(set(expected)))
        self.reason = message
        super().__init__(
            f"{message} at position {position} (expected one of: {', '.join(self.expected)})"
        )


class ExpressionDomainError(ValueError):
    """Evaluation left the domain of a function (ln of a non-positive value, ...)."""

    def __init__(self, operation: str, values: Mapping[str, float]) -> None:
        self.operation = operation
        self.values = dict(values)
        where = ", ".join(f"{name}={value:.6g}" for name, value in self.values.items())
        super().__init__(f"{operation} undefined at {where}")


class NotDifferentiableError(ValueError):
    """Raised by `differentiate` for nodes without a symbolic derivative (abs)."""


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # number | name | op | end
    text: str
    position: int


@dataclass(frozen=True, slots=True)
class Num:
    value: float


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True, slots=True)
class Call:
    func: str
    arg: "Node"


Node = Num | Var | Unary | Binary | Call


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN_PATTERN.match(text, pos)
        if match is None:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {text[start]!r}", start, _OPERAND_START)
        kind = match.lastgroup or ""
        start = match.start(kind)
        tokens.append(Token(kind, match.group(kind), start))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: FrozenSet[str]) -> None:
        self.tokens = tokenize(text)
        self.index = 0
        self.variables = variables

    @property
    def token(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        tok = self.tokens[self.index]
        if tok.kind != "end":
            self.index += 1
        return tok

    def lbp(self, tok: Token) -> int:
        if tok.kind == "op":
            return BINARY_PRECEDENCE.get(tok.text, 0)
        return 0

    def expect(self, text: str) -> None:
        tok = self.token
        if tok.kind != "op" or tok.text != text:
            raise ExpressionSyntaxError(f"expected {text!r}", tok.position, (text,))
        self.advance()

    def expression(self, rbp: int = 0) -> Node:
        left = self.nud(self.advance())
        while rbp < self.lbp(self.token):
            left = self.led(self.advance(), left)
        return left

    def nud(self, tok: Token) -> Node:
        if tok.kind == "number":
            return Num(float(tok.text))
        if tok.kind == "name":
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expression(0)
                self.expect(")")
                return Call(name, arg)
            if name in self.variables:
                return Var(name)
            if name in CONSTANTS:
                return Num(CONSTANTS[name])
            raise ExpressionSyntaxError(
                f"unknown identifier {name!r}",
                tok.position,
                tuple(self.variables) + FUNCTIONS + tuple(CONSTANTS),
            )
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        if tok.kind == "op" and tok.text in ("-", "+"):
            operand = self.expression(UNARY_PRECEDENCE)
            return operand if tok.text == "+" else Unary("-", operand)
        what = "end of input" if tok.kind == "end" else f"token {tok.text!r}"
        raise ExpressionSyntaxError(f"unexpected {what}", tok.position, _OPERAND_START)

    def led(self, tok: Token, left: Node) -> Node:
        op = tok.text
        if op == "^":
            # Right associative: 2^3^2 == 2^(3^2).
            return Binary(op, left, self.expression(BINARY_PRECEDENCE[op] - 1))
        return Binary(op, left, self.expression(BINARY_PRECEDENCE[op]))

    def parse(self) -> Node:
        root = self.expression(0)
        tok = self.token
        if tok.kind != "end":
            expected = tuple(BINARY_PRECEDENCE) + ("end of input",)
            if any(t.kind == "op" and t.text == "(" for t in self.tokens[: self.index]):
                expected += (")",)
            raise ExpressionSyntaxError(f"unexpected token {tok.text!r}", tok.position, expected)
        return root


def _fmt(value: float) -> str:
    text = repr(float(value))
    return f"({text})" if value < 0 else text


def to_text(node: Node) -> str:
    """Print a node as fully parenthesised text that reparses to the same tree."""
    if isinstance(node, Num):
        return _fmt(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.func}({to_text(node.arg)})"


def depends_on(node: Node, name: str) -> bool:
    if isinstance(node, Num):
        return False
    if isinstance(node, Var):
        return node.name == name
    if isinstance(node, Unary):
        return depends_on(node.operand, name)
    if isinstance(node, Binary):
        return depends_on(node.left, name) or depends_on(node.right, name)
    return depends_on(node.arg, name)


def _add(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and a.value == 0:
        return b
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Binary("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if isinstance(a, Num) and a.value == 0:
        return _neg(b)
    return Binary("-", a, b)


def _mul(a: Node, b: Node) -> Node:
    for x, y in ((a, b), (b, a)):
        if isinstance(x, Num):
            if x.value == 0:
                return Num(0.0)
            if x.value == 1:
                return y
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Binary("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and a.value == 0:
        return Num(0.0)
    if isinstance(b, Num) and b.value == 1:
        return a
    return Binary("/", a, b)


def _neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.value)
    return Unary("-", a)


def differentiate(node: Node, name: str) -> Node:
    """Symbolic derivative d(node)/d(name) with light constant folding."""
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == name else 0.0)
    if isinstance(node, Unary):
        return _neg(differentiate(node.operand, name))
    if isinstance(node, Binary):
        a, b = node.left, node.right
        da, db = differentiate(a, name), differentiate(b, name)
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if node.op == "/":
            return _div(_sub(_mul(da, b), _mul(a, db)), Binary("^", b, Num(2.0)))
        if not depends_on(b, name):
            return _mul(_mul(b, Binary("^", a, _sub(b, Num(1.0)))), da)
        # a^b = exp(b ln a)
        return _mul(node, _add(_mul(db, Call("ln", a)), _div(_mul(b, da), a)))
    arg = node.arg
    darg = differentiate(arg, name)
    if node.func == "sin":
        return _mul(Call("cos", arg), darg)
    if node.func == "cos":
        return _neg(_mul(Call("sin", arg), darg))
    if node.func == "ln":
        return _div(darg, arg)
    if node.func == "exp":
        return _mul(node, darg)
    if node.func == "sqrt":
        return _div(darg, _mul(Num(2.0), node))
    raise NotDifferentiableError(f"{node.func} has no symbolic derivative")


class _Evaluator:
    def __init__(self, values: Dict[str, np.ndarray]) -> None:
        self.values = values
        shapes = [v.shape for v in values.values()]
        self.shape = np.broadcast_shapes(*shapes) if shapes else ()

    def fail(self, operation: str, bad: np.ndarray) -> None:
        index = np.unravel_index(int(np.argmax(bad)), bad.shape) if bad.shape else ()
        where = {
            name: float(np.broadcast_to(value, self.shape)[index]) for name, value in self.values.items()
        }
        raise ExpressionDomainError(operation, where)

    def check(self, operation: str, bad: np.ndarray) -> None:
        if np.any(bad):
            self.fail(operation, np.broadcast_to(bad, self.shape))

    def __call__(self, node: Node) -> np.ndarray:
        if isinstance(node, Num):
            return np.full(self.shape, node.value)
        if isinstance(node, Var):
            return np.broadcast_to(self.values[node.name], self.shape).astype(float)
        if isinstance(node, Unary):
            return -self(node.operand)
        if isinstance(node, Binary):
            a, b = self(node.left), self(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                self.check("division by zero", b == 0)
                return a / b
            with np.errstate(all="ignore"):
                out = np.power(a, b)
            self.check("power", ~np.isfinite(out) & np.isfinite(a) & np.isfinite(b))
            return out
        x = self(node.arg)
        if node.func == "ln":
            self.check("ln", x <= 0)
            return np.log(x)
        if node.func == "sqrt":
            self.check("sqrt", x < 0)
            return np.sqrt(x)
        if node.func == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(x)
            self.check("exp overflow", ~np.isfinite(out))
            return out
        return {"sin": np.sin, "cos": np.cos, "abs": np.abs}[node.func](x)


@dataclass(frozen=True, slots=True)
class Expression:
    """Parsed expression over a fixed set of variables."""

    source: str
    root: Node
    variables: Tuple[str, ...]

    def evaluate(self, **values: float | np.ndarray) -> np.ndarray | float:
        missing = [name for name in self.variables if name not in values and depends_on(self.root, name)]
        if missing:
            raise KeyError(f"missing value for variable(s): {', '.join(missing)}")
        arrays = {name: np.asarray(values[name], dtype=float) for name in self.variables if name in values}
        result = _Evaluator(arrays)(self.root)
        return float(result) if result.ndim == 0 else result

    def __call__(self, *args: float | np.ndarray) -> np.ndarray | float:
        return self.evaluate(**dict(zip(self.variables, args)))

    def to_text(self) -> str:
        return to_text(self.root)

    def derivative(self, name: str | None = None) -> "Expression":
        name = name or self.variables[0]
        root = differentiate(self.root, name)
        return Expression(to_text(root), root, self.variables)

    def depends_on(self, name: str) -> bool:
        return depends_on(self.root, name)

    def as_callable(self) -> Callable[..., np.ndarray]:
        return self.__call__


def parse_expression(text: str, variables: Iterable[str] = ("r",)) -> Expression:
    names = tuple(variables)
    root = _Parser(text, frozenset(names)).parse()
    return Expression(text, root, names)
