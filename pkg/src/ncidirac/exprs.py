"""Parser and jet evaluator for the coordinate-expression mini-language.

Grammar: infix arithmetic with the usual precedence, right-associative `^`,
unary minus binding looser than `^`, and single-argument calls to the
elementary functions of :mod:`ncidirac.jets`.  `i` is the reserved imaginary
unit and `pi` the circle constant.  Every other identifier must be declared
up front as a variable or a parameter, so typos surface at parse time.
"""

import re
from dataclasses import dataclass

from .jets import FUNCTION_NAMES, Jet, JetDomainError, jfun, space


class ExprError(ValueError):
    def __init__(self, message, text=None, pos=None):
        if text is not None and pos is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.pos = pos


class EvalDomainError(ArithmeticError):
    """Evaluation left a function's domain; carries the offending subtree."""

    def __init__(self, message, node):
        super().__init__(f"{message} in subexpression {to_str(node)!r}")
        self.node = node


@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_RESERVED = {"i": 1j, "pi": 3.141592653589793}


class SymbolTable:
    """Declared names: variables (jet axes) and parameters (constants)."""

    def __init__(self, variables=(), parameters=()):
        self.variables = list(variables)
        self.parameters = list(parameters)
        clash = set(self.variables) & set(self.parameters)
        if clash:
            raise ExprError(f"names declared both variable and parameter: {sorted(clash)}")
        for name in list(self.variables) + list(self.parameters):
            if name in _RESERVED or name in FUNCTION_NAMES:
                raise ExprError(f"name {name!r} is reserved")
        self.known = set(self.variables) | set(self.parameters)


def _tokenize(text):
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ExprError(f"unexpected character {stripped[0]!r}", text, pos)
        if m.lastgroup == "num":
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text, symbols):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.symbols = symbols

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.next()
        if kind != "op" or val != op:
            raise ExprError(f"expected {op!r}", self.text, pos)

    def parse(self):
        if not self.tokens:
            raise ExprError("empty expression", self.text, 0)
        node = self.sum()
        kind, val, pos = self.peek()
        if kind is not None:
            raise ExprError(f"unexpected token {val!r}", self.text, pos)
        return node

    def sum(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.i += 1
                rhs = self.term()
                node = _fold(Bin(val, node, rhs))
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.i += 1
                node = _fold(Bin(val, node, self.unary()))
            else:
                return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.i += 1
            return _fold(Neg(self.unary()))
        if kind == "op" and val == "+":
            self.i += 1
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.i += 1
            return _fold(Bin("^", base, self.unary()))  # right-assoc, signed exponent ok
        return base

    def atom(self):
        kind, val, pos = self.next()
        if kind == "num":
            return Num(complex(val))
        if kind == "op" and val == "(":
            node = self.sum()
            self.expect_op(")")
            return node
        if kind == "name":
            if val in FUNCTION_NAMES:
                self.expect_op("(")
                arg = self.sum()
                self.expect_op(")")
                return Call(val, arg)
            if val in _RESERVED:
                return Num(complex(_RESERVED[val]))
            if val not in self.symbols.known:
                raise ExprError(f"unknown identifier {val!r}", self.text, pos)
            return Sym(val)
        raise ExprError(f"unexpected token {val!r}", self.text, pos)


def _fold(node):
    """Collapse constant subtrees so printed literals re-parse to one Num."""
    if isinstance(node, Neg) and isinstance(node.arg, Num):
        return Num(-node.arg.value)
    if isinstance(node, Bin) and isinstance(node.left, Num) and isinstance(node.right, Num):
        a, b = node.left.value, node.right.value
        try:
            if node.op == "+":
                return Num(a + b)
            if node.op == "-":
                return Num(a - b)
            if node.op == "*":
                return Num(a * b)
            if node.op == "/":
                return Num(a / b)
            if node.op == "^" and b.imag == 0 and b.real == int(b.real):
                return Num(a ** int(b.real))
        except (ZeroDivisionError, OverflowError):
            return node
    return node


def parse(text, symbols):
    """Parse an expression against a symbol table; raises ExprError."""
    return _Parser(text, symbols).parse()


def to_str(node):
    """Print an AST back to parseable text (parenthesized conservatively)."""
    if isinstance(node, Num):
        v = node.value
        if v.imag == 0:
            r = v.real
            return str(int(r)) if r == int(r) and abs(r) < 1e15 else repr(r)
        if v == 1j:
            return "i"
        real = to_str(Num(complex(v.real)))
        imag = to_str(Num(complex(v.imag)))
        return f"({imag}*i)" if v.real == 0 else f"({real} + {imag}*i)"
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_str(node.arg)})"
    if isinstance(node, Bin):
        return f"({to_str(node.left)} {node.op} {to_str(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({to_str(node.arg)})"
    raise TypeError(f"not an AST node: {node!r}")


def eval_jet(node, env):
    """Evaluate an AST in an environment mapping names to jets or scalars."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Sym):
        return env[node.name]
    if isinstance(node, Neg):
        return -eval_jet(node.arg, env)
    if isinstance(node, Bin):
        a = eval_jet(node.left, env)
        b = eval_jet(node.right, env)
        try:
            if node.op == "+":
                r = a + b
            elif node.op == "-":
                r = a - b
            elif node.op == "*":
                r = a * b
            elif node.op == "/":
                r = a / b
            else:
                r = a**b
        except (JetDomainError, ZeroDivisionError) as exc:
            raise EvalDomainError(str(exc), node) from exc
        return _check_finite(r, node)
    if isinstance(node, Call):
        arg = eval_jet(node.arg, env)
        try:
            r = jfun(node.fn, arg)
        except JetDomainError as exc:
            raise EvalDomainError(str(exc), node) from exc
        return _check_finite(r, node)
    raise TypeError(f"not an AST node: {node!r}")


def _check_finite(r, node):
    import numpy as np

    coeffs = r.coeffs if isinstance(r, Jet) else np.asarray([r])
    if not np.all(np.isfinite(coeffs.view(float) if coeffs.dtype.kind == "c" else coeffs)):
        raise EvalDomainError("non-finite result", node)
    return r


class CompiledExpr:
    """An expression bound to a symbol table, evaluable at jet points."""

    def __init__(self, text, symbols):
        self.text = text
        self.symbols = symbols
        self.ast = parse(text, symbols)

    def __call__(self, point, params, order):
        """point: sequence of base values for symbols.variables."""
        n = len(self.symbols.variables)
        sp = space(n, order)
        env = {
            name: Jet.variable(sp, k, complex(point[k]))
            for k, name in enumerate(self.symbols.variables)
        }
        for name in self.symbols.parameters:
            env[name] = complex(params[name])
        out = eval_jet(self.ast, env)
        if not isinstance(out, Jet):
            out = Jet.constant(sp, out)
        return out.lift(order) if out.space.order < order else out

    def eval_env(self, env):
        return eval_jet(self.ast, env)
