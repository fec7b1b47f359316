"""
Scalar coefficient expressions in one variable x: a tokenizer, a
precedence-climbing parser, numpy evaluation and a printer whose output
parses back to the same tree.

Grammar: real literals, x, binary + - * /, unary -, parentheses and the
functions sin, cos, exp.
"""
import re
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

FUNCTIONS = {'sin': np.sin, 'cos': np.cos, 'exp': np.exp}
# Binding power of the binary operators; all are left associative.
BINARY_PREC = {'+': 1, '-': 1, '*': 2, '/': 2}
# Parentheses, function calls, unary minus and binary operators each count
# one level of the tree.
MAX_DEPTH = 100
CHECK_GRID = np.linspace(-50.0, 50.0, 1001)

_NUMBER = re.compile(r'(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?')
_NAME = re.compile(r'[A-Za-z_]\w*')


class ParseError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f'{message} at offset {offset}')
        self.offset = offset


class CoefficientError(ValueError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    offset: int


def tokenize(src):
    """
    Split src into tokens carrying their byte offsets.
    :raises ParseError: on a character that starts no token
    """
    tokens = []
    idx = 0
    while idx < len(src):
        c = src[idx]
        if c.isspace():
            idx += 1
            continue
        match = _NUMBER.match(src, idx)
        if match:
            tokens.append(Token('num', match.group(0), _byte_offset(src, idx)))
            idx = match.end()
            continue
        match = _NAME.match(src, idx)
        if match:
            tokens.append(Token('name', match.group(0), _byte_offset(src, idx)))
            idx = match.end()
            continue
        if c in '+-*/()':
            tokens.append(Token('op', c, _byte_offset(src, idx)))
            idx += 1
            continue
        raise ParseError(f'Unexpected character {c!r}', _byte_offset(src, idx))
    tokens.append(Token('end', '', _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src, idx):
    return len(src[:idx].encode('utf8'))


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    def nest(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError(f'Expression nested deeper than {MAX_DEPTH}', self.peek().offset)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, text):
        token = self.advance()
        if token.text != text:
            if token.kind == 'end':
                raise ParseError(f'Unbalanced parentheses: expected {text!r}', token.offset)
            raise ParseError(f'Expected {text!r}, got {token.text!r}', token.offset)
        return token

    def expression(self, min_prec=1):
        self.nest()
        levels = 1
        left = self.unary()
        while True:
            token = self.peek()
            prec = BINARY_PREC.get(token.text) if token.kind == 'op' else None
            if prec is None or prec < min_prec:
                self.depth -= levels
                return left
            self.advance()
            right = self.expression(prec + 1)
            left = BinOp(token.text, left, right)
            self.nest()
            levels += 1

    def unary(self):
        token = self.peek()
        if token.kind == 'op' and token.text == '-':
            self.advance()
            self.nest()
            operand = self.unary()
            self.depth -= 1
            return Neg(operand)
        return self.atom()

    def atom(self):
        token = self.advance()
        if token.kind == 'num':
            value = float(token.text)
            if not np.isfinite(value):
                raise ParseError(f'Number {token.text!r} out of range', token.offset)
            return Num(value)
        if token.kind == 'name':
            if token.text == 'x':
                return Var()
            if token.text not in FUNCTIONS:
                raise ParseError(f'Unknown function {token.text!r}', token.offset)
            self.expect('(')
            arg = self.expression()
            self.expect(')')
            return Call(token.text, arg)
        if token.kind == 'op' and token.text == '(':
            inner = self.expression()
            self.expect(')')
            return inner
        if token.kind == 'end':
            raise ParseError('Unexpected end of input', token.offset)
        if token.text == ')':
            raise ParseError('Unbalanced parentheses', token.offset)
        raise ParseError(f'Unexpected token {token.text!r}', token.offset)


def parse(src):
    """
    Parse a coefficient expression; the whole input must be consumed.
    :param src: expression text, e.g. '2+sin(x)'
    :return: expression tree
    :raises ParseError: with the byte offset of the problem
    """
    parser = _Parser(tokenize(src))
    tree = parser.expression()
    token = parser.peek()
    if token.kind != 'end':
        if token.text == ')':
            raise ParseError('Unbalanced parentheses', token.offset)
        raise ParseError(f'Unexpected token {token.text!r}', token.offset)
    return tree


def evaluate(tree, x):
    """
    Evaluate a tree at x (float or numpy array) in IEEE double arithmetic.
    Division by zero yields inf or nan rather than raising.
    """
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        return _evaluate(tree, np.asarray(x, dtype=np.float64))


def _evaluate(tree, x):
    if isinstance(tree, Num):
        return np.float64(tree.value) + np.zeros_like(x)
    if isinstance(tree, Var):
        return x
    if isinstance(tree, Neg):
        return np.negative(_evaluate(tree.operand, x))
    if isinstance(tree, Call):
        return FUNCTIONS[tree.name](_evaluate(tree.arg, x))
    left = _evaluate(tree.left, x)
    right = _evaluate(tree.right, x)
    if tree.op == '+':
        return np.add(left, right)
    if tree.op == '-':
        return np.subtract(left, right)
    if tree.op == '*':
        return np.multiply(left, right)
    return np.divide(left, right)


def to_source(tree):
    """
    Fully parenthesized source text for a tree.
    """
    if isinstance(tree, Num):
        return repr(float(tree.value))
    if isinstance(tree, Var):
        return 'x'
    if isinstance(tree, Neg):
        return f'(-{to_source(tree.operand)})'
    if isinstance(tree, Call):
        return f'{tree.name}({to_source(tree.arg)})'
    return f'({to_source(tree.left)} {tree.op} {to_source(tree.right)})'


BUILTINS = {
    'sde1': ('2+sin(x)', 'x'),
    'sde2': ('2+cos(x)', 'sin(x)'),
}


@dataclass(frozen=True)
class CoefficientSpec:
    """
    Diffusion coefficient v1 and drift v2 of dX = v2(X) dt + v1(X) dB.
    Boundedness with all derivatives is assumed by the theory but only
    finiteness on CHECK_GRID is checked.
    """
    v1: object
    v2: object
    source: object

    def __post_init__(self):
        for name in ('v1', 'v2'):
            values = evaluate(getattr(self, name), CHECK_GRID)
            if not np.all(np.isfinite(values)):
                bad = CHECK_GRID[~np.isfinite(values)][0]
                raise CoefficientError(
                    f'{name} = {to_source(getattr(self, name))} is not finite at x = {bad}')

    def diffusion(self, x):
        return evaluate(self.v1, x)

    def drift(self, x):
        return evaluate(self.v2, x)

    @classmethod
    def from_expressions(cls, v1_src, v2_src):
        return cls(parse(v1_src), parse(v2_src), {'v1': v1_src, 'v2': v2_src})

    @classmethod
    def from_mapping(cls, value):
        """
        Build from a config value: a builtin name or {'v1': ..., 'v2': ...}.
        """
        if isinstance(value, str):
            return builtin(value)
        if isinstance(value, dict) and set(value) == {'v1', 'v2'}:
            return cls.from_expressions(str(value['v1']), str(value['v2']))
        raise CoefficientError(f'Unsupported sde specification: {value!r}')

    def describe(self):
        if isinstance(self.source, str):
            return self.source
        return dict(self.source)


def builtin(name):
    """
    The two test equations: sde1 dX = X dt + (2 + sin X) dB and
    sde2 dX = sin X dt + (2 + cos X) dB.
    """
    if name not in BUILTINS:
        raise CoefficientError(f'Unknown builtin {name!r}; choose from {", ".join(sorted(BUILTINS))}')
    v1_src, v2_src = BUILTINS[name]
    return CoefficientSpec(parse(v1_src), parse(v2_src), name)
