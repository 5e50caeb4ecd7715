"""Recursive-descent parser for ensemble expressions.

Grammar::

    expr := term ('*' term)*
    term := family '(' kv (',' kv)* ')' | 'inv' '(' expr ')'
    kv   := key '=' number

for example ``laguerre(nu=0) * inv(jacobi(nu=0,mu=5)) * interp(p=0.5,q=0)``.
"""

import re
from dataclasses import dataclass

from .ensembles import FAMILIES, compose, invert, make_family
from .errors import ParameterOutOfRange, ParseError, SemanticError

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[()*,=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


@dataclass(frozen=True)
class Family:
    name: str
    params: tuple
    offset: int


@dataclass(frozen=True)
class Inverse:
    inner: object
    offset: int


@dataclass(frozen=True)
class Product:
    terms: tuple


def tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def fail(self, expected, message=None):
        tok = self.peek()
        got = repr(tok.text) if tok.kind != "end" else "end of input"
        raise ParseError(message or f"unexpected {got}", tok.offset, expected)

    def expect(self, text):
        tok = self.peek()
        if tok.kind == "punct" and tok.text == text:
            self.i += 1
            return tok
        self.fail([text])

    def expr(self):
        terms = [self.term()]
        while self.peek().kind == "punct" and self.peek().text == "*":
            self.i += 1
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Product(tuple(terms))

    def term(self):
        tok = self.peek()
        names = sorted(FAMILIES) + ["inv"]
        if tok.kind != "name" or tok.text not in names:
            self.fail(names)
        self.i += 1
        self.expect("(")
        if tok.text == "inv":
            inner = self.expr()
            self.expect(")")
            return Inverse(inner, tok.offset)
        params = [self.kv()]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.i += 1
            params.append(self.kv())
        self.expect(")")
        return Family(tok.text, tuple(params), tok.offset)

    def kv(self):
        key = self.peek()
        if key.kind != "name":
            self.fail(["key"])
        self.i += 1
        self.expect("=")
        num = self.peek()
        if num.kind != "number":
            self.fail(["number"])
        self.i += 1
        return (key.text, float(num.text), key.offset)

    def parse(self):
        tree = self.expr()
        if self.peek().kind != "end":
            self.fail(["*", "end of input"])
        return tree


def parse_ast(text):
    """Syntax tree of an ensemble expression (raises ParseError)."""
    return _Parser(text).parse()


def build(tree, n):
    """Evaluate a syntax tree into an ensemble of dimension ``n``."""
    if isinstance(tree, Product):
        out = build(tree.terms[0], n)
        for term in tree.terms[1:]:
            out = compose(out, build(term, n))
        return out
    if isinstance(tree, Inverse):
        return invert(build(tree.inner, n))
    keys = FAMILIES[tree.name][1]
    params = {}
    for key, value, offset in tree.params:
        if key not in keys:
            raise SemanticError(f"{tree.name} has no parameter {key!r} (offset {offset})")
        if key in params:
            raise SemanticError(f"parameter {key!r} given twice (offset {offset})")
        params[key] = value
    try:
        return make_family(tree.name, n, **params)
    except ParameterOutOfRange as exc:
        raise SemanticError(f"{tree.name} at offset {tree.offset}: {exc}") from exc


def parse_ensemble_expr(text, n):
    """Parse ``text`` and build the ensemble for dimension ``n``."""
    return build(parse_ast(text), n)
