import pytest

from matprod.ensembles import compose, interpolating, invert, jacobi, laguerre
from matprod.errors import ParseError, SemanticError
from matprod.expr import Family, Inverse, Product, parse_ast, parse_ensemble_expr, tokenize
from matprod.mellin import symbols_close


def test_example_expression():
    text = "laguerre(nu=0) * inv(jacobi(nu=0,mu=5)) * interp(p=0.5,q=0)"
    ens = parse_ensemble_expr(text, 2)
    ref = compose(compose(laguerre(2, 0), invert(jacobi(2, 0, 5))), interpolating(2, 0.5, 0))
    assert symbols_close(ens.symbol, ref.symbol)


def test_ast_shapes():
    tree = parse_ast("laguerre(nu=1)")
    assert isinstance(tree, Family) and tree.params == (("nu", 1.0, 9),)
    tree = parse_ast("inv(laguerre(nu=0) * laguerre(nu=1))")
    assert isinstance(tree, Inverse) and isinstance(tree.inner, Product)
    tree = parse_ast("mb(nu=0,alpha=2,theta=0.5)*lognormal(nu=-1e-1,alpha=.5)")
    assert isinstance(tree, Product) and len(tree.terms) == 2
    assert tree.terms[1].params[0][1] == pytest.approx(-0.1)


def test_whitespace_is_ignored():
    a = parse_ensemble_expr(" cauchy ( nu = 0 , mu = 3 ) ", 2)
    b = parse_ensemble_expr("cauchy(nu=0,mu=3)", 2)
    assert a == b


def test_tokens_carry_offsets():
    toks = tokenize("jacobi(nu=0, mu=5)")
    assert [(t.kind, t.offset) for t in toks[:4]] == [
        ("name", 0), ("punct", 6), ("name", 7), ("punct", 9)]
    assert toks[-1].kind == "end" and toks[-1].offset == 18


@pytest.mark.parametrize("text, offset", [
    ("wishart(nu=0)", 0),
    ("laguerre nu=0", 9),
    ("laguerre()", 9),
    ("laguerre(nu)", 11),
    ("laguerre(nu=)", 12),
    ("laguerre(nu=0", 13),
    ("laguerre(nu=0) laguerre(nu=0)", 15),
    ("laguerre(nu=0) *", 16),
    ("inv(laguerre(nu=0)", 18),
    ("laguerre(nu=0) # x", 15),
    ("laguerre(nu=0,)", 14),
], ids=["family", "lparen", "kv", "eq", "number", "rparen", "trailing", "dangling",
        "inv-rparen", "char", "comma"])
def test_parse_errors_point_at_offending_token(text, offset):
    with pytest.raises(ParseError) as info:
        parse_ast(text)
    assert info.value.offset == offset


def test_parse_error_lists_expected():
    with pytest.raises(ParseError) as info:
        parse_ast("laguerre(nu=0")
    assert ")" in info.value.expected


@pytest.mark.parametrize("text, n", [
    ("laguerre(mu=0)", 2),
    ("laguerre(nu=0,nu=1)", 2),
    ("jacobi(nu=0,mu=1)", 3),
    ("interp(p=0,q=0)", 2),
    ("jacobi(nu=0)", 2),
], ids=["unknown-key", "duplicate", "range", "interp-range", "missing"])
def test_semantic_errors(text, n):
    with pytest.raises(SemanticError):
        parse_ensemble_expr(text, n)
