import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from matprod.densities import jpdf_sv_values
from matprod.ensembles import compose, invert, jacobi, laguerre
from matprod.expr import Family, Inverse, Product, parse_ast, parse_ensemble_expr
from matprod.mellin import convolve_symbols, eval_symbol, reflect_symbol, symbols_close
from matprod.sampling import ks_statistic
from matprod.spherical import spherical_function

FAST = settings(max_examples=40, deadline=None)

nu = st.floats(0.0, 3.0)
mu = st.floats(0.5, 4.0)


@FAST
@given(nu, nu, mu, st.floats(0.3, 2.5), st.floats(-20, 20))
def test_convolution_is_multiplicative(a, b, m, re, im):
    s1, s2 = laguerre(1, a).symbol, jacobi(1, b, m).symbol
    s = complex(re, im)
    prod = convolve_symbols(s1, s2)
    assert np.isclose(eval_symbol(prod, s), eval_symbol(s1, s) * eval_symbol(s2, s),
                      rtol=1e-12, atol=0)


@FAST
@given(nu, mu, st.integers(1, 4))
def test_reflect_is_an_involution(a, m, n):
    sym = jacobi(n, a, m + n - 1).symbol
    assert symbols_close(reflect_symbol(reflect_symbol(sym, n), n), sym)


@FAST
@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=3, max_size=3),
       st.lists(st.floats(0.2, 4.0), min_size=3, max_size=3, unique=True), st.permutations(range(3)))
def test_spherical_function_symmetry(s, lam, perm):
    s = np.array([complex(a + k, b) for k, (a, b) in enumerate(s)])
    lam = np.array(lam)
    if np.min(np.abs(np.diff(np.sort(lam)))) < 1e-2 or np.min(np.abs(np.diff(np.sort(s.real)))) < 1e-2:
        return
    base = spherical_function(s, lam)
    perm = list(perm)
    assert np.isclose(spherical_function(s[perm], lam), base, rtol=1e-8)
    assert np.isclose(spherical_function(s, lam[perm]), base, rtol=1e-8)


@FAST
@given(st.lists(st.floats(0.05, 5.0), min_size=3, max_size=3), st.permutations(range(3)))
def test_jpdf_sv_is_symmetric(a, perm):
    ens = jacobi(3, 0.5, 2.5)
    a = np.array(a) / 6.0
    assert np.isclose(jpdf_sv_values(ens, a[list(perm)]), jpdf_sv_values(ens, a),
                      rtol=1e-10, atol=1e-300)


def _number():
    return st.floats(0.0, 5.0).map(lambda v: round(v, 3))


def _family():
    return st.one_of(
        st.builds(lambda v: Family("laguerre", (("nu", v),), 0), _number()),
        st.builds(lambda v, w: Family("jacobi", (("nu", v), ("mu", w + 0.5)), 0),
                  _number(), _number()),
    )


_tree = st.recursive(_family(), lambda inner: st.one_of(
    st.builds(lambda t: Inverse(t, 0), inner),
    st.builds(lambda ts: Product(tuple(ts)), st.lists(inner, min_size=2, max_size=3)),
), max_leaves=5)


def _render(tree):
    if isinstance(tree, Product):
        return " * ".join(_render(t) for t in tree.terms)
    if isinstance(tree, Inverse):
        return f"inv({_render(tree.inner)})"
    return f"{tree.name}(" + ",".join(f"{k}={v!r}" for k, v in tree.params) + ")"


def _shape(tree):
    if isinstance(tree, Product):
        terms = []
        for t in tree.terms:
            terms.extend(_shape(t)[1] if isinstance(t, Product) else [_shape(t)])
        return ("prod", terms) if len(terms) > 1 else terms[0]
    if isinstance(tree, Inverse):
        return ("inv", _shape(tree.inner))
    return (tree.name, tuple((k, v) for k, v, *_ in tree.params))


@FAST
@given(_tree)
def test_parser_roundtrip(tree):
    assert _shape(parse_ast(_render(tree))) == _shape(tree)


@FAST
@given(_number(), _number(), _number())
def test_parsed_expression_builds_composition(a, b, m):
    text = f"laguerre(nu={a}) * inv(jacobi(nu={b},mu={m + 1.5}))"
    direct = compose(laguerre(2, a), invert(jacobi(2, b, m + 1.5)))
    assert symbols_close(parse_ensemble_expr(text, 2).symbol, direct.symbol)


@FAST
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=200))
def test_ks_statistic_bounds(x):
    x = np.array(x)
    cdf = lambda t: 1 / (1 + np.exp(-t))
    d = ks_statistic(x, cdf)
    assert 1 / (2 * len(x)) - 1e-12 <= d <= 1.0
