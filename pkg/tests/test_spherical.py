import warnings

import numpy as np
import pytest
from scipy.special import gamma

from matprod.ensembles import as_general, interpolating, jacobi, laguerre, lognormal
from matprod.errors import DegenerateParameter, DegenerateSpectrum
from matprod.mellin import eval_symbol
from matprod.spherical import (SphericalPoint, multiplicativity_check, rho_prime,
                               spherical_function, spherical_transform,
                               spherical_transform_general, spherical_transform_numeric)


def test_rho_prime_examples():
    assert np.array_equal(rho_prime(1), [1.0])
    assert np.array_equal(rho_prime(2), [1.5, 2.5])
    assert np.array_equal(rho_prime(3), [2.0, 3.0, 4.0])


def test_spherical_point():
    pt = SphericalPoint.make([1.5, 2.5 + 1j])
    assert pt.n == 2 and pt.distinct and pt.rho == (1.5, 2.5)
    assert not SphericalPoint.make([1.0, 1.0]).distinct


def test_spherical_function_examples():
    assert spherical_function([2.5 + 1j], [3.0]) == pytest.approx(3.0 ** (2.5 + 1j), rel=1e-14)
    assert spherical_function(rho_prime(2), [4.0, 1.0]) == pytest.approx(16.0, rel=1e-13)


def test_homogeneity():
    s = np.array([0.7 + 0.3j, 2.1 - 1j])
    lam = np.array([0.4, 1.7])
    c = 3.0
    ratio = spherical_function(s, c * c * lam) / spherical_function(s, lam)
    assert ratio == pytest.approx(c ** (2 * s.sum()), rel=1e-12)


def test_permutation_symmetry():
    rng = np.random.default_rng(1)
    s = rng.normal(size=3) + 1j * rng.normal(size=3)
    lam = rng.uniform(0.2, 3.0, 3)
    base = spherical_function(s, lam)
    for _ in range(5):
        p, q = rng.permutation(3), rng.permutation(3)
        assert spherical_function(s[p], lam) == pytest.approx(base, rel=1e-12)
        assert spherical_function(s, lam[q]) == pytest.approx(base, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_rho_gives_determinant_power(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        d = rng.uniform(0.3, 2.0, n)
        val = spherical_function(rho_prime(n), d**2)
        assert val == pytest.approx(np.prod(d) ** (2 * n), rel=1e-10)


def test_identity_is_exactly_one():
    assert spherical_function([0.3 + 2j, 1.0, -4.0], np.ones(3)) == 1.0
    assert spherical_function([0.5, 1.5], [2.0, 2.0]) == pytest.approx(2.0**2, rel=1e-15)


def test_nearly_degenerate_spectrum():
    s = np.array([0.5 + 0.2j, 1.7, 3.0])
    lam = np.array([1.0, 1.0 + 1e-12, 2.5])
    with pytest.warns(RuntimeWarning):
        val = spherical_function(s, lam)
    # confluent limit through a well-separated neighbour
    ref = spherical_function(s, np.array([1.0, 1.0 + 1e-4, 2.5]))
    assert val == pytest.approx(ref, rel=1e-3)


def test_degenerate_errors():
    with pytest.raises(DegenerateParameter):
        spherical_function([1.0, 1.0], [1.0, 2.0])
    with pytest.raises(DegenerateSpectrum):
        spherical_function([1.0, 2.0], [0.0, 2.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(DegenerateSpectrum):
            spherical_function([1.0, 2.0, 3.0], [1e-300, 2e-300, 1.0])


def test_transform_examples():
    for ens in (laguerre(2, 0.5), jacobi(3, 0, 4), lognormal(2, 0.1, 0.5)):
        assert spherical_transform(ens, rho_prime(ens.n)) == pytest.approx(1.0, rel=1e-13)
    val = spherical_transform(laguerre(2, 0), [1.5 + 1j, 2.5])
    assert val == pytest.approx(gamma(1 + 1j), rel=1e-13)
    assert val == pytest.approx(0.498015668118356 - 0.154949828301811j, rel=1e-12)


def test_transform_interpolating_unfolds():
    n, p, q = 3, 1.5, 0.5
    ens = interpolating(n, p, q)
    s = rho_prime(n) + 0.7j
    sig = s - (n - 1) / 2
    expected = np.prod(eval_symbol(ens.symbol, sig)) / np.prod(
        [eval_symbol(ens.symbol, k) for k in range(1, n + 1)])
    assert spherical_transform(ens, s) == pytest.approx(expected, rel=1e-12)


def test_derivative_formula_matches_general_determinant():
    rng = np.random.default_rng(7)
    ens = jacobi(3, 0.5, 5)
    gen = as_general(ens)
    for _ in range(10):
        s = rho_prime(3) + rng.uniform(-0.4, 0.4, 3) + 1j * rng.normal(size=3)
        assert spherical_transform_general(gen, s) == pytest.approx(
            spherical_transform(ens, s), rel=1e-10)


def test_general_needs_distinct_parameters():
    with pytest.raises(DegenerateParameter):
        spherical_transform(as_general(laguerre(2)), [2.0, 2.0])


def test_numeric_examples():
    assert spherical_transform_numeric(laguerre(2, 0), rho_prime(2)) == pytest.approx(1, abs=1e-3)
    s = [1.5 + 1j, 2.5]
    assert spherical_transform_numeric(laguerre(2, 0), s) == pytest.approx(
        spherical_transform(laguerre(2, 0), s), abs=1e-3)
    assert spherical_transform_numeric(laguerre(1, 0), [2.0], rtol=1e-8) == pytest.approx(
        1.0, abs=1e-6)


def test_multiplicativity_monte_carlo():
    rng = np.random.default_rng(11)
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    g /= abs(np.linalg.det(g)) ** 0.5
    h /= abs(np.linalg.det(h)) ** 0.5
    mean, se, target = multiplicativity_check([0.8 + 0.5j, 1.9], g, h, samples=10_000, seed=3)
    assert abs(mean - target) < 3 * se
