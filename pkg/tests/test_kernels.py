import math

import numpy as np
import pytest

from matprod.densities import jpdf_ev_values
from matprod.ensembles import DerivativeEnsemble, compose, interpolating, jacobi, laguerre, lognormal
from matprod.errors import NegativeWeight
from matprod.kernels import (biorthogonality_matrix, chi, correlation_det, kernel_ev,
                             kernel_ev_product, kernel_sv, marginal_cdf, monic_polys, q_func,
                             transfer_system)
from matprod.mellin import UNIT, MellinSymbol
from matprod.quadrature import adaptive_gl


def test_monic_examples():
    sys = monic_polys(laguerre(3, 0))
    assert np.allclose(sys.coeffs[:2, 1], [-1, 1])
    assert np.allclose(sys.coeffs[:, 2], [2, -4, 1])
    assert sys.p(0, 3.7) == 1.0
    assert np.allclose(np.diag(sys.coeffs), 1.0)


def test_q_examples():
    ens = laguerre(2, 0)
    assert q_func(ens, 0, 1.0) == pytest.approx(math.exp(-1), rel=1e-12)
    assert q_func(ens, 1, 2.0) == pytest.approx(math.exp(-2), rel=1e-12)


def test_q_contour_route_matches_closed_form():
    closed = laguerre(3, 0.5)
    contour = DerivativeEnsemble(3, closed.symbol)
    x = np.array([0.2, 1.0, 3.5])
    for l in range(3):
        assert np.allclose(q_func(contour, l, x), q_func(closed, l, x), rtol=1e-8)


def test_kernel_sv_examples():
    x = np.array([0.3, 1.0, 2.5])
    assert np.allclose(kernel_sv(laguerre(1, 0), x, x[::-1]), np.exp(-x[::-1]), rtol=1e-12)
    assert kernel_sv(laguerre(2, 0), 1.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-12)


@pytest.mark.parametrize("ens", [laguerre(3, 0.5), jacobi(3, 0, 4), lognormal(2, 0, 1)],
                         ids=["laguerre", "jacobi", "lognormal"])
def test_kernel_trace_and_reproducing(ens):
    sys = monic_polys(ens)
    lo, hi = sys.window
    mass = adaptive_gl(lambda u: sys.kernel(np.exp(u), np.exp(u)) * np.exp(u), lo, hi, rtol=1e-10)
    assert mass == pytest.approx(ens.n, abs=1e-4)
    for x, y in ((0.3, 0.6), (0.5, 0.2)):
        f = lambda u: sys.kernel(x, np.exp(u)) * sys.kernel(np.exp(u), y) * np.exp(u)
        assert adaptive_gl(f, lo, hi, rtol=1e-10) == pytest.approx(sys.kernel(x, y), abs=1e-5)


def test_biorthogonality_matrix():
    assert np.allclose(biorthogonality_matrix(interpolating(3, 1.5, 0)), np.eye(3), atol=1e-6)


def test_kernel_ev_examples():
    ens = laguerre(2, 0)
    assert kernel_ev(ens, 0j, 0j).real == pytest.approx(1 / math.pi, rel=1e-12)
    # (1/pi)(1 + 1) e^-1 = 2/(pi e)
    assert kernel_ev(ens, 1 + 0j, 1 + 0j).real == pytest.approx(2 / (math.pi * math.e), rel=1e-12)
    z, w = 0.3 + 0.8j, -1.1 + 0.2j
    assert kernel_ev(ens, z, w) == pytest.approx(np.conj(kernel_ev(ens, w, z)), rel=1e-14)


def test_kernel_ev_determinant_matches_density():
    ens = jacobi(3, 0.5, 4)
    z = np.array([0.3 + 0.2j, -0.5j, 0.6 - 0.1j])
    K = kernel_ev(ens, z[:, None], z[None, :])
    assert np.linalg.det(K).real / 6 == pytest.approx(jpdf_ev_values(ens, z), rel=1e-10)


def test_negative_weight():
    # (s - 2) Gamma(s) is the transform of (x - 2) e^-x
    sym = MellinSymbol(gamma_factors=((1, 1, 0),), poly=(-2.0, 1.0), strip=(0, math.inf))
    ens = DerivativeEnsemble(2, sym)
    assert ens.omega(1.0) == pytest.approx(-math.exp(-1), rel=1e-9)
    with pytest.raises(NegativeWeight):
        kernel_ev(ens, 1 + 0j, 0.5 + 0j)


def test_chi_examples():
    x = np.array([0.0, 0.5, 2.0])
    assert np.allclose(chi(laguerre(2, 0), x), 1 + x)
    assert np.allclose(chi(laguerre(3, 0), x), 1 + x + x**2 / 2)
    assert np.allclose(chi(jacobi(1, 0, 3), x), 3.0)


def test_product_eigenvalue_kernel():
    e1, e2 = laguerre(3, 0.5), jacobi(3, 0, 4)
    prod = compose(e1, e2)
    ma = [e1.moment(j) for j in range(1, 4)]
    mb = [e2.moment(j) for j in range(1, 4)]
    z, w = np.array([0.2 + 0.1j, 0.5j]), np.array([0.3, -0.2 + 0.4j])
    assert np.allclose(kernel_ev_product(ma, mb, prod.omega, z, w), kernel_ev(prod, z, w),
                       rtol=1e-12)


def test_transfer_examples():
    sys = transfer_system(laguerre(3, 0), monic_polys(laguerre(3, 0)))
    assert np.allclose(sys.coeffs[:, 2], [4, -8, 1], rtol=1e-14)
    assert np.allclose(sys.coeffs, monic_polys(interpolating(3, 2, 0)).coeffs, rtol=1e-12)


def test_unit_transfer_is_identity():
    base = monic_polys(jacobi(2, 0.5, 3))
    out = transfer_system(DerivativeEnsemble(2, UNIT), base)
    assert np.array_equal(out.coeffs, base.coeffs)
    x = np.array([0.2, 0.7])
    assert np.array_equal(out.q(1, x), base.q(1, x))


def test_transfer_closure_weights():
    e1, e2 = laguerre(2, 0.5), jacobi(2, 0, 4)
    moved = transfer_system(e1, monic_polys(e2))
    direct = monic_polys(compose(e1, e2))
    assert np.allclose(moved.coeffs, direct.coeffs, rtol=1e-10)
    x = np.array([0.1, 0.5, 2.0, 10.0])
    for k in range(2):
        assert np.allclose(moved.q(k, x), direct.q(k, x), rtol=1e-5)


def test_correlation_det_matches_assembled_matrix():
    ens = laguerre(3, 0)
    x = np.array([0.4, 1.5, 4.0])
    K = kernel_sv(ens, x[:, None], x[None, :])
    assert correlation_det(ens, x) == pytest.approx(np.linalg.det(K), rel=1e-10)


def test_marginal_cdf_limits():
    F = marginal_cdf(laguerre(2, 0))
    assert F(1e-12) == pytest.approx(0.0, abs=1e-8)
    assert F(1e3) == pytest.approx(1.0, abs=1e-8)
    assert np.all(np.diff(F(np.linspace(0.01, 10, 50))) >= 0)
