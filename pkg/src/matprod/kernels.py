"""Biorthogonal systems and determinantal kernels."""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import gammaln

from .ensembles import mult_convolve
from .errors import NegativeWeight
from .mellin import inverse_mellin, multiply_poly
from .quadrature import CumulativeTable, adaptive_gl


@dataclass(frozen=True)
class BiorthogonalSystem:
    """Monic polynomials p_k(x) = sum_j coeffs[j, k] x^j and weights q_k."""

    n: int
    coeffs: np.ndarray
    q_funcs: tuple
    moments: np.ndarray | None
    window: tuple

    def p(self, k, x):
        return npoly.polyval(np.asarray(x, dtype=float), self.coeffs[: k + 1, k])

    def q(self, k, x):
        return np.asarray(self.q_funcs[k](np.asarray(x, dtype=float)), dtype=float)

    def kernel(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        flat_y = y.ravel()
        uniq, inv = np.unique(flat_y, return_inverse=True)
        out = np.zeros(x.shape)
        for k in range(self.n):
            out = out + self.p(k, x) * self.q(k, uniq)[inv].reshape(y.shape)
        return out


def falling_poly(l):
    """Ascending coefficients of prod_{i=1}^{l} (s - i)."""
    return npoly.polyfromroots(np.arange(1, l + 1)) if l > 0 else np.array([1.0])


def q_func(ens, l, x, tol=1e-10):
    """q_l(x) = (1/(l! Mw(l+1))) d^l/dx^l [(-x)^l w(x)]."""
    l = int(l)
    if not 0 <= l <= ens.n:
        raise ValueError("need 0 <= l <= n")
    norm = math.exp(gammaln(l + 1)) * ens.moment(l + 1)
    coeffs = falling_poly(l)
    x = np.asarray(x, dtype=float)
    if ens.closed is not None:
        acc = 0.0
        for k, ck in enumerate(coeffs):
            if ck != 0:
                acc = acc + ck * ens.weight(k, x)
        return acc / norm
    return inverse_mellin(multiply_poly(ens.symbol, coeffs, 1.0 / norm), x, tol=tol)


def monic_coefficients(moments, n):
    """a_jk = (-1)^(k-j) k! M(k+1) / (j! (k-j)! M(j+1)), j <= k < n."""
    a = np.zeros((n, n))
    for k in range(n):
        for j in range(k + 1):
            a[j, k] = ((-1) ** (k - j) * math.comb(k, j) * moments[k] / moments[j])
    return a


def monic_polys(ens):
    """Biorthogonal system of a derivative-type ensemble."""
    if ens.kind != "derivative":
        raise ValueError("monic_polys needs a derivative-type ensemble")
    n = ens.n
    moms = np.array([ens.moment(j) for j in range(1, n + 1)])
    q_funcs = tuple((lambda x, l=l: q_func(ens, l, x)) for l in range(n))
    return BiorthogonalSystem(n, monic_coefficients(moms, n), q_funcs, moms, ens.window)


def _system(obj):
    return obj if isinstance(obj, BiorthogonalSystem) else monic_polys(obj)


def kernel_sv(ens, x, y):
    """K(x, y) = sum_j p_j(x) q_j(y)."""
    return _system(ens).kernel(x, y)


def correlation_det(obj, x):
    """det[K(x_i, x_j)] for n points via the rank-n factorization K = P Q^T.

    Factoring avoids the cancellation in the assembled kernel matrix, whose
    condition number grows quickly when points cluster.
    """
    sys = _system(obj)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != sys.n:
        raise ValueError(f"need {sys.n} points")
    P = np.stack([sys.p(k, x) for k in range(sys.n)], axis=-1)
    Q = np.stack([sys.q(k, x) for k in range(sys.n)], axis=-1)
    return np.linalg.det(P) * np.linalg.det(Q)


def kernel_ev(ens, z, w):
    """sqrt(w(|z|^2) w(|w|^2)) sum_j (z conj(w))^j / (pi Mw(j+1))."""
    z, w = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
    oz = np.asarray(ens.weight(0, np.abs(z) ** 2), dtype=float)
    ow = np.asarray(ens.weight(0, np.abs(w) ** 2), dtype=float)
    if np.any(oz < 0) or np.any(ow < 0):
        raise NegativeWeight("eigenvalue kernel needs a non-negative weight")
    zw = z * np.conj(w)
    acc = np.zeros(z.shape, dtype=complex)
    for j in range(ens.n):
        acc = acc + zw**j / ens.moment(j + 1)
    out = np.sqrt(oz * ow) * acc / math.pi
    return out[()] if out.ndim == 0 else out


def kernel_ev_product(moments_a, moments_b, omega_prod, z, w):
    """Product-form eigenvalue kernel from two moment lists and the product weight."""
    z, w = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
    zw = z * np.conj(w)
    acc = sum(zw**j / (moments_a[j] * moments_b[j]) for j in range(len(moments_a)))
    return np.sqrt(omega_prod(np.abs(z) ** 2) * omega_prod(np.abs(w) ** 2)) * acc / math.pi


def chi(ens, x):
    """sum_{j<n} x^j / Mw(j+1)."""
    x = np.asarray(x, dtype=float)
    return sum(x**j / ens.moment(j + 1) for j in range(ens.n))


def transfer_system(omega_ens, sys, rtol=1e-8):
    """System of the product ensemble omega * (ensemble of ``sys``)."""
    n = sys.n
    if omega_ens.n != n:
        raise ValueError("dimension mismatch")
    mom = np.array([omega_ens.moment(j) for j in range(1, n + 1)])
    coeffs = sys.coeffs * mom[None, :] / mom[:, None]
    coeffs = np.triu(coeffs)
    new_moms = None if sys.moments is None else sys.moments * mom
    if omega_ens.symbol.is_unit():
        return BiorthogonalSystem(n, coeffs, sys.q_funcs, new_moms, sys.window)
    wo = omega_ens.window
    q_funcs = tuple(
        (lambda x, k=k: mult_convolve(omega_ens.omega, sys.q_funcs[k], x, wo, sys.window,
                                      rtol=rtol) / mom[k])
        for k in range(n))
    window = (wo[0] + sys.window[0], wo[1] + sys.window[1])
    return BiorthogonalSystem(n, coeffs, q_funcs, new_moms, window)


def biorthogonality_matrix(obj, rtol=1e-10):
    """[int p_l q_m da] by adaptive quadrature in log coordinates."""
    sys = _system(obj)
    n = sys.n

    def integrand(u):
        x = np.exp(u)
        P = np.stack([sys.p(l, x) for l in range(n)], axis=1)
        Q = np.stack([sys.q(m, x) for m in range(n)], axis=1)
        return (P[:, :, None] * Q[:, None, :] * x[:, None, None]).reshape(len(u), -1)

    out = adaptive_gl(integrand, *sys.window, rtol=rtol, atol=1e-14)
    return np.asarray(out).reshape(n, n)


def marginal_density(obj, x):
    """One-point density K(x, x)/n of the squared singular values."""
    sys = _system(obj)
    x = np.asarray(x, dtype=float)
    return sys.kernel(x, x) / sys.n


def marginal_cdf(obj, panels=600):
    """Cumulative distribution of K(a, a)/n as a vectorized callable."""
    sys = _system(obj)
    return CumulativeTable(lambda a: marginal_density(sys, a), sys.window, norm=1.0,
                           panels=panels)
