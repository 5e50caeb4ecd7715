"""Spherical functions on GL(n, C) and spherical transforms of ensembles."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .densities import normalization_sv, tensor_sv_integral, vandermonde
from .errors import DegenerateParameter, DegenerateSpectrum
from .mellin import eval_symbol

GAP = 1e-9
PERTURB = 1e-6


def rho_prime(n):
    """The vector ((2j + n - 1)/2)_{j=1..n}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (2 * np.arange(1, n + 1) + n - 1) / 2.0


@dataclass(frozen=True)
class SphericalPoint:
    n: int
    s: tuple
    rho: tuple
    distinct: bool

    @classmethod
    def make(cls, s):
        s = np.asarray(s, dtype=complex)
        n = s.size
        gaps = [abs(s[i] - s[j]) for i in range(n) for j in range(i + 1, n)]
        return cls(n, tuple(s), tuple(rho_prime(n)), bool(all(g > 1e-12 for g in gaps)))


def _log_vandermonde(x):
    """log|Delta(x)| and its phase/sign over the last axis."""
    x = np.asarray(x)
    n = x.shape[-1]
    logabs = np.zeros(x.shape[:-1])
    phase = np.ones(x.shape[:-1], dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            d = x[..., j] - x[..., i]
            logabs = logabs + np.log(np.abs(d))
            phase = phase * d / np.abs(d)
    return logabs, phase


def _phi_distinct(s, lam):
    """Spherical function for pairwise distinct lambda; lam of shape (..., n)."""
    n = s.size
    e = s + (n - 1) / 2.0
    loglam = np.log(lam)
    # row scaling keeps the power matrix in range
    shift = loglam[..., :, None] * np.real(e)[None, :]
    rmax = shift.max(axis=-1)
    M = np.exp(loglam[..., :, None] * e[None, :] - rmax[..., None])
    sign, logdet = np.linalg.slogdet(M)
    lv, pv = _log_vandermonde(lam)
    ls, ps = _log_vandermonde(s)
    lr, _ = _log_vandermonde(rho_prime(n))
    logval = lr - ls + logdet + rmax.sum(axis=-1) - lv
    return np.exp(logval) * sign / (ps * pv)


def spherical_function(s, lam):
    """phi_s(g) from the squared singular values ``lam`` of g."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    n = s.size
    if lam.shape != (n,):
        raise ValueError(f"need {n} squared singular values")
    if np.any(~(lam > 0)):
        raise DegenerateSpectrum("squared singular values must be positive")
    if n > 1 and min(abs(s[i] - s[j]) for i in range(n) for j in range(i + 1, n)) == 0:
        raise DegenerateParameter("spectral parameters must be pairwise distinct")
    if np.all(lam == lam[0]):
        return complex(np.exp(np.sum(s) * math.log(lam[0])))
    srt = np.sort(lam)
    scale = srt[-1]
    if n > 1 and np.min(np.diff(srt)) < GAP * scale:
        warnings.warn("nearly degenerate spectrum; using perturbation with extrapolation",
                      RuntimeWarning, stacklevel=2)
        offsets = np.arange(n) - (n - 1) / 2.0
        order = np.argsort(lam, kind="stable")
        bump = np.empty(n)
        bump[order] = offsets
        vals = []
        for h in (PERTURB, 2 * PERTURB):
            pert = lam * (1 + h * bump)
            ps = np.sort(pert)
            if np.min(np.diff(ps)) < GAP * ps[-1]:
                raise DegenerateSpectrum("spectrum stays degenerate after perturbation")
            vals.append(complex(_phi_distinct(s, pert)))
        return 2 * vals[0] - vals[1]
    return complex(_phi_distinct(s, lam))


def spherical_function_batch(s, lam):
    """Vectorized spherical function for lam of shape (m, n) with distinct rows."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    return _phi_distinct(s, np.asarray(lam, dtype=float))


def _shifted(ens, s):
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if s.size != ens.n:
        raise ValueError(f"need {ens.n} spectral parameters")
    return s, s - (ens.n - 1) / 2.0


def spherical_transform(ens, s):
    """Symbolic spherical transform of an ensemble at spectral point s."""
    s, sig = _shifted(ens, s)
    n = ens.n
    if ens.kind == "derivative":
        vals = eval_symbol(ens.symbol, sig)
        return complex(np.prod(vals) / np.prod([ens.moment(k) for k in range(1, n + 1)]))
    if n > 1 and min(abs(s[i] - s[j]) for i in range(n) for j in range(i + 1, n)) == 0:
        raise DegenerateParameter("general transform needs pairwise distinct s")
    return spherical_transform_general(ens, s)


def spherical_transform_general(ens, s):
    """C_sv prod_{j<=n} j! det[Mw_{j-1}(s_k - (n-1)/2)] / Delta(s)."""
    s, sig = _shifted(ens, s)
    n = ens.n
    M = np.array([[ens.mellin_weight(j, sk) for sk in sig] for j in range(n)], dtype=complex)
    fact = math.prod(math.factorial(j) for j in range(n + 1))
    return complex(normalization_sv(ens) * fact * np.linalg.det(M) / vandermonde(s))


def spherical_transform_numeric(ens, s, rtol=1e-5, window=None):
    """Quadrature of int_A f_SV(a) phi_s(a) det(a)^-n da over all of (0, inf)^n.

    The Vandermonde in a cancels between density and spherical function,
    so the integrand is evaluated without division.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    n = ens.n
    if s.size != n:
        raise ValueError(f"need {n} spectral parameters")
    e = s + (n - 1) / 2.0 - n
    lr, _ = _log_vandermonde(rho_prime(n))
    pref = math.exp(lr) / vandermonde(s) if n > 1 else 1.0

    def integrand(A, M):
        P = np.exp(np.log(A)[:, :, None] * e[None, None, :])
        return normalization_sv(ens) * pref * np.linalg.det(M) * np.linalg.det(P)

    return complex(tensor_sv_integral(ens, integrand=integrand, rtol=rtol, window=window))


def multiplicativity_check(s, g, h, samples=10_000, seed=0):
    """Monte Carlo of int_K phi_s(g k h) dk against phi_s(g) phi_s(h).

    Returns (mean, standard error, target).
    """
    from .sampling import haar_unitary_batch

    s = np.asarray(s, dtype=complex)
    rng = np.random.default_rng(seed)
    K = haar_unitary_batch(len(s), samples, rng)
    prod = g[None] @ K @ h[None]
    lam = np.linalg.svd(prod, compute_uv=False) ** 2
    vals = spherical_function_batch(s, lam)
    lam_g = np.linalg.svd(g, compute_uv=False) ** 2
    lam_h = np.linalg.svd(h, compute_uv=False) ** 2
    target = spherical_function(s, lam_g) * spherical_function(s, lam_h)
    mean = vals.mean()
    se = math.sqrt((np.var(vals.real) + np.var(vals.imag)) / samples)
    return complex(mean), se, complex(target)
