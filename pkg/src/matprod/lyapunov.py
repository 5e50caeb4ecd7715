"""CLT parameters of Lyapunov and stability exponents."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import StripViolation
from .mellin import log_derivative
from .quadrature import CumulativeTable
from .sampling import normal_cdf, product_chain_batch, ks_statistic

SYMBOLIC = "symbolic"
EMPIRICAL = "empirical"


@dataclass(frozen=True)
class CltParameters:
    m: np.ndarray
    sigma: np.ndarray
    source: str
    runs: int | None = None
    m_se: np.ndarray | None = None


def clt_params_symbolic(ens):
    """m_j = psi_w(n-j+1)/2 and sigma = diag(psi_w'(n-j+1)/4) from log M_w."""
    n = ens.n
    sym = ens.symbol
    pts = np.arange(n, 0, -1, dtype=float)
    lo, hi = sym.strip
    if pts.min() <= lo or pts.max() >= hi:
        raise StripViolation("strip must contain 1..n")
    d1 = np.array([np.real(log_derivative(sym, s, 1)) for s in pts], dtype=float)
    d2 = np.array([np.real(log_derivative(sym, s, 2)) for s in pts], dtype=float)
    return CltParameters(0.5 * d1, np.diag(0.25 * d2), SYMBOLIC)


def _kahan_mean_cov(x):
    """Mean and covariance with compensated sums, independent of row order."""
    x = np.asarray(x, dtype=float)
    N = x.shape[0]
    mean = np.array([math.fsum(col) for col in x.T]) / N
    c = x - mean
    cov = np.array([[math.fsum(c[:, i] * c[:, j]) for j in range(x.shape[1])]
                    for i in range(x.shape[1])]) / (N - 1)
    return mean, 0.5 * (cov + cov.T)


def clt_params_empirical(spec, runs, seed, workers=None):
    """Sample mean and covariance of (log R_11, ..., log R_nn) over single draws."""
    out = product_chain_batch([spec], runs, seed, workers=workers)
    logr = out.log_r
    mean, cov = _kahan_mean_cov(logr)
    se = np.sqrt(np.diag(cov) / runs)
    return CltParameters(mean, cov, EMPIRICAL, runs, se)


def _stats(values, M, ref_m, ref_sigma):
    """Mean, covariance and KS of sqrt(M)-standardized components."""
    mean, cov = _kahan_mean_cov(values)
    ks = None
    if ref_m is not None:
        sd = np.sqrt(np.diag(ref_sigma))
        # a component without spread (deterministic factor) has no KS distance
        ks = [ks_statistic(math.sqrt(M) * (values[:, k] - ref_m[k]) / sd[k], normal_cdf)
              if sd[k] > 0 else None for k in range(values.shape[1])]
    return {"mean": mean, "cov": cov, "ks_normal": ks}


def exponent_mc(spec, M, runs, seed, reference=None, workers=None):
    """Lyapunov (1/M) log sigma_k and stability (1/M) log |lambda_k| statistics.

    ``reference`` (CltParameters) standardizes the KS distances; by default
    the empirical mean and the covariance scaled by M are used.
    """
    out = product_chain_batch([spec] * M, runs, seed, workers=workers)
    lyap = out.log_sv / M
    stab = out.log_abs_ev / M
    if reference is None:
        m0, c0 = _kahan_mean_cov(lyap)
        reference = CltParameters(m0, c0 * M, EMPIRICAL, runs)
    return {
        "lyapunov": _stats(lyap, M, reference.m, reference.sigma),
        "stability": _stats(stab, M, reference.m, reference.sigma),
        "lyapunov_samples": lyap,
        "stability_samples": stab,
        "runs": runs,
        "M": M,
        "fallback_fraction": float(np.mean(out.eig_fallback)),
    }


def rdiag_marginal_cdf(ens, j, panels=600):
    """Distribution function of R_jj^2 with density r^(n-j) w(r) / M_w(n-j+1)."""
    n = ens.n
    if not 1 <= j <= n:
        raise ValueError("need 1 <= j <= n")
    s = n - j + 1
    lo, hi = ens.symbol.strip
    if not lo < s < hi:
        raise StripViolation(f"strip does not contain {s}")
    norm = ens.moment(s)
    dens = lambda r: np.power(r, n - j) * ens.omega(r) / norm
    return CumulativeTable(dens, ens.window, norm=1.0, panels=panels)
