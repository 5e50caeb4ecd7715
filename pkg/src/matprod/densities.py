"""Joint densities of squared singular values and eigenvalues."""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .ensembles import interpolating
from .errors import NonConvergent, ParameterOutOfRange, QuadratureFailure
from .quadrature import adaptive_gl, gl_rule, log_window

FLUSH = 1e-300


@dataclass
class DensityReport:
    value: float
    components: tuple  # (vandermonde part, weight part, normalization)
    nonneg_flag: bool
    flushed: bool = False


def vandermonde(x):
    """prod_{i<j} (x_j - x_i) over the last axis (complex allowed)."""
    x = np.asarray(x)
    n = x.shape[-1]
    out = np.ones(x.shape[:-1], dtype=x.dtype)
    for i in range(n):
        for j in range(i + 1, n):
            out = out * (x[..., j] - x[..., i])
    return out


def log_factorial_sum(n):
    """log prod_{j=0}^{n} j!"""
    return float(sum(gammaln(j + 1) for j in range(n + 1)))


def normalization_sv(ens):
    """C_sv = 1 / (prod_{j=0}^n j! prod_{j=1}^n Mw(j)) or the general moment form."""
    if ens.kind == "general":
        return general_normalization(ens)
    moms = np.array([ens.moment(j) for j in range(1, ens.n + 1)])
    sign = np.prod(np.sign(moms))
    return float(sign * math.exp(-log_factorial_sum(ens.n) - np.sum(np.log(np.abs(moms)))))


def normalization_ev(ens):
    """C_ev = C_sv prod_{j=0}^{n-1} j! / pi^n."""
    n = ens.n
    return normalization_sv(ens) * math.exp(log_factorial_sum(n - 1)) / math.pi**n


def moment_matrix(ens, rtol=1e-8):
    """[int a^(k-1) w_{j-1}(a) da]_{j,k} by adaptive quadrature in log coordinates."""
    n = ens.n
    ulo, uhi = ens.window
    out = np.empty((n, n))
    ks = np.arange(1, n + 1)
    for j in range(n):
        f = lambda u, j=j: ens.weight(j, np.exp(u))[:, None] * np.exp(np.outer(u, ks))
        try:
            out[j] = adaptive_gl(f, ulo, uhi, rtol=rtol, atol=1e-300)
        except NonConvergent as exc:
            raise QuadratureFailure(f"moment quadrature for w_{j} failed") from exc
    return out


def general_normalization(ens):
    cache = ens.__dict__.setdefault("_norm_cache", {})
    if "C" not in cache:
        det = np.linalg.det(moment_matrix(ens))
        cache["C"] = 1.0 / (math.factorial(ens.n) * det)
    return cache["C"]


def weight_matrix(ens, a):
    """[w_j(a_k)] for a of shape (..., n); returns (..., n, n)."""
    a = np.asarray(a, dtype=float)
    flat = a.reshape(-1)
    uniq, inv = np.unique(flat, return_inverse=True)
    W = np.stack([np.asarray(ens.weight(j, uniq), dtype=float)[inv] for j in range(ens.n)])
    W = W.reshape((ens.n,) + a.shape)
    return np.moveaxis(W, 0, -2)


def _check_points(a, n):
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != n:
        raise ValueError(f"points need {n} coordinates")
    if np.any(~(a > 0)):
        raise ValueError("squared singular values must be positive")
    return a


def jpdf_sv_values(ens, a):
    """Vectorized squared-singular-value density, a of shape (..., n)."""
    a = _check_points(a, ens.n)
    W = weight_matrix(ens, a)
    val = normalization_sv(ens) * vandermonde(a) * np.linalg.det(W)
    return np.where(np.abs(val) < FLUSH, 0.0, val)


def jpdf_sv(ens, a):
    """Density report C * Delta(a) * det[w_{j-1}(a_k)] at one point."""
    a = _check_points(a, ens.n)
    if a.ndim != 1:
        raise ValueError("jpdf_sv takes one point; use jpdf_sv_values for batches")
    C = normalization_sv(ens)
    vdm = float(vandermonde(a))
    det = float(np.linalg.det(weight_matrix(ens, a)))
    value = C * vdm * det
    flushed = abs(value) < FLUSH and value != 0.0
    if flushed:
        value = 0.0
    return DensityReport(value, (vdm, det, C), bool(value >= 0), flushed)


def jpdf_ev_values(ens, z):
    """Vectorized eigenvalue density, z of shape (..., n) complex."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != ens.n:
        raise ValueError(f"points need {ens.n} coordinates")
    r2 = np.abs(z) ** 2
    if np.any(r2 == 0):
        raise ValueError("eigenvalue density points must be nonzero")
    flat = r2.reshape(-1)
    uniq, inv = np.unique(flat, return_inverse=True)
    om = np.asarray(ens.weight(0, uniq), dtype=float)[inv].reshape(r2.shape)
    val = normalization_ev(ens) * np.abs(vandermonde(z)) ** 2 * np.prod(om, axis=-1)
    return np.where(np.abs(val) < FLUSH, 0.0, val)


def jpdf_ev(ens, z):
    """Density report C_ev |Delta(z)|^2 prod w(|z_j|^2) at one point."""
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or z.size != ens.n:
        raise ValueError(f"jpdf_ev takes one point with {ens.n} coordinates")
    if np.any(z == 0):
        raise ValueError("eigenvalue density points must be nonzero")
    C = normalization_ev(ens)
    vdm = float(np.abs(vandermonde(z)) ** 2)
    prod = float(np.prod(ens.weight(0, np.abs(z) ** 2)))
    value = C * vdm * prod
    flushed = abs(value) < FLUSH and value != 0.0
    if flushed:
        value = 0.0
    return DensityReport(value, (vdm, prod, C), bool(value >= 0), flushed)


# ---------------------------------------------------------------------------
# interpolating parameter region and signed-density scanner


def _natural(v):
    return float(v) == round(float(v)) and v >= 0


def region_check(n, p, q):
    """True iff (p in N0 or p > n-1) and (q in N0 or q > n-1)."""
    if not (p >= 0 and q >= 0 and p + q > 0):
        raise ParameterOutOfRange("need p, q >= 0 and p + q > 0")
    return bool((_natural(p) or p > n - 1) and (_natural(q) or q > n - 1))


@dataclass
class ScanConfig:
    alphas: tuple = (5.0, 10.0, 20.0, 40.0)
    xn_grid: np.ndarray = field(default_factory=lambda: np.logspace(-4, 2, 200))
    lattice: np.ndarray = field(default_factory=lambda: np.logspace(-4, 2, 25))
    threshold: float = 1e-7


@dataclass
class ScanResult:
    verdict: str  # "negative_found" | "none_found"
    witness: tuple | None
    value: float | None
    evaluated: int


def scan_points(n, config):
    lattice = np.asarray(config.lattice, dtype=float)
    pts = [np.array(list(itertools.combinations(lattice, n)), dtype=float).reshape(-1, n)]
    grid = np.asarray(config.xn_grid, dtype=float)
    for alpha in config.alphas:
        head = np.exp(-alpha / np.arange(1, n))
        fam = np.column_stack([np.tile(head, (grid.size, 1)), grid])
        pts.append(fam)
    pts = np.concatenate(pts)
    # drop points with coinciding coordinates (density vanishes there)
    srt = np.sort(pts, axis=1)
    distinct = np.all(np.diff(srt, axis=1) > 0, axis=1) if n > 1 else np.ones(len(pts), bool)
    return pts[distinct]


def positivity_scan(n, p, q, config=None):
    """Search for points where the interpolating sv density is negative."""
    config = config or ScanConfig()
    ens = interpolating(n, p, q)
    pts = scan_points(n, config)
    W = weight_matrix(ens, pts)
    det = np.linalg.det(W)
    vdm = vandermonde(pts)
    values = normalization_sv(ens) * vdm * det
    # Hadamard bound guards against roundoff-level "negatives"
    bound = np.prod(np.linalg.norm(W, axis=-2), axis=-1)
    significant = np.sign(vdm) * det < -config.threshold * bound
    if not significant.any():
        return ScanResult("none_found", None, None, len(pts))
    idx = np.nonzero(significant)[0]
    cand = pts[idx]
    order = np.lexsort(tuple(cand[:, k] for k in reversed(range(n))) + (values[idx],))
    best = idx[order[0]]
    return ScanResult("negative_found", tuple(float(v) for v in pts[best]),
                      float(values[best]), len(pts))


# ---------------------------------------------------------------------------
# normalization by tensor quadrature


def _tensor_nodes(window, panels, order):
    x, w = gl_rule(order)
    edges = np.linspace(window[0], window[1], panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wu = (half[:, None] * w[None, :]).ravel()
    return u, wu


def integration_window(ens, rel=1e-9):
    """Tighter log window for normalization-grade integrals."""
    n = ens.n
    lo = math.log(ens.support[0]) if ens.support[0] > 0 else -np.inf
    hi = math.log(ens.support[1]) if ens.support[1] < math.inf else np.inf
    ulo, uhi = ens.window
    return log_window(lambda a: np.abs(ens.weight(0, a)) * (1 + a ** (n - 1)),
                      lo=ulo, hi=uhi, rel=rel, bounds=(lo, hi))


def _sv_level(ens, window, panels, order, factor, integrand=None):
    n = ens.n
    C = normalization_sv(ens)
    u, wu = _tensor_nodes(window, panels, order)
    a1 = np.exp(u)
    W = np.stack([np.asarray(ens.weight(j, a1), dtype=float) for j in range(n)])
    wa = wu * a1
    m = u.size
    if n > 1:
        combos = np.indices((m,) * (n - 1)).reshape(n - 1, -1).T
    else:
        combos = np.zeros((1, 0), dtype=int)
    total = 0.0
    for i in range(m):
        idx = np.column_stack([np.full(len(combos), i), combos])
        A = a1[idx]
        M = W[:, idx].transpose(1, 0, 2)
        if integrand is not None:
            val = integrand(A, M) * np.prod(wa[idx], axis=1)
        else:
            val = C * vandermonde(A) * np.linalg.det(M) * np.prod(wa[idx], axis=1)
        if factor is not None:
            val = val * factor(A)
        total = total + val.sum()
    return total


def tensor_sv_integral(ens, factor=None, rtol=1e-5, order=12, start=4, max_nodes=400,
                       window=None, integrand=None):
    """int over (0,inf)^n of jpdf_sv(a) * factor(a) da by tensor GL in log a.

    The integrand is symmetric, so this equals n! times the integral over
    the ordered region.  Panels double until successive values agree.
    ``integrand(A, M)`` replaces the density, given points A and weight
    matrices M[i, j, k] = w_j(A[i, k]).
    """
    window = window or integration_window(ens)
    prev = None
    panels = start
    while panels * order <= max_nodes:
        total = _sv_level(ens, window, panels, order, factor, integrand)
        if prev is not None and abs(total - prev) <= rtol * abs(total):
            return total
        prev = total
        panels *= 2
    raise NonConvergent("tensor quadrature did not converge")


def tensor_ev_integral(ens, rtol=1e-5, order=12, start=4, max_nodes=400, window=None):
    """int over C^n of jpdf_ev: GL in log|z|^2, exact trapezoid in the angles."""
    n = ens.n
    window = window or integration_window(ens)
    C = normalization_ev(ens)
    nth = n + 1
    theta = 2 * math.pi * np.arange(nth) / nth
    # first angle fixed by rotation invariance
    ang = np.indices((nth,) * (n - 1)).reshape(n - 1, -1).T if n > 1 else np.zeros((1, 0), int)
    phases = np.exp(1j * np.column_stack([np.zeros(len(ang)), theta[ang]]))
    ang_weight = 2 * math.pi * (2 * math.pi / nth) ** (n - 1)
    prev = None
    panels = start
    while True:
        u, wu = _tensor_nodes(window, panels, order)
        if u.size > max_nodes:
            raise NonConvergent("tensor quadrature did not converge")
        a1 = np.exp(u)
        om = np.asarray(ens.weight(0, a1), dtype=float)
        # |z| dr dtheta = (1/2) da dtheta, da = a du
        radial_w = 0.5 * wu * a1 * om
        r = np.sqrt(a1)
        m = u.size
        grid = np.indices((m,) * n).reshape(n, -1).T
        total = 0.0
        for chunk in np.array_split(grid, max(1, len(grid) // 20000)):
            Z = r[chunk][:, None, :] * phases[None, :, :]
            avg = (np.abs(vandermonde(Z)) ** 2).sum(axis=1) * ang_weight
            total += (avg * np.prod(radial_w[chunk], axis=1)).sum()
        total *= C
        if prev is not None and abs(total - prev) <= rtol * abs(total):
            return total
        prev = total
        panels *= 2
