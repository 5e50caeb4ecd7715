"""Symbolic Mellin transforms and numerical (inverse) Mellin evaluation.

A :class:`MellinSymbol` represents

    prefactor * rho**s * poly(s) * exp(A s^2 + B s + C) * prod Gamma(beta_i s + gamma_i)**p_i

on an open strip ``smin < Re s < smax``.  All parameters are real.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import digamma, loggamma, polygamma

from .errors import BranchError, EmptyStrip, NonConvergent, SlowDecay, StripViolation
from .quadrature import adaptive_gl, panel_nodes

INF = math.inf

# decay classes along vertical lines
GAUSSIAN = "gaussian"
EXPONENTIAL = "exponential"
POWER = "power"
INSUFFICIENT = "insufficient"


def _is_integer(p):
    return float(p) == round(float(p))


def _canonical_gammas(factors):
    merged = {}
    for item in factors:
        if len(item) != 3:
            raise ValueError("gamma factors are (p, beta, gamma) triples")
        p, beta, gamma = (float(v) for v in item)
        if beta == 0.0:
            raise ValueError("gamma factor scale beta must be nonzero")
        key = (beta, gamma)
        merged[key] = merged.get(key, 0.0) + p
    kept = [(p, b, g) for (b, g), p in merged.items() if p != 0.0]
    return tuple(sorted(kept, key=lambda t: (t[1], t[2])))


def _trim_poly(coeffs):
    c = [float(v) for v in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    if not c or all(v == 0.0 for v in c):
        raise ValueError("polynomial factor must be nonzero")
    return tuple(c)


@dataclass(frozen=True)
class MellinSymbol:
    prefactor: float = 1.0
    gamma_factors: tuple = ()
    poly: tuple = (1.0,)
    geo_base: float = 1.0
    gauss: tuple = (0.0, 0.0, 0.0)
    strip: tuple = field(default=(-INF, INF))

    def __post_init__(self):
        pre = self.prefactor
        if isinstance(pre, complex) or np.iscomplexobj(pre):
            raise TypeError("prefactor must be real")
        pre = float(pre)
        if not (pre > 0 and math.isfinite(pre)):
            raise ValueError("prefactor must be a positive finite real")
        rho = self.geo_base
        if isinstance(rho, complex) or np.iscomplexobj(rho):
            raise TypeError("geometric base must be real")
        rho = float(rho)
        if not rho > 0:
            raise ValueError("geometric base must be positive")
        A, B, C = (float(v) for v in self.gauss)
        if A < 0:
            raise ValueError("Gaussian coefficient A must be >= 0")
        lo, hi = (float(v) for v in self.strip)
        if not lo < hi:
            raise EmptyStrip(f"strip ({lo}, {hi}) is empty")
        gammas = _canonical_gammas(self.gamma_factors)
        object.__setattr__(self, "prefactor", pre)
        object.__setattr__(self, "geo_base", rho)
        object.__setattr__(self, "gauss", (A, B, C))
        object.__setattr__(self, "strip", (lo, hi))
        object.__setattr__(self, "gamma_factors", gammas)
        object.__setattr__(self, "poly", _trim_poly(self.poly))
        for p, beta, gamma in gammas:
            if p > 0 or not _is_integer(p):
                # argument must stay in the right half-plane on the whole strip
                edge = lo if beta > 0 else hi
                low_arg = beta * edge + gamma
                if not low_arg >= -1e-12 * max(1.0, abs(gamma)):
                    kind = BranchError if not _is_integer(p) else StripViolation
                    raise kind(
                        f"Gamma({beta}s+{gamma})^{p} has non-positive argument on strip ({lo}, {hi})")

    def is_unit(self):
        return (self.prefactor == 1.0 and not self.gamma_factors and self.poly == (1.0,)
                and self.geo_base == 1.0 and self.gauss == (0.0, 0.0, 0.0))

    def contains(self, s):
        re = np.real(s)
        return bool(np.all((re > self.strip[0]) & (re < self.strip[1])))

    def __call__(self, s):
        return eval_symbol(self, s)


UNIT = MellinSymbol()


def _as_complex(s):
    return np.asarray(s, dtype=complex)


def log_nonpoly(sym, s):
    """Complex log of the symbol without its polynomial factor (no strip check)."""
    s = _as_complex(s)
    A, B, C = sym.gauss
    out = math.log(sym.prefactor) + s * math.log(sym.geo_base) + (A * s + B) * s + C
    for p, beta, gamma in sym.gamma_factors:
        out = out + p * loggamma(beta * s + gamma)
    return out


def eval_poly(sym, s):
    return npoly.polyval(_as_complex(s), sym.poly)


def _check_strip(sym, s):
    if not sym.contains(s):
        raise StripViolation(f"Re(s) outside strip {sym.strip}")


def eval_symbol(sym, s):
    """Evaluate the symbol at complex ``s`` (scalar or array) inside its strip."""
    _check_strip(sym, s)
    s = _as_complex(s)
    val = eval_poly(sym, s) * np.exp(log_nonpoly(sym, s))
    return val[()] if val.ndim == 0 else val


def log_derivative(sym, s, order=1, include_poly=True):
    """Analytic derivative of log M(s) of the given order (1 or 2)."""
    _check_strip(sym, s)
    s = _as_complex(s)
    A, B, _ = sym.gauss
    poly = np.array(sym.poly if include_poly else (1.0,))
    d1 = npoly.polyder(poly) if poly.size > 1 else np.array([0.0])
    P = npoly.polyval(s, poly)
    P1 = npoly.polyval(s, d1)
    if order == 1:
        out = math.log(sym.geo_base) + 2 * A * s + B + P1 / P
        for p, beta, gamma in sym.gamma_factors:
            out = out + p * beta * digamma(beta * s + gamma)
    elif order == 2:
        d2 = npoly.polyder(poly, 2) if poly.size > 2 else np.array([0.0])
        P2 = npoly.polyval(s, d2)
        out = 2 * A + P2 / P - (P1 / P) ** 2 + 0 * s
        for p, beta, gamma in sym.gamma_factors:
            out = out + p * beta * beta * _trigamma(beta * s + gamma)
    else:
        raise ValueError("order must be 1 or 2")
    return out[()] if np.ndim(out) == 0 else out


def _trigamma(z):
    z = np.asarray(z)
    if np.iscomplexobj(z) and np.any(np.imag(z) != 0):
        # polygamma lacks complex support; use recurrence plus asymptotics
        return _trigamma_complex(z)
    return polygamma(1, np.real(z)).astype(complex)


def _trigamma_complex(z):
    z = np.array(z, dtype=complex)
    acc = np.zeros_like(z)
    while True:
        small = np.real(z) < 12
        if not small.any():
            break
        acc = acc + np.where(small, 1.0 / z**2, 0)
        z = np.where(small, z + 1, z)
    inv = 1.0 / z
    inv2 = inv * inv
    series = inv + inv2 / 2 + inv * inv2 * (1 / 6 - inv2 * (1 / 30 - inv2 * (1 / 42 - inv2 / 30)))
    return acc + series


def convolve_symbols(a, b):
    """Symbol of the multiplicative convolution: factor-wise product."""
    lo = max(a.strip[0], b.strip[0])
    hi = min(a.strip[1], b.strip[1])
    if not lo < hi:
        raise EmptyStrip(f"strips {a.strip} and {b.strip} are disjoint")
    return MellinSymbol(
        prefactor=a.prefactor * b.prefactor,
        gamma_factors=a.gamma_factors + b.gamma_factors,
        poly=tuple(npoly.polymul(a.poly, b.poly)),
        geo_base=a.geo_base * b.geo_base,
        gauss=tuple(x + y for x, y in zip(a.gauss, b.gauss)),
        strip=(lo, hi),
    )


def derivative_symbol(sym, k):
    """Symbol of (-x d/dx)^k applied to the represented function."""
    k = int(k)
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return sym
    return MellinSymbol(sym.prefactor, sym.gamma_factors, (0.0,) * k + tuple(sym.poly),
                        sym.geo_base, sym.gauss, sym.strip)


def multiply_poly(sym, coeffs, scale=1.0):
    """Symbol times a polynomial in s (ascending coefficients) and a positive scale."""
    return MellinSymbol(sym.prefactor * scale, sym.gamma_factors,
                        tuple(npoly.polymul(sym.poly, coeffs)), sym.geo_base, sym.gauss, sym.strip)


def reflect_symbol(sym, n):
    """Symbol of s -> M(n+1-s), the transform of w(1/a) a^(-n-1)."""
    N = float(n) + 1.0
    A, B, C = sym.gauss
    gammas = tuple((p, -beta, beta * N + gamma) for p, beta, gamma in sym.gamma_factors)
    poly = npoly.Polynomial(sym.poly)(npoly.Polynomial([N, -1.0])).coef
    return MellinSymbol(
        prefactor=sym.prefactor * sym.geo_base ** N,
        gamma_factors=gammas,
        poly=tuple(poly),
        geo_base=1.0 / sym.geo_base,
        gauss=(A, -(2 * A * N + B), A * N * N + B * N + C),
        strip=(N - sym.strip[1], N - sym.strip[0]),
    )


def symbols_close(a, b, rtol=1e-12, atol=1e-14):
    """Field-wise comparison of two canonical symbols up to float noise."""
    def close(x, y):
        if math.isinf(x) or math.isinf(y):
            return x == y
        return abs(x - y) <= atol + rtol * max(abs(x), abs(y))

    if len(a.gamma_factors) != len(b.gamma_factors):
        return False
    for fa, fb in zip(a.gamma_factors, b.gamma_factors):
        if not all(close(x, y) for x, y in zip(fa, fb)):
            return False
    pa, pb = list(a.poly), list(b.poly)
    size = max(len(pa), len(pb))
    pa += [0.0] * (size - len(pa))
    pb += [0.0] * (size - len(pb))
    fields = [(a.prefactor, b.prefactor), (a.geo_base, b.geo_base)]
    fields += list(zip(pa, pb)) + list(zip(a.gauss, b.gauss)) + list(zip(a.strip, b.strip))
    return all(close(x, y) for x, y in fields)


# ---------------------------------------------------------------------------
# decay along vertical lines


def decay_info(sym, c):
    """Large-|t| behaviour of |M(c+it)|: (class, kappa, A, power).

    |M| ~ |t|^power * exp(-kappa |t| - A t^2).
    """
    kappa = 0.5 * math.pi * sum(p * abs(beta) for p, beta, _ in sym.gamma_factors)
    A = sym.gauss[0]
    power = sum(p * (beta * c + gamma - 0.5) for p, beta, gamma in sym.gamma_factors)
    power += len(sym.poly) - 1
    if A > 0:
        cls = GAUSSIAN
    elif kappa > 1e-12:
        cls = EXPONENTIAL
    elif abs(kappa) <= 1e-12 and power < -1.0 - 1e-9:
        cls = POWER
    else:
        cls = INSUFFICIENT
    return cls, kappa, A, power


def _effective_range(sym, margin=None):
    lo, hi = sym.strip
    width = hi - lo
    if margin is None:
        margin = min(0.1, width / 10) if math.isfinite(width) else 0.1
    a = lo + margin if math.isfinite(lo) else -400.0
    b = hi - margin if math.isfinite(hi) else 400.0
    a = max(a, -400.0)
    b = min(b, 400.0)
    if a > b:
        a = b = 0.5 * (lo + hi)
    return a, b


SADDLE_LIMIT = 1e8


def _candidate_abscissae(sym):
    a, b = _effective_range(sym)
    pts = [np.linspace(a, b, 201)]
    core = np.linspace(-20, 20, 161)
    pts.append(core[(core >= a) & (core <= b)])
    for edge, sign in ((sym.strip[0], 1), (sym.strip[1], -1)):
        if math.isfinite(edge):
            off = np.geomspace(abs(a - sym.strip[0]) if sign > 0 else abs(sym.strip[1] - b), 50, 80)
            cand = edge + sign * off
            pts.append(cand[(cand >= a) & (cand <= b)])
    grid = np.unique(np.concatenate(pts))
    cls = np.array([decay_info(sym, c)[0] for c in grid])
    grid = grid[cls != INSUFFICIENT]
    if grid.size == 0:
        raise SlowDecay("symbol decays too slowly on every vertical line of its strip")
    return grid


def saddle_abscissa(sym, lnx):
    """Real-axis saddle of |M(c) x^-c| restricted to admissible lines."""
    lnx = np.atleast_1d(np.asarray(lnx, dtype=float))
    grid = _candidate_abscissae(sym)
    base = np.real(log_nonpoly(sym, grid))
    obj = base[None, :] - grid[None, :] * lnx[:, None]
    obj = np.where(np.isfinite(obj), obj, np.inf)
    c = grid[np.argmin(obj, axis=1)]
    # Newton may leave the candidate grid towards an infinite strip edge
    lo = grid[0] if math.isfinite(sym.strip[0]) else -SADDLE_LIMIT
    hi = grid[-1] if math.isfinite(sym.strip[1]) else SADDLE_LIMIT
    best = np.real(log_nonpoly(sym, c)) - c * lnx
    for _ in range(60):
        g1 = np.real(log_derivative(sym, c, 1, include_poly=False)) - lnx
        g2 = np.real(log_derivative(sym, c, 2, include_poly=False))
        step = np.where(g2 > 0, -g1 / np.where(g2 > 0, g2, 1.0), 0.0)
        trial = np.clip(c + step, lo, hi)
        val = np.real(log_nonpoly(sym, trial)) - trial * lnx
        better = np.isfinite(val) & (val < best)
        if not better.any():
            break
        c = np.where(better, trial, c)
        best = np.where(better, val, best)
    if sym.poly != (1.0,):
        # stay off real zeros of the polynomial factor
        pv = np.abs(npoly.polyval(c, sym.poly))
        near = pv < 1e-8 * (1 + np.abs(npoly.polyval(c, np.abs(sym.poly))))
        c = np.where(near, np.clip(c + 0.05, lo, hi), c)
    return c


def _pole_scale(sym, c):
    """Distance from c to the nearest Gamma pole, capped at 1."""
    eps = np.ones_like(c)
    for p, beta, gamma in sym.gamma_factors:
        if p <= 0 and _is_integer(p):
            continue
        z = beta * c + gamma  # > 0 on the strip
        eps = np.minimum(eps, np.abs(z / beta))
    g2 = np.real(log_derivative(sym, c, 2, include_poly=False))
    with np.errstate(divide="ignore", invalid="ignore"):
        width = np.where(g2 > 1.0, 1.0 / np.sqrt(np.abs(g2)), 1.0)
    return np.maximum(np.minimum(eps, width), 1e-6)


_SCAN = np.concatenate([[0.0], np.logspace(-2, 10, 289)])


def _truncation(sym, c, eps, tol):
    """Cut-off T per abscissa so the discarded tails are below tol * L1."""
    t = eps[:, None] * _SCAN[None, :]
    s = c[:, None] + 1j * t
    with np.errstate(all="ignore"):
        L = np.real(log_nonpoly(sym, s)) + np.log(np.abs(eval_poly(sym, s)) + 1e-300)
    L = np.where(np.isnan(L), -np.inf, L)
    peak = L.max(axis=1)
    rel = np.exp(L - peak[:, None])
    l1 = 2 * np.trapezoid(rel, t, axis=1)
    widths = np.empty_like(t)
    for i, ci in enumerate(c):
        cls, kappa, A, power = decay_info(sym, ci)
        if cls == INSUFFICIENT:
            raise SlowDecay(f"insufficient decay on line Re s = {ci}")
        if cls == POWER:
            widths[i] = t[i] / (-power - 1.0)
        else:
            widths[i] = np.maximum(t[i], 1.0)
    with np.errstate(divide="ignore"):
        tail = L - peak[:, None] + np.log(widths) + math.log(2)
    ok = tail <= np.log(0.1 * tol * l1)[:, None]
    # smallest index from which every later scan point is below threshold
    suffix_ok = np.flip(np.logical_and.accumulate(np.flip(ok, axis=1), axis=1), axis=1)
    if not suffix_ok[:, -1].all():
        raise NonConvergent("could not bound the contour tail")
    first = np.argmax(suffix_ok, axis=1)
    T = t[np.arange(len(c)), np.maximum(first, 1)]
    return T, l1 / eps


def _integrate_lines(sym, lnx, c, tol, order=16, start=8, max_panels=None):
    if max_panels is None:
        power_law = any(decay_info(sym, ci)[0] == POWER for ci in np.unique(c))
        max_panels = 65536 if power_law else 4096
    eps = _pole_scale(sym, c)
    T, l1_est = _truncation(sym, c, eps, tol)
    V = np.arcsinh(T / eps)
    base = np.real(log_nonpoly(sym, c + 0j))
    out = np.zeros(lnx.size)
    # results that underflow double precision need no quadrature
    with np.errstate(divide="ignore"):
        log_bound = base - c * lnx + np.log(l1_est * eps)
    todo = np.nonzero(log_bound > math.log(1e-305))[0]
    if todo.size == 0:
        return out
    prev = None
    panels = start
    while True:
        v, w = panel_nodes(-1.0, 1.0, panels, order)
        val = np.empty(todo.size, dtype=complex)
        l1 = np.empty(todo.size)
        rows = max(1, 2_000_000 // v.size)
        for j in range(0, todo.size, rows):
            sel = todo[j:j + rows]
            vv = V[sel, None] * v[None, :]
            t = eps[sel, None] * np.sinh(vv)
            jac = eps[sel, None] * V[sel, None] * np.cosh(vv) * w[None, :]
            s = c[sel, None] + 1j * t
            with np.errstate(under="ignore", over="ignore"):
                F = eval_poly(sym, s) * np.exp(log_nonpoly(sym, s) - base[sel, None]
                                               - 1j * t * lnx[sel, None]) * jac
            val[j:j + rows] = F.sum(axis=1)
            l1[j:j + rows] = np.abs(F).sum(axis=1)
        if prev is not None:
            diff = np.abs(val - prev)
            done = diff <= tol * np.abs(val) + 1e-2 * tol * l1
            imag_ok = np.abs(val.imag) <= tol * np.abs(val.real) + tol * l1
            if np.any(done & ~imag_ok):
                raise NonConvergent("imaginary part of the inversion did not vanish")
            idx = todo[done]
            out[idx] = val.real[done]
            todo = todo[~done]
            val = val[~done]
            if todo.size == 0:
                break
        if panels >= max_panels:
            raise NonConvergent("contour panel refinement stalled")
        prev = val
        panels *= 2
    with np.errstate(under="ignore", over="ignore"):
        scale = np.exp(base - c * lnx) / (2 * math.pi)
    return out * scale


def inverse_mellin(sym, x, tol=1e-10, c=None):
    """Inverse Mellin transform (1/2 pi i) int M(s) x^-s ds along Re s = c.

    By default the abscissa is the real saddle of |M(c) x^-c| inside the
    strip, chosen per x.  Vectorized over ``x``.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    flat = np.atleast_1d(x).ravel()
    if np.any(~(flat > 0)):
        raise ValueError("inverse Mellin needs x > 0")
    lnx = np.log(flat)
    if c is None:
        cs = saddle_abscissa(sym, lnx)
    else:
        if not sym.contains(c):
            raise StripViolation(f"abscissa {c} outside strip {sym.strip}")
        if decay_info(sym, c)[0] == INSUFFICIENT:
            raise SlowDecay(f"insufficient decay on line Re s = {c}")
        cs = np.full(flat.size, float(c))
    out = _integrate_lines(sym, lnx, cs, tol)
    return float(out[0]) if scalar else out.reshape(x.shape)


def mellin_numeric(f, s, window, tol=1e-10):
    """Direct quadrature of int f(x) x^(s-1) dx over ``window`` in log coordinates."""
    lo, hi = window
    if not (0 < lo < hi):
        raise ValueError("window must satisfy 0 < lo < hi")
    s = complex(s)

    def integrand(u):
        return np.asarray(f(np.exp(u))) * np.exp(s * u)

    return complex(adaptive_gl(integrand, math.log(lo), math.log(hi), rtol=tol))
