"""Gauss-Legendre panel quadrature helpers used across the package."""

from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import NonConvergent


@lru_cache(maxsize=None)
def gl_rule(order):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(a, b, panels, order):
    """Composite GL nodes/weights on [a, b] with equal panels."""
    x, w = gl_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _rule(f, lo, hi, order):
    x, w = gl_rule(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel()))
    vals = vals.reshape(nodes.shape + vals.shape[1:])
    wts = (half[:, None] * w[None, :]).reshape(nodes.shape + (1,) * (vals.ndim - 2))
    return (vals * wts).sum(axis=1)


def adaptive_gl(f, a, b, rtol=1e-10, atol=0.0, order=15, initial=8,
                max_intervals=50000):
    """Globally adaptive GL quadrature of a vectorized integrand.

    ``f`` maps a 1-d node array to values of shape ``(N,)`` or ``(N, ...)``
    (real or complex).  Intervals whose half/whole discrepancy exceeds their
    share of ``max(atol, rtol*|I|)`` are bisected until the summed error
    estimate meets the target.  Integrable endpoint singularities are fine.
    """
    a = float(a)
    b = float(b)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integration limits must be finite")
    if a == b:
        return 0.0
    edges = np.linspace(a, b, initial + 1)
    lo, hi = edges[:-1], edges[1:]
    acc_val = 0.0
    acc_err = 0.0
    seen = 0
    length = b - a
    while True:
        mid = 0.5 * (lo + hi)
        whole = _rule(f, lo, hi, order)
        fine = _rule(f, lo, mid, order) + _rule(f, mid, hi, order)
        err = np.abs(fine - whole)
        if err.ndim > 1:
            err = err.reshape(err.shape[0], -1).max(axis=1)
        estimate = acc_val + fine.sum(axis=0)
        scale = np.max(np.abs(estimate)) if np.ndim(estimate) else abs(estimate)
        target = max(atol, rtol * scale)
        if acc_err + err.sum() <= target:
            return estimate
        share = (hi - lo) / length
        ok = (err <= target * share) | (hi - lo < 1e-13 * length)
        if ok.all():
            return estimate
        acc_val = acc_val + fine[ok].sum(axis=0)
        acc_err += err[ok].sum()
        seen += lo.size
        if seen > max_intervals:
            raise NonConvergent(f"adaptive quadrature exceeded {max_intervals} intervals")
        bad = ~ok
        lo, hi = np.concatenate([lo[bad], mid[bad]]), np.concatenate([mid[bad], hi[bad]])


def log_window(g, lo=-80.0, hi=80.0, rel=1e-18, points=1601, bounds=(-np.inf, np.inf)):
    """Interval in u = log(x) outside which |g(e^u) e^u| is negligible.

    ``bounds`` are hard limits in u (e.g. log of a compact support edge).
    """
    lo = max(lo, bounds[0])
    hi = min(hi, bounds[1])
    u = np.linspace(lo, hi, points)
    with np.errstate(all="ignore"):
        vals = np.abs(np.asarray(g(np.exp(u)), dtype=complex)) * np.exp(u)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    peak = vals.max()
    if peak <= 0:
        raise NonConvergent("function vanishes on the scanned window")
    keep = np.nonzero(vals > rel * peak)[0]
    step = u[1] - u[0]
    ulo = max(u[keep[0]] - 2 * step, bounds[0])
    uhi = min(u[keep[-1]] + 2 * step, bounds[1])
    return float(ulo), float(uhi)


class CumulativeTable:
    """Monotone cdf of a density on (0, inf) tabulated in log coordinates.

    ``density`` is vectorized in x.  The cumulative integral is computed
    with GL panels and interpolated by a cubic Hermite spline whose slopes
    are the exact density values at panel edges.
    """

    def __init__(self, density, window, norm=None, panels=600, order=10):
        ulo, uhi = window
        self.window = (float(ulo), float(uhi))
        edges = np.linspace(ulo, uhi, panels + 1)
        nodes, weights = panel_nodes(ulo, uhi, panels, order)
        allu = np.concatenate([nodes, edges])
        vals = np.asarray(density(np.exp(allu)), dtype=float) * np.exp(allu)
        gvals, evals = vals[: nodes.size], vals[nodes.size:]
        per_panel = (gvals * weights).reshape(panels, order).sum(axis=1)
        cum = np.concatenate([[0.0], np.cumsum(per_panel)])
        self.total = float(cum[-1])
        self.norm = self.total if norm is None else float(norm)
        self._spline = CubicHermiteSpline(edges, cum, evals)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        with np.errstate(divide="ignore"):
            u = np.log(x)
        below = u <= self.window[0]
        above = u >= self.window[1]
        mid = ~(below | above)
        out[below] = 0.0
        out[above] = self.total / self.norm
        out[mid] = self._spline(u[mid]) / self.norm
        out = np.clip(out, 0.0, max(1.0, self.total / self.norm))
        return out[()] if out.ndim == 0 else out
