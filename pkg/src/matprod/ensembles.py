"""Polynomial ensembles of derivative type, general ensembles and their algebra."""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import comb, gammaln

from .errors import (DimensionMismatch, NonConvergent, ParameterOutOfRange, SlowDecay,
                     StripViolation)
from .mellin import (INSUFFICIENT, MellinSymbol, convolve_symbols, decay_info,
                     derivative_symbol, eval_symbol, inverse_mellin, reflect_symbol)
from .quadrature import adaptive_gl, log_window

# ---------------------------------------------------------------------------
# closed forms of (-x d/dx)^k omega


class ClosedForm:
    """Exact iterated derivatives D^k w, D = -x d/dx, for a family weight."""

    support = (0.0, math.inf)

    def __init__(self):
        self._polys = [Polynomial([1.0])]

    def _poly(self, k):
        while len(self._polys) <= k:
            self._polys.append(self._step(self._polys[-1], len(self._polys) - 1))
        return self._polys[k]

    def derivative(self, k, x):
        raise NotImplementedError


class MuttalibBorodinForm(ClosedForm):
    """w(a) = a^nu exp(-alpha a^theta); D^k w = w(a) P_k(a^theta)."""

    def __init__(self, nu, alpha=1.0, theta=1.0):
        super().__init__()
        self.nu, self.alpha, self.theta = float(nu), float(alpha), float(theta)

    def _step(self, P, k):
        u = Polynomial([0.0, 1.0])
        return -self.nu * P + self.alpha * self.theta * u * P - self.theta * u * P.deriv()

    def derivative(self, k, x):
        x = np.asarray(x, dtype=float)
        u = x**self.theta
        with np.errstate(under="ignore"):
            base = np.power(x, self.nu) * np.exp(-self.alpha * u)
        return base * self._poly(k)(u)


class JacobiForm(ClosedForm):
    """w(a) = a^nu (1-a)^(mu-1) on (0,1); D^k w = a^nu (1-a)^(mu-1-k) P_k(a)."""

    support = (0.0, 1.0)

    def __init__(self, nu, mu):
        super().__init__()
        self.nu, self.mu = float(nu), float(mu)

    def _step(self, P, k):
        a = Polynomial([0.0, 1.0])
        m = self.mu - 1 - k
        return -self.nu * (1 - a) * P + m * a * P - a * (1 - a) * P.deriv()

    def derivative(self, k, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        inside = (x > 0) & (x < 1)
        xi = x[inside]
        with np.errstate(under="ignore"):
            base = np.exp(self.nu * np.log(xi) + (self.mu - 1 - k) * np.log1p(-xi))
        out[inside] = base * self._poly(k)(xi)
        return out[()] if out.ndim == 0 else out


class CauchyForm(ClosedForm):
    """w(x) = x^nu (1+x)^(-mu-nu-1); D^k w = x^nu (1+x)^(-lambda-k) P_k(x)."""

    def __init__(self, nu, mu):
        super().__init__()
        self.nu, self.mu = float(nu), float(mu)
        self.lam = self.mu + self.nu + 1

    def _step(self, P, k):
        x = Polynomial([0.0, 1.0])
        m = self.lam + k
        return -self.nu * (1 + x) * P + m * x * P - x * (1 + x) * P.deriv()

    def derivative(self, k, x):
        x = np.asarray(x, dtype=float)
        base = np.exp(self.nu * np.log(x) - (self.lam + k) * np.log1p(x))
        return base * self._poly(k)(x)


class LogNormalForm(ClosedForm):
    """w(a) = a^nu exp(-alpha (log a)^2); D^k w = w(a) P_k(log a)."""

    def __init__(self, nu, alpha):
        super().__init__()
        self.nu, self.alpha = float(nu), float(alpha)

    def _step(self, P, k):
        L = Polynomial([0.0, 1.0])
        return -self.nu * P + 2 * self.alpha * L * P - P.deriv()

    def derivative(self, k, x):
        L = np.log(np.asarray(x, dtype=float))
        with np.errstate(under="ignore"):
            base = np.exp(self.nu * L - self.alpha * L * L)
        return base * self._poly(k)(L)


class InvertedForm(ClosedForm):
    """Derivatives of a^(-n-1) w(1/a) expressed through those of w."""

    def __init__(self, base, n):
        super().__init__()
        self.base, self.n = base, int(n)
        lo, hi = base.support
        self.support = (1.0 / hi if hi < math.inf else 0.0, 1.0 / lo if lo > 0 else math.inf)

    def derivative(self, k, x):
        x = np.asarray(x, dtype=float)
        N = self.n + 1
        inv = 1.0 / x
        acc = 0.0
        for i in range(k + 1):
            acc = acc + comb(k, i, exact=True) * N ** (k - i) * (-1) ** i * self.base.derivative(i, inv)
        return acc * inv**N


# ---------------------------------------------------------------------------
# ensembles


class Ensemble:
    """Common interface: dimension ``n``, printable ``expr`` and weights."""

    kind = None

    def weight(self, k, x):
        raise NotImplementedError

    def mellin_weight(self, k, s):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, expr={self.expr!r})"


class DerivativeEnsemble(Ensemble):
    """Weights w_k = (-x d/dx)^k w determined by one Mellin symbol."""

    kind = "derivative"

    def __init__(self, n, symbol, expr="custom", closed=None, support=(0.0, math.inf)):
        self.n = int(n)
        if self.n < 1:
            raise ParameterOutOfRange("dimension n must be >= 1")
        self.symbol = symbol
        self.expr = expr
        self.closed = closed
        self.support = tuple(float(v) for v in support)
        lo, hi = symbol.strip
        if not (lo < 1.0 and hi > self.n):
            raise StripViolation(f"strip {symbol.strip} must contain [1, {self.n}]")
        ints = np.arange(1, self.n + 2)
        vals = np.full(ints.size, np.nan)
        inside = (ints > lo) & (ints < hi)
        vals[inside] = np.real(eval_symbol(symbol, ints[inside].astype(complex)))
        vals.setflags(write=False)
        self._moments = vals

    def __eq__(self, other):
        from .mellin import symbols_close
        return (isinstance(other, DerivativeEnsemble) and other.n == self.n
                and symbols_close(self.symbol, other.symbol))

    __hash__ = object.__hash__

    def moment(self, j):
        """Mw(j) for integer j in 1..n+1 (cached)."""
        val = self._moments[int(j) - 1]
        if not np.isfinite(val):
            raise StripViolation(f"Mw({j}) lies outside the strip {self.symbol.strip}")
        return float(val)

    @property
    def moments(self):
        return self._moments

    def mellin(self, s):
        return eval_symbol(self.symbol, s)

    def mellin_weight(self, k, s):
        return np.asarray(s, dtype=complex) ** k * eval_symbol(self.symbol, s)

    def weight(self, k, x, tol=1e-10):
        x = np.asarray(x, dtype=float)
        if self.closed is not None:
            return self.closed.derivative(k, x)
        return inverse_mellin(derivative_symbol(self.symbol, k), x, tol=tol)

    def omega(self, x):
        return self.weight(0, x)

    @cached_property
    def window(self):
        """Log-coordinate interval holding the mass of w(a)(1 + a^(n-1))."""
        n = self.n
        lo = math.log(self.support[0]) if self.support[0] > 0 else -np.inf
        hi = math.log(self.support[1]) if self.support[1] < math.inf else np.inf
        return log_window(lambda a: np.abs(self.omega(a)) * (1 + a ** (n - 1)), bounds=(lo, hi))


class GeneralEnsemble(Ensemble):
    """Polynomial ensemble with n arbitrary weights and their Mellin transforms."""

    kind = "general"

    def __init__(self, n, weights, mellins, expr="general", support=(0.0, math.inf), window=None):
        self.n = int(n)
        if len(weights) != self.n or len(mellins) != self.n:
            raise DimensionMismatch("a general ensemble needs exactly n weights and Mellin maps")
        self.weights = tuple(weights)
        self.mellins = tuple(mellins)
        self.expr = expr
        self.support = tuple(float(v) for v in support)
        self._window = window

    def weight(self, k, x):
        if not 0 <= k < self.n:
            raise ValueError("general ensembles only provide w_0..w_{n-1}")
        return np.asarray(self.weights[k](np.asarray(x, dtype=float)), dtype=float)

    def mellin_weight(self, k, s):
        return self.mellins[k](s)

    @cached_property
    def window(self):
        if self._window is not None:
            return self._window
        lo = math.log(self.support[0]) if self.support[0] > 0 else -np.inf
        hi = math.log(self.support[1]) if self.support[1] < math.inf else np.inf
        n = self.n
        g = lambda a: sum(np.abs(self.weight(k, a)) for k in range(n)) * (1 + a ** (n - 1))
        return log_window(g, bounds=(lo, hi))


def as_general(ens):
    """View a derivative-type ensemble through its n weights."""
    if ens.kind == "general":
        return ens
    weights = [lambda x, k=k: ens.weight(k, x) for k in range(ens.n)]
    mellins = [lambda s, k=k: ens.mellin_weight(k, s) for k in range(ens.n)]
    return GeneralEnsemble(ens.n, weights, mellins, expr=ens.expr, support=ens.support,
                           window=ens.window)


# ---------------------------------------------------------------------------
# family constructors


def _need(cond, message):
    if not cond:
        raise ParameterOutOfRange(message)


def _fmt(v):
    return repr(float(v)) if float(v) != int(v) else str(int(v))


def laguerre(n, nu=0.0):
    nu = float(nu)
    _need(nu > -1, "Laguerre needs nu > -1")
    sym = MellinSymbol(gamma_factors=((1, 1, nu),), strip=(-nu, math.inf))
    return DerivativeEnsemble(n, sym, f"laguerre(nu={_fmt(nu)})", MuttalibBorodinForm(nu))


def jacobi(n, nu, mu):
    nu, mu = float(nu), float(mu)
    _need(nu > -1, "Jacobi needs nu > -1")
    _need(mu > n - 1, f"Jacobi needs mu > n-1 = {n - 1}")
    sym = MellinSymbol(prefactor=math.exp(gammaln(mu)),
                       gamma_factors=((1, 1, nu), (-1, 1, nu + mu)), strip=(-nu, math.inf))
    return DerivativeEnsemble(n, sym, f"jacobi(nu={_fmt(nu)},mu={_fmt(mu)})",
                              JacobiForm(nu, mu), support=(0.0, 1.0))


def cauchy_lorentz(n, nu, mu):
    nu, mu = float(nu), float(mu)
    _need(nu > -1, "Cauchy-Lorentz needs nu > -1")
    _need(mu > n - 1, f"Cauchy-Lorentz needs mu > n-1 = {n - 1}")
    sym = MellinSymbol(prefactor=math.exp(-gammaln(mu + nu + 1)),
                       gamma_factors=((1, 1, nu), (1, -1, mu + 1)), strip=(-nu, mu + 1))
    return DerivativeEnsemble(n, sym, f"cauchy(nu={_fmt(nu)},mu={_fmt(mu)})", CauchyForm(nu, mu))


def muttalib_borodin(n, nu, alpha, theta):
    nu, alpha, theta = float(nu), float(alpha), float(theta)
    _need(nu > -1, "Muttalib-Borodin needs nu > -1")
    _need(alpha > 0 and theta > 0, "Muttalib-Borodin needs alpha > 0 and theta > 0")
    sym = MellinSymbol(prefactor=alpha ** (-nu / theta) / theta,
                       gamma_factors=((1, 1 / theta, nu / theta),),
                       geo_base=alpha ** (-1 / theta), strip=(-nu, math.inf))
    return DerivativeEnsemble(n, sym,
                              f"mb(nu={_fmt(nu)},alpha={_fmt(alpha)},theta={_fmt(theta)})",
                              MuttalibBorodinForm(nu, alpha, theta))


def lognormal(n, nu, alpha):
    nu, alpha = float(nu), float(alpha)
    _need(alpha > 0, "log-normal needs alpha > 0")
    A = 1 / (4 * alpha)
    sym = MellinSymbol(prefactor=math.sqrt(math.pi / alpha), gauss=(A, 2 * nu * A, nu * nu * A))
    return DerivativeEnsemble(n, sym, f"lognormal(nu={_fmt(nu)},alpha={_fmt(alpha)})",
                              LogNormalForm(nu, alpha))


def interpolating_symbol(n, p, q):
    p, q = float(p), float(q)
    lo = 0.0 if p > 0 else -math.inf
    hi = n + 1.0 if q > 0 else math.inf
    return MellinSymbol(gamma_factors=((p, 1, 0), (q, -1, n + 1)), strip=(lo, hi))


def interpolating(n, p, q):
    p, q = float(p), float(q)
    _need(p >= 0 and q >= 0 and p + q > 0, "interpolating needs p, q >= 0 and p + q > 0")
    closed = None
    if (p, q) == (1.0, 0.0):
        closed = MuttalibBorodinForm(0.0)
    elif (p, q) == (0.0, 1.0):
        closed = InvertedForm(MuttalibBorodinForm(0.0), n)
    return DerivativeEnsemble(n, interpolating_symbol(n, p, q),
                              f"interp(p={_fmt(p)},q={_fmt(q)})", closed)


FAMILIES = {
    "laguerre": (laguerre, ("nu",)),
    "jacobi": (jacobi, ("nu", "mu")),
    "cauchy": (cauchy_lorentz, ("nu", "mu")),
    "mb": (muttalib_borodin, ("nu", "alpha", "theta")),
    "lognormal": (lognormal, ("nu", "alpha")),
    "interp": (interpolating, ("p", "q")),
}


def make_family(name, n, **params):
    """Construct a catalog ensemble by name (see ``FAMILIES``)."""
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}")
    ctor, keys = FAMILIES[name]
    missing = [k for k in keys if k not in params and not (name == "laguerre" and k == "nu")]
    extra = [k for k in params if k not in keys]
    if missing or extra:
        raise ParameterOutOfRange(f"{name} takes parameters {keys}, got {tuple(params)}")
    return ctor(n, **params)


# ---------------------------------------------------------------------------
# algebra


def mult_convolve(f, g, x, window_f, window_g, rtol=1e-7):
    """(f * g)(x) = int f(x/y) g(y) dy/y, integrated in u = log y.

    ``window_f``/``window_g`` are log-coordinate intervals carrying the
    mass of f and g.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape)
    for i, xi in enumerate(x.flat):
        lx = math.log(xi)
        lo = max(window_g[0], lx - window_f[1])
        hi = min(window_g[1], lx - window_f[0])
        if lo >= hi:
            out.flat[i] = 0.0
            continue

        def integrand(u, lx=lx):
            return np.asarray(f(np.exp(lx - u))) * np.asarray(g(np.exp(u)))

        out.flat[i] = adaptive_gl(integrand, lo, hi, rtol=rtol, atol=1e-300, initial=16)
    return out


def compose(e1, e2):
    """Ensemble of the product of independent matrices from e1 and e2."""
    if e1.n != e2.n:
        raise DimensionMismatch(f"dimensions {e1.n} and {e2.n} differ")
    n = e1.n
    support = (e1.support[0] * e2.support[0], e1.support[1] * e2.support[1])
    expr = f"{e1.expr} * {e2.expr}"
    if e1.kind == "derivative" and e2.kind == "derivative":
        return DerivativeEnsemble(n, convolve_symbols(e1.symbol, e2.symbol), expr, None, support)
    if e1.kind == "general" and e2.kind == "general":
        raise ValueError("at least one factor must be of derivative type")
    d, g = (e1, e2) if e1.kind == "derivative" else (e2, e1)
    wd, wg = d.window, g.window
    weights = [lambda x, k=k: mult_convolve(d.omega, lambda y: g.weight(k, y), x, wd, wg)
               for k in range(n)]
    mellins = [lambda s, k=k: d.mellin(s) * g.mellin_weight(k, s) for k in range(n)]
    window = (wd[0] + wg[0], wd[1] + wg[1])
    return GeneralEnsemble(n, weights, mellins, expr, support, window)


def invert(ens):
    """Ensemble of X^-1 for X drawn from a derivative-type ensemble."""
    if ens.kind != "derivative":
        raise ValueError("inversion needs a derivative-type ensemble")
    n = ens.n
    base = getattr(ens, "_inverse_of", None)
    if base is not None:
        return base
    closed = None
    if ens.closed is not None:
        closed = InvertedForm(ens.closed, n)
    lo, hi = ens.support
    support = (1.0 / hi if hi < math.inf else 0.0, 1.0 / lo if lo > 0 else math.inf)
    out = DerivativeEnsemble(n, reflect_symbol(ens.symbol, n), f"inv({ens.expr})", closed, support)
    out._inverse_of = ens
    return out


def gumbel_symbol(q):
    return MellinSymbol(gamma_factors=((float(q), 1, 1),), strip=(-1.0, math.inf))


def gumbel_density(q, y, tol=1e-10):
    """g_q(y): inverse transform of Gamma(1+s)^q at x = exp(-y)."""
    q = float(q)
    if not q > 0:
        raise ParameterOutOfRange("q must be positive")
    return inverse_mellin(gumbel_symbol(q), np.exp(-np.asarray(y, dtype=float)), tol=tol)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class Diagnostics:
    strip_ok: bool
    decay: str
    contour_order: int
    contour_ok: bool
    closed_form: bool
    integrable: list = field(default_factory=list)
    advice: list = field(default_factory=list)

    @property
    def passed(self):
        return self.strip_ok and self.contour_ok and all(self.integrable)


def validate(ens, need_strip, contour_order=None):
    """Check strip coverage, contour decay and weight integrability."""
    lo, hi = need_strip
    advice = []
    if ens.kind == "general":
        strip_ok, decay, cok, closed = True, "n/a", True, False
        order = 0
    else:
        slo, shi = ens.symbol.strip
        strip_ok = slo < lo and shi > hi
        if not strip_ok:
            advice.append(f"strip {ens.symbol.strip} does not cover [{lo}, {hi}]")
        order = (ens.n if hi >= ens.n + 1 else ens.n - 1) if contour_order is None else contour_order
        sym_k = derivative_symbol(ens.symbol, order)
        mid = min(max(0.5 * (lo + hi), slo + 1e-3), shi - 1e-3)
        decay = decay_info(ens.symbol, mid)[0]
        cok = decay_info(sym_k, mid)[0] != INSUFFICIENT
        closed = ens.closed is not None
        if not cok:
            advice.append(f"contour for w_{order} decays too slowly"
                          + ("; use the closed form" if closed else ""))
    integrable = []
    try:
        ulo, uhi = ens.window
    except NonConvergent:
        return Diagnostics(strip_ok, decay, order, cok, closed, [False] * ens.n,
                           advice + ["weight could not be scanned"])
    for k in range(ens.n):
        try:
            fk = lambda u, k=k: np.abs(ens.weight(k, np.exp(u))) * np.exp(u)
            total = adaptive_gl(fk, ulo, uhi, rtol=1e-6, atol=1e-300)
            integrable.append(bool(np.isfinite(total) and total > 0))
        except (SlowDecay, NonConvergent, StripViolation):
            integrable.append(False)
            advice.append(f"w_{k} could not be evaluated")
    return Diagnostics(strip_ok, decay, order, cok, closed, integrable, advice)
