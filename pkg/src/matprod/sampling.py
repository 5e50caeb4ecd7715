"""Seeded matrix samplers, stable product chains and spectral statistics."""

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .densities import vandermonde
from .errors import DimensionMismatch, McmcNotWarm, NonConvergent, ParameterOutOfRange, SingularDraw

CHUNK = 4096
COND_LIMIT = 1e12
RETRIES = 20
MCMC_KEY = 2**31
GRADED = 10.0

GINIBRE = "ginibre"
INVERSE_GINIBRE = "inverse_ginibre"
TRUNCATED = "truncated_unitary"
HAAR = "haar_unitary"
DIAGONAL = "diagonal_from_jpdf"
FIXED = "fixed"


@dataclass(frozen=True)
class McmcConfig:
    burn_in: int = 10_000
    thin: int = 10
    target_accept: float = 0.3
    chains: int = 512
    conjugate: bool = True


@dataclass(frozen=True, eq=False)
class FactorSpec:
    """Law of one n x n factor in a product chain."""

    kind: str
    n: int
    N: int | None = None
    ensemble: object = None
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == TRUNCATED and (self.N is None or self.N < 2 * self.n):
            raise ParameterOutOfRange("truncated unitary needs N >= 2n")
        if self.kind == DIAGONAL:
            if self.ensemble is None or self.ensemble.n != self.n:
                raise DimensionMismatch("diagonal factor needs an ensemble of matching n")
        if self.kind == FIXED:
            m = np.asarray(self.matrix)
            if m.shape != (self.n, self.n):
                raise DimensionMismatch("fixed matrix has the wrong shape")
        if self.kind not in (GINIBRE, INVERSE_GINIBRE, TRUNCATED, HAAR, DIAGONAL, FIXED):
            raise ValueError(f"unknown factor kind {self.kind!r}")


def ginibre(n):
    return FactorSpec(GINIBRE, n)


def inverse_ginibre(n):
    return FactorSpec(INVERSE_GINIBRE, n)


def truncated_unitary(n, N):
    return FactorSpec(TRUNCATED, n, N=N)


def haar_unitary(n):
    return FactorSpec(HAAR, n)


def diagonal_from_jpdf(ens, mcmc=None):
    return FactorSpec(DIAGONAL, ens.n, ensemble=ens, mcmc=mcmc or McmcConfig())


def fixed(matrix):
    m = np.asarray(matrix, dtype=complex)
    return FactorSpec(FIXED, m.shape[0], matrix=m)


def stream(seed, *keys):
    """Counter-based generator for (seed, keys...)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *keys])))


def ginibre_batch(n, count, rng, cols=None):
    """Complex Gaussian matrices with unit complex variance per entry."""
    cols = n if cols is None else cols
    z = rng.standard_normal((count, n, cols, 2))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def _positive_qr(A):
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    ph = np.where(d == 0, 1.0, d / np.where(d == 0, 1.0, np.abs(d)))
    Q = Q * ph[..., None, :]
    R = R * np.conj(ph)[..., :, None]
    return Q, R


def haar_unitary_batch(n, count, rng):
    """Haar unitaries from the phase-fixed QR of Ginibre draws."""
    Q, _ = _positive_qr(ginibre_batch(n, count, rng))
    return Q


def _inverse_ginibre_batch(n, count, rng):
    G = ginibre_batch(n, count, rng)
    for _ in range(RETRIES):
        bad = np.linalg.cond(G) > COND_LIMIT
        if not bad.any():
            return np.linalg.inv(G)
        G[bad] = ginibre_batch(n, int(bad.sum()), rng)
    raise SingularDraw("ill-conditioned Ginibre draws exhausted the retry budget")


def _log_target(ens, la):
    a = np.exp(la)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        W = np.stack([np.asarray(ens.weight(j, a), dtype=float) for j in range(ens.n)], axis=-2)
        p = vandermonde(a) * np.linalg.det(W)
        return np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), -np.inf) + la.sum(axis=-1)


def mcmc_jpdf(ens, count, rng, config=None):
    """Random-walk Metropolis in log a targeting jpdf_sv; returns (count, n) points."""
    cfg = config or McmcConfig()
    n = ens.n
    chains = min(cfg.chains, count)
    la = np.sort(rng.normal(0.0, 0.5, (chains, n)), axis=1)
    lp = _log_target(ens, la)
    for _ in range(100):
        if np.all(np.isfinite(lp)):
            break
        redo = ~np.isfinite(lp)
        la[redo] = rng.normal(0.0, 2.0, (int(redo.sum()), n))
        lp[redo] = _log_target(ens, la[redo])
    else:
        raise McmcNotWarm("no chain found a point of positive density")
    step = np.full(chains, 0.5)
    acc_window = np.zeros(chains)
    recent = 0

    def move(la, lp, step):
        prop = la + step[:, None] * rng.standard_normal(la.shape)
        lq = _log_target(ens, prop)
        ok = np.log(rng.random(len(la))) < lq - lp
        la = np.where(ok[:, None], prop, la)
        lp = np.where(ok, lq, lp)
        return la, lp, ok

    for it in range(cfg.burn_in):
        la, lp, ok = move(la, lp, step)
        acc_window += ok
        recent += 1
        if recent == 50:
            rate = acc_window / recent
            step *= np.exp(np.clip(rate - cfg.target_accept, -0.5, 0.5))
            acc_window[:] = 0
            recent = 0
    # acceptance over a frozen-step check window
    accepted = np.zeros(chains)
    per_chain = -(-count // chains)
    out = np.empty((per_chain, chains, n))
    for i in range(per_chain):
        for _ in range(cfg.thin):
            la, lp, ok = move(la, lp, step)
            accepted += ok
        out[i] = la
    rate = accepted.sum() / (per_chain * cfg.thin * chains)
    if not 0.05 < rate < 0.8:
        raise McmcNotWarm(f"acceptance rate {rate:.3f} after burn-in")
    return np.exp(out.reshape(-1, n)[:count])


def sample_factors(spec, count, rng, points=None):
    """``count`` independent draws of the factor law, shape (count, n, n).

    ``points`` supplies pre-drawn squared singular values for a diagonal factor.
    """
    n = spec.n
    if spec.kind == GINIBRE:
        return ginibre_batch(n, count, rng)
    if spec.kind == INVERSE_GINIBRE:
        return _inverse_ginibre_batch(n, count, rng)
    if spec.kind == HAAR:
        return haar_unitary_batch(n, count, rng)
    if spec.kind == TRUNCATED:
        return haar_unitary_batch(spec.N, count, rng)[:, :n, :n]
    if spec.kind == FIXED:
        return np.broadcast_to(spec.matrix, (count, n, n)).copy()
    a = mcmc_jpdf(spec.ensemble, count, rng, spec.mcmc) if points is None else points
    D = np.zeros((count, n, n), dtype=complex)
    D[:, np.arange(n), np.arange(n)] = np.sqrt(a)
    if spec.mcmc.conjugate:
        D = haar_unitary_batch(n, count, rng) @ D @ haar_unitary_batch(n, count, rng)
    return D


def sample_factor(spec, seed, index=0):
    """One draw of the factor law from the stream (seed, index)."""
    return sample_factors(spec, 1, stream(seed, index))[0]


@dataclass
class SpectralSample:
    """Spectral data of X = exp(log_scale) * Xs, reported for the scaled matrix Xs.

    sq_singular_values descend; eigenvalues are ordered by descending modulus;
    r_diag is the positive QR diagonal of Xs.  Batched samples carry a leading
    realization axis.
    """

    sq_singular_values: np.ndarray
    eigenvalues: np.ndarray
    r_diag: np.ndarray
    log_scale: np.ndarray
    eig_fallback: np.ndarray | None = None

    def __len__(self):
        return np.atleast_2d(self.sq_singular_values).shape[0]

    @property
    def log_r(self):
        return np.log(self.r_diag) + np.asarray(self.log_scale)[..., None]

    @property
    def log_sv(self):
        """log of singular values (not squared) of the full product."""
        return 0.5 * np.log(self.sq_singular_values) + np.asarray(self.log_scale)[..., None]

    @property
    def log_abs_ev(self):
        return np.log(np.abs(self.eigenvalues)) + np.asarray(self.log_scale)[..., None]


def jacobi_svd(A, tol=1e-15, max_sweeps=60):
    """Singular values by one-sided Jacobi on the columns of a batch (m, n, n).

    Column-scaled inputs keep high relative accuracy for small values.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[-1]
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai, aj = A[..., :, i], A[..., :, j]
                alpha = np.sum(np.abs(ai) ** 2, axis=-1)
                beta = np.sum(np.abs(aj) ** 2, axis=-1)
                g = np.sum(np.conj(ai) * aj, axis=-1)
                ag = np.abs(g)
                denom = np.sqrt(alpha * beta)
                rel = np.where(denom > 0, ag / np.where(denom > 0, denom, 1.0), 0.0)
                off = max(off, float(rel.max(initial=0.0)))
                act = rel > tol
                if not act.any():
                    continue
                safe = np.where(act, ag, 1.0)
                zeta = (beta - alpha) / (2 * safe)
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1 + zeta**2))
                c = 1 / np.sqrt(1 + t**2)
                s = c * t
                ph = np.where(act, g / safe, 1.0)
                c = np.where(act, c, 1.0)
                s = np.where(act, s, 0.0)
                bj = aj * np.conj(ph)[..., None]
                new_i = c[..., None] * ai - s[..., None] * bj
                new_j = (s[..., None] * ai + c[..., None] * bj) * ph[..., None]
                A[..., :, i] = new_i
                A[..., :, j] = new_j
        if off <= tol:
            break
    else:
        raise NonConvergent("Jacobi SVD did not converge")
    sv = np.sqrt(np.sum(np.abs(A) ** 2, axis=-2))
    return -np.sort(-sv, axis=-1)


def _orthogonal_iteration(D, U, Q, passes=50, tol=1e-13):
    """Eigenvalues of B = diag(D) U Q via QR passes on the factored form.

    Only unconverged realizations stay in the iteration.  Returns
    (eigenvalues, converged mask).
    """
    m, n = D.shape
    T = D[:, :, None] * U
    V = np.broadcast_to(np.eye(n, dtype=complex), (m, n, n)).copy()
    ev = np.zeros((m, n), dtype=complex)
    conv = np.zeros(m, dtype=bool)
    prev = np.full((m, n), np.inf)
    act = np.arange(m)
    for _ in range(passes):
        Q2, R2 = _positive_qr(Q[act] @ V[act])
        V_new, R1 = _positive_qr(T[act] @ Q2)
        d = np.diagonal(R1, axis1=-2, axis2=-1) * np.diagonal(R2, axis1=-2, axis2=-1)
        logd = np.log(np.abs(d))
        phase = np.diagonal(np.conj(V[act]).transpose(0, 2, 1) @ V_new, axis1=-2, axis2=-1)
        done = (np.max(np.abs(logd - prev[act]), axis=1) < tol) & (
            np.max(np.abs(np.abs(phase) - 1), axis=1) < 1e-10)
        ev[act[done]] = (phase * d)[done]
        conv[act[done]] = True
        prev[act] = logd
        V[act] = V_new
        act = act[~done]
        if act.size == 0:
            break
    return ev, conv


def spectral_from_factored(Q, U, logd):
    """Spectral data of X = Q diag(exp(logd)) U with U unit upper triangular."""
    m, n = logd.shape
    L = logd.mean(axis=1)
    D = np.exp(logd - L[:, None])
    # X = Q D U has the singular values of D U; Jacobi on (D U)^* = U^* D
    A = np.conj(U).transpose(0, 2, 1) * D[:, None, :]
    sv = jacobi_svd(A) ** 2
    # eigvals is accurate to eps * exp(spread) relative for the smallest modulus
    graded = np.ptp(logd, axis=1) > GRADED
    ev = np.zeros((m, n), dtype=complex)
    fallback = np.zeros(m, dtype=bool)
    if graded.any():
        ev_g, conv = _orthogonal_iteration(D[graded], U[graded], Q[graded])
        ev[graded] = ev_g
        fallback[graded] = ~conv
    direct = ~graded | fallback
    if direct.any():
        B = (D[direct][:, :, None] * U[direct]) @ Q[direct]
        ev[direct] = np.linalg.eigvals(B)
    order = np.argsort(-np.abs(ev), axis=1, kind="stable")
    ev = np.take_along_axis(ev, order, axis=1)
    return SpectralSample(sv, ev, D, L, fallback)


def product_factored(factors):
    """Reverse-order QR accumulation of X_1 ... X_M.

    ``factors`` has shape (M, m, n, n).  Returns (Q, U, logd) with
    X = Q diag(exp(logd)) U, U unit upper triangular, and logd the sum of
    the per-step log QR diagonals.
    """
    M, m, n, _ = factors.shape
    Q = np.broadcast_to(np.eye(n, dtype=complex), (m, n, n)).copy()
    U = Q.copy()
    logd = np.zeros((m, n))
    for k in range(M - 1, -1, -1):
        Q, R = _positive_qr(factors[k] @ Q)
        r = np.real(np.diagonal(R, axis1=-2, axis2=-1))
        if np.any(r <= 0):
            raise SingularDraw("singular factor in product chain")
        new = logd + np.log(r)
        # U <- D_new^-1 R D_old U, computed in log space
        scale = np.exp(logd[:, None, :] - new[:, :, None])
        U = np.triu((R * scale) @ U)
        logd = new
    idx = np.arange(n)
    U[:, idx, idx] = 1.0
    return Q, U, logd


def _chunk(specs, count, seed, chunk, pre):
    rng = stream(seed, chunk)
    factors = np.stack([sample_factors(s, count, rng, pre.get(i)) for i, s in enumerate(specs)])
    return spectral_from_factored(*product_factored(factors))


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get("MATPROD_WORKERS", "1"))
    return max(1, int(workers))


def _concat(parts):
    return SpectralSample(
        np.concatenate([p.sq_singular_values for p in parts]),
        np.concatenate([p.eigenvalues for p in parts]),
        np.concatenate([p.r_diag for p in parts]),
        np.concatenate([p.log_scale for p in parts]),
        np.concatenate([p.eig_fallback for p in parts]))


def product_chain_batch(specs, runs, seed, workers=None, chunk_size=CHUNK):
    """``runs`` independent products; chunk c uses stream (seed, c)."""
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one factor")
    n = specs[0].n
    if any(s.n != n for s in specs):
        raise DimensionMismatch("all factors must share the dimension")
    sizes = [min(chunk_size, runs - i) for i in range(0, runs, chunk_size)]
    # one Metropolis run per diagonal factor, so burn-in is paid once
    pools = {i: mcmc_jpdf(s.ensemble, runs, stream(seed, MCMC_KEY, i), s.mcmc)
             for i, s in enumerate(specs) if s.kind == DIAGONAL}
    starts = np.cumsum([0] + sizes)
    args = [(specs, size, seed, c, {i: p[starts[c]:starts[c] + size] for i, p in pools.items()})
            for c, size in enumerate(sizes)]
    w = _workers(workers)
    if w == 1 or len(args) == 1:
        parts = [_chunk(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=w) as pool:
            parts = list(pool.map(_chunk, *zip(*args)))
    return _concat(parts)


def product_chain(specs, seed):
    """Spectral data of one product X_1 ... X_M."""
    out = product_chain_batch(specs, 1, seed, workers=1)
    return SpectralSample(out.sq_singular_values[0], out.eigenvalues[0], out.r_diag[0],
                          float(out.log_scale[0]), out.eig_fallback[0])


def write_csv(path, sample):
    """Dump a batch with columns sv_i, re_ev_i, im_ev_i, r_i, log_scale to a path or file."""
    sv = np.atleast_2d(sample.sq_singular_values)
    ev = np.atleast_2d(sample.eigenvalues)
    r = np.atleast_2d(sample.r_diag)
    ls = np.atleast_1d(sample.log_scale)
    n = sv.shape[1]
    header = ([f"sv_{i}" for i in range(1, n + 1)] + [f"re_ev_{i}" for i in range(1, n + 1)]
              + [f"im_ev_{i}" for i in range(1, n + 1)] + [f"r_{i}" for i in range(1, n + 1)]
              + ["log_scale"])
    def dump(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for k in range(sv.shape[0]):
            row = np.concatenate([sv[k], ev[k].real, ev[k].imag, r[k], [ls[k]]])
            out.writerow(["%.12g" % v for v in row])

    if hasattr(path, "write"):
        dump(path)
    else:
        with open(path, "w", newline="") as fh:
            dump(fh)


def read_csv(path):
    """Inverse of write_csv."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    n = sum(h.startswith("sv_") for h in header)
    if data.size == 0:
        data = data.reshape(0, 4 * n + 1)
    return SpectralSample(data[:, :n], data[:, n:2 * n] + 1j * data[:, 2 * n:3 * n],
                          data[:, 3 * n:4 * n], data[:, 4 * n])


def ks_statistic(sample, cdf):
    """sup |ECDF - cdf| for a one-sample test."""
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    N = x.size
    if N == 0:
        raise ValueError("empty sample")
    F = np.clip(np.asarray(cdf(x), dtype=float), 0.0, 1.0)
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))


def ks_two_sample(x, y):
    """sup |ECDF_x - ECDF_y|."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def normal_cdf(x):
    return ndtr(x)


def independence_diag(r_diag, cdfs=None):
    """Correlation matrix of log R_jj and KS of each R_jj^2 against ``cdfs[j]``."""
    r = np.asarray(r_diag, dtype=float)
    corr = np.corrcoef(np.log(r), rowvar=False)
    ks = None
    if cdfs is not None:
        ks = [ks_statistic(r[:, j] ** 2, cdfs[j]) for j in range(r.shape[1])]
    return {"corr_matrix": np.atleast_2d(corr), "marginal_ks": ks}
