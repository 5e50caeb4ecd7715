"""Command-line front end: ``matprod <subcommand> ...``.

Exit codes: 0 success, 2 configuration or parse error, 3 numeric failure.
"""

import argparse
import io
import math
import os
import re
import sys

import numpy as np

from .densities import jpdf_ev_values, jpdf_sv_values, positivity_scan
from .ensembles import invert, jacobi, laguerre
from .errors import (DimensionMismatch, MatprodError, ParameterOutOfRange, ParseError,
                     SemanticError)
from .expr import parse_ensemble_expr
from .kernels import kernel_ev, kernel_sv, marginal_cdf
from .lyapunov import clt_params_symbolic, exponent_mc
from .sampling import (diagonal_from_jpdf, ginibre, haar_unitary, inverse_ginibre,
                       ks_statistic, product_chain_batch, read_csv, truncated_unitary,
                       write_csv)
from .spherical import spherical_transform, spherical_transform_numeric

SYMBOLIC_TOL = 1e-8
QUADRATURE_TOL = 1e-6

__all__ = ["main", "run", "parse_ensemble_expr", "parse_factor", "to_json"]


class ConfigError(Exception):
    pass


CONFIG_ERRORS = (ConfigError, ParseError, SemanticError, ParameterOutOfRange, DimensionMismatch)


# ---------------------------------------------------------------------------
# output formatting


def to_json(obj):
    """JSON text with floats at 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f'"{k}": {to_json(v)}' for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return "null"
        return "%.17g" % v
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_text(header, rows):
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join("%.12g" % v for v in row) + "\n")
    return out.getvalue()


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# argument parsing helpers


def _points(text, n, kind=float):
    """'1,2;3,4' -> array of shape (m, n)."""
    try:
        rows = [[kind(v.strip().replace(" ", "")) for v in part.split(",")]
                for part in text.split(";") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad point list: {exc}") from exc
    if not rows or any(len(r) != n for r in rows):
        raise ConfigError(f"every point needs {n} coordinates")
    return np.array(rows, dtype=kind)


def _values(text, kind=float):
    try:
        return np.array([kind(v.strip()) for v in text.split(",") if v.strip()], dtype=kind)
    except ValueError as exc:
        raise ConfigError(f"bad value list: {exc}") from exc


_FACTOR = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*(?:\((.*)\))?\s*$", re.S)


def parse_factor(text, n):
    """Factor law from 'ginibre', 'inverse_ginibre', 'haar', 'truncated(N=6)' or
    'diag(<ensemble expression>)'.  Returns (FactorSpec, ensemble or None)."""
    m = _FACTOR.match(text)
    if m is None:
        raise ParseError(f"bad factor {text!r}", 0, ["factor name"])
    name, arg = m.group(1), m.group(2)
    if name in ("ginibre", "ginibre-chain"):
        return ginibre(n), laguerre(n, 0.0)
    if name in ("inverse_ginibre", "inv_ginibre"):
        return inverse_ginibre(n), invert(laguerre(n, 0.0))
    if name in ("haar", "haar_unitary"):
        return haar_unitary(n), None
    if name in ("truncated", "truncated_unitary"):
        mm = re.fullmatch(r"\s*N\s*=\s*(\d+)\s*", arg or "")
        if mm is None:
            raise ParseError("truncated needs N=<integer>", m.start(2) if arg else len(text),
                             ["N=<integer>"])
        N = int(mm.group(1))
        if N < 2 * n:
            raise SemanticError("truncated unitary needs N >= 2n")
        return truncated_unitary(n, N), jacobi(n, 0.0, float(N - n))
    if name == "diag":
        ens = parse_ensemble_expr(arg or "", n)
        return diagonal_from_jpdf(ens), ens
    raise ParseError(f"unknown factor {name!r}", m.start(1),
                     ["ginibre", "inverse_ginibre", "haar", "truncated", "diag"])


def _workers(args):
    if args.workers is not None:
        return args.workers
    return int(os.environ.get("MATPROD_WORKERS", "1"))


# ---------------------------------------------------------------------------
# subcommands


def cmd_density(args, ev):
    ens = parse_ensemble_expr(args.expr, args.n)
    if ev:
        pts = _points(args.points, args.n, complex)
        vals = jpdf_ev_values(ens, pts)
        header = [f"re_z_{i}" for i in range(1, args.n + 1)] + \
                 [f"im_z_{i}" for i in range(1, args.n + 1)] + ["value"]
        rows = [list(p.real) + list(p.imag) + [v] for p, v in zip(pts, vals)]
    else:
        pts = _points(args.points, args.n)
        vals = jpdf_sv_values(ens, pts)
        header = [f"a_{i}" for i in range(1, args.n + 1)] + ["value"]
        rows = [list(p) + [v] for p, v in zip(pts, vals)]
    if args.format == "json":
        return to_json({"header": header, "rows": rows})
    return _csv_text(header, rows)


def cmd_kernel(args, ev):
    ens = parse_ensemble_expr(args.expr, args.n)
    if ev:
        z = _values(args.points, complex)
        Z, W = np.meshgrid(z, z, indexing="ij")
        K = kernel_ev(ens, Z, W)
        header = ["re_z", "im_z", "re_w", "im_w", "re_k", "im_k"]
        rows = [[a.real, a.imag, b.real, b.imag, k.real, k.imag]
                for a, b, k in zip(Z.ravel(), W.ravel(), K.ravel())]
    else:
        x = _values(args.points)
        if np.any(x <= 0):
            raise ConfigError("kernel points must be positive")
        X, Y = np.meshgrid(x, x, indexing="ij")
        K = kernel_sv(ens, X, Y)
        header = ["x", "y", "k"]
        rows = [[a, b, k] for a, b, k in zip(X.ravel(), Y.ravel(), K.ravel())]
    if args.format == "json":
        return to_json({"header": header, "rows": rows})
    return _csv_text(header, rows)


def cmd_interp_scan(args):
    res = positivity_scan(args.n, args.p, args.q)
    return to_json({"verdict": res.verdict,
                    "witness": None if res.witness is None else list(res.witness),
                    "value": res.value, "evaluated": res.evaluated})


def _chain(args):
    factors = args.factor or ["ginibre"]
    return [parse_factor(f, args.n) for f in factors]


def cmd_sample(args):
    specs = [s for s, _ in _chain(args)] * args.M
    out = product_chain_batch(specs, args.runs, args.seed, workers=_workers(args))
    if args.out in (None, "-"):
        buf = io.StringIO()
        write_csv(buf, out)
        return buf.getvalue()
    write_csv(args.out, out)
    return None


def pooled_sq_singular_values(sample):
    """All squared singular values of the represented products, pooled."""
    sv = np.atleast_2d(sample.sq_singular_values)
    return (sv * np.exp(2 * np.asarray(sample.log_scale))[:, None]).ravel()


def compare_sv(sample, ens):
    """KS distance of pooled squared singular values against K_sv(a, a)/n."""
    return ks_statistic(pooled_sq_singular_values(sample), marginal_cdf(ens))


def cmd_compare_sv(args):
    if not args.input:
        raise ConfigError("compare-sv needs --input")
    ens = parse_ensemble_expr(args.expr, args.n)
    sample = read_csv(args.input)
    if sample.sq_singular_values.shape[1] != args.n:
        raise ConfigError("sample dimension does not match --n")
    return to_json({"ks": compare_sv(sample, ens), "count": len(sample), "n": args.n})


def cmd_lyapunov(args):
    factors = args.factor or ([args.expr] if args.expr else ["ginibre"])
    if len(factors) != 1:
        raise ConfigError("lyapunov takes a single factor law")
    spec, ens = parse_factor(factors[0], args.n)
    sym = clt_params_symbolic(ens) if ens is not None else None
    res = exponent_mc(spec, args.M, args.runs, args.seed, reference=sym, workers=_workers(args))
    lyap = res["lyapunov"]
    return to_json({
        "m_symbolic": None if sym is None else sym.m,
        "sigma_symbolic": None if sym is None else sym.sigma,
        "m_empirical": lyap["mean"],
        "sigma_empirical": lyap["cov"] * args.M,
        "ks_normal": lyap["ks_normal"],
        "m_stability": res["stability"]["mean"],
        "ks_normal_stability": res["stability"]["ks_normal"],
        "runs": args.runs, "M": args.M, "seed": args.seed,
    })


def cmd_spherical_check(args):
    ens = parse_ensemble_expr(args.expr, args.n)
    s = _values(args.s, complex)
    if s.size != args.n:
        raise ConfigError(f"--s needs {args.n} values")
    sym = spherical_transform(ens, s)
    num = spherical_transform_numeric(ens, s, rtol=args.tol or QUADRATURE_TOL)
    return to_json({"symbolic": [sym.real, sym.imag], "numeric": [num.real, num.imag],
                    "rel_err": abs(sym - num) / abs(sym)})


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="matprod", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, expr=True, seed=False):
        sp.add_argument("--n", type=int, required=True, help="matrix dimension")
        if expr:
            sp.add_argument("--expr", help="ensemble expression")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=["json", "csv"], default=None)
        sp.add_argument("--tol", type=float, default=None,
                        help=f"tolerance (symbolic {SYMBOLIC_TOL:g}, quadrature {QUADRATURE_TOL:g})")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes (fallback MATPROD_WORKERS)")
        sp.add_argument("--seed", type=int, required=seed)
        return sp

    for name in ("density-sv", "density-ev"):
        common(sub.add_parser(name, help="tabulate the joint density")).add_argument(
            "--points", required=True, help="points 'x1,x2;y1,y2' (complex for ev)")
    for name in ("kernel-sv", "kernel-ev"):
        common(sub.add_parser(name, help="tabulate the kernel on a grid")).add_argument(
            "--points", required=True, help="grid values 'x1,x2,...'")
    sp = common(sub.add_parser("interp-scan", help="interpolating positivity scan"), expr=False)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp = common(sub.add_parser("sample", help="dump product-chain draws"), expr=False, seed=True)
    sp.add_argument("--factor", action="append", help="factor law (repeatable, in order)")
    sp.add_argument("--M", type=int, default=1, help="repetitions of the factor list")
    sp.add_argument("--runs", type=int, default=1000)
    sp = common(sub.add_parser("compare-sv", help="KS of a sample dump vs the analytic marginal"))
    sp.add_argument("--input", required=True)
    sp = common(sub.add_parser("lyapunov", help="Lyapunov exponent Monte Carlo"), seed=True)
    sp.add_argument("--factor", action="append")
    sp.add_argument("--M", type=int, default=200)
    sp.add_argument("--runs", type=int, default=5000)
    sp = common(sub.add_parser("spherical-check", help="symbolic vs numeric transform"))
    sp.add_argument("--s", required=True, help="spectral point 's1,s2,...' (complex allowed)")
    return p


def run(args):
    """Dispatch parsed arguments; returns the exit code."""
    try:
        cmd = args.command
        if cmd in ("density-sv", "density-ev", "kernel-sv", "kernel-ev", "compare-sv",
                   "spherical-check") and not args.expr:
            raise ConfigError(f"{cmd} needs --expr")
        if args.n < 1:
            raise ConfigError("--n must be >= 1")
        if cmd == "density-sv":
            text = cmd_density(args, ev=False)
        elif cmd == "density-ev":
            text = cmd_density(args, ev=True)
        elif cmd == "kernel-sv":
            text = cmd_kernel(args, ev=False)
        elif cmd == "kernel-ev":
            text = cmd_kernel(args, ev=True)
        elif cmd == "interp-scan":
            text = cmd_interp_scan(args)
        elif cmd == "sample":
            text = cmd_sample(args)
        elif cmd == "compare-sv":
            text = cmd_compare_sv(args)
        elif cmd == "lyapunov":
            text = cmd_lyapunov(args)
        else:
            text = cmd_spherical_check(args)
        if text is not None:
            _emit(text, args.out)
        return 0
    except CONFIG_ERRORS as exc:
        print(f"matprod: error: {exc}", file=sys.stderr)
        return 2
    except (MatprodError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"matprod: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"matprod: error: {exc}", file=sys.stderr)
        return 2


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
