"""Spectral statistics of products of bi-unitarily invariant random matrices."""

from .densities import (jpdf_ev, jpdf_ev_values, jpdf_sv, jpdf_sv_values, normalization_ev,
                        normalization_sv, positivity_scan, region_check)
from .ensembles import (cauchy_lorentz, compose, gumbel_density, interpolating, invert, jacobi,
                        laguerre, lognormal, make_family, muttalib_borodin, validate)
from .errors import (BranchError, DegenerateParameter, DegenerateSpectrum, DimensionMismatch,
                     EmptyStrip, MatprodError, McmcNotWarm, NegativeWeight, NonConvergent,
                     ParameterOutOfRange, ParseError, QuadratureFailure, SemanticError,
                     SingularDraw, SlowDecay, StripViolation)
from .expr import parse_ensemble_expr
from .kernels import (chi, kernel_ev, kernel_sv, marginal_cdf, monic_polys, q_func,
                      transfer_system)
from .lyapunov import (clt_params_empirical, clt_params_symbolic, exponent_mc,
                       rdiag_marginal_cdf)
from .mellin import (MellinSymbol, convolve_symbols, derivative_symbol, eval_symbol,
                     inverse_mellin, mellin_numeric, reflect_symbol)
from .sampling import (FactorSpec, SpectralSample, independence_diag, ks_statistic,
                       product_chain, product_chain_batch, sample_factor)
from .spherical import (rho_prime, spherical_function, spherical_transform,
                        spherical_transform_numeric)

__version__ = "0.1.0"

__all__ = [
    "jpdf_ev", "jpdf_ev_values", "jpdf_sv", "jpdf_sv_values", "normalization_ev",
    "normalization_sv", "positivity_scan", "region_check",
    "cauchy_lorentz", "compose", "gumbel_density", "interpolating", "invert", "jacobi",
    "laguerre", "lognormal", "make_family", "muttalib_borodin", "validate",
    "BranchError", "DegenerateParameter", "DegenerateSpectrum", "DimensionMismatch",
    "EmptyStrip", "MatprodError", "McmcNotWarm", "NegativeWeight", "NonConvergent",
    "ParameterOutOfRange", "ParseError", "QuadratureFailure", "SemanticError",
    "SingularDraw", "SlowDecay", "StripViolation",
    "parse_ensemble_expr",
    "chi", "kernel_ev", "kernel_sv", "marginal_cdf", "monic_polys", "q_func", "transfer_system",
    "clt_params_empirical", "clt_params_symbolic", "exponent_mc", "rdiag_marginal_cdf",
    "MellinSymbol", "convolve_symbols", "derivative_symbol", "eval_symbol", "inverse_mellin",
    "mellin_numeric", "reflect_symbol",
    "FactorSpec", "SpectralSample", "independence_diag", "ks_statistic", "product_chain",
    "product_chain_batch", "sample_factor",
    "rho_prime", "spherical_function", "spherical_transform", "spherical_transform_numeric",
]
