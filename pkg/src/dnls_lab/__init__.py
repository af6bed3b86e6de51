"""Numerical laboratory for the derivative nonlinear Schrodinger equation on
rescaled tori, built around its conserved perturbation determinant."""

from .fourier import (Field, TorusGrid, derivative, forward_transform, inverse_transform,
                      l2_norm, l2_norm_physical, make_grid, read_field_csv, write_field_csv)
from .norms import (NormParams, NormReport, besov_norm, norm_report, sobolev_norm,
                    weight_w, weighted_pairing, z_block_from_alpha, z_norm)
from .solver import (SolverConfig, SolverInstabilityError, Trajectory, conserved_quantities,
                     evolve, rescale, rhs_nonlinear, step)
from .traces import (OperatorMatrix, TraceSeries, alpha_series, alpha_term, circle_factor,
                     hs_norm_sq, leading_term_exact, multiplication_matrix, resolvent_matrix,
                     schatten_norm, verify_operator_identities)

__version__ = "0.1.0"

__all__ = [
    "Field", "TorusGrid", "derivative", "forward_transform", "inverse_transform", "l2_norm",
    "l2_norm_physical", "make_grid", "read_field_csv", "write_field_csv",
    "NormParams", "NormReport", "besov_norm", "norm_report", "sobolev_norm", "weight_w",
    "weighted_pairing", "z_block_from_alpha", "z_norm",
    "SolverConfig", "SolverInstabilityError", "Trajectory", "conserved_quantities", "evolve",
    "rescale", "rhs_nonlinear", "step",
    "OperatorMatrix", "TraceSeries", "alpha_series", "alpha_term", "circle_factor",
    "hs_norm_sq", "leading_term_exact", "multiplication_matrix", "resolvent_matrix",
    "schatten_norm", "verify_operator_identities",
]
