"""Conservatism coefficients, 2x2 utilities and robust CI constraint builders."""

from robust_slp.robustcons.coefficients import alpha, coefficient_table, erfc_inv, psi, rho
from robust_slp.robustcons.constraints import (
    STOCHASTIC_METHODS,
    AffineResidual,
    CiUser,
    ConstraintSet,
    LinearConstraint,
    Method,
    RobustParams,
    SocConstraint,
    TightnessReport,
    build_constraints,
    check_feasible,
    compare_tightness,
    residual,
)
from robust_slp.robustcons.smallmat import inv_sqrt_2x2, sqrt_2x2

__all__ = [
    "STOCHASTIC_METHODS",
    "AffineResidual",
    "CiUser",
    "ConstraintSet",
    "LinearConstraint",
    "Method",
    "RobustParams",
    "SocConstraint",
    "TightnessReport",
    "alpha",
    "build_constraints",
    "check_feasible",
    "coefficient_table",
    "compare_tightness",
    "erfc_inv",
    "inv_sqrt_2x2",
    "psi",
    "residual",
    "rho",
    "sqrt_2x2",
]
