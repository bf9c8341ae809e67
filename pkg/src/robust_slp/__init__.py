"""Robust symbol-level precoding for the multiuser MISO downlink.

Constructive-interference constraints under perfect, norm-bounded and
Gaussian CSI uncertainty, an embedded second-order cone solver, and the
Monte Carlo harness used to study power, SER and feasibility.
"""

__version__ = "0.1.0"

from robust_slp.errors import (
    ConfigError,
    DegenerateWhiteningError,
    DomainError,
    InvalidModulationError,
    MalformedProblemError,
    SingularGramError,
    SlpError,
    UnsupportedConstellationError,
)
from robust_slp.geometry import (
    CirMatrix,
    Constellation,
    custom_constellation,
    dpcir_matrix,
    ml_detect,
    psk_constellation,
)
from robust_slp.robustcons import (
    ConstraintSet,
    Method,
    RobustParams,
    build_constraints,
    check_feasible,
    compare_tightness,
)
from robust_slp.precoder import (
    PrecoderOutput,
    SlpInstance,
    assemble,
    complexity_bound,
    solve_slp,
)
from robust_slp.socp import ConicProblem, SolverSettings, SolveResult, Status, solve

__all__ = [
    "__version__",
    "CirMatrix",
    "ConfigError",
    "ConicProblem",
    "Constellation",
    "ConstraintSet",
    "DegenerateWhiteningError",
    "DomainError",
    "InvalidModulationError",
    "MalformedProblemError",
    "Method",
    "PrecoderOutput",
    "RobustParams",
    "SingularGramError",
    "SlpError",
    "SlpInstance",
    "SolveResult",
    "SolverSettings",
    "Status",
    "UnsupportedConstellationError",
    "assemble",
    "build_constraints",
    "check_feasible",
    "compare_tightness",
    "complexity_bound",
    "custom_constellation",
    "dpcir_matrix",
    "ml_detect",
    "psk_constellation",
    "solve",
    "solve_slp",
]
