"""Embedded second-order cone solver.

Two engines share the homogeneous self-dual embedding: an interior-point
method (``algorithm="ipm"``, the default) and an operator-splitting method
(``algorithm="admm"``). Both return optimal points or infeasibility
certificates through :class:`SolveResult`.
"""

import time

import numpy as np

from robust_slp.socp.admm import solve_admm
from robust_slp.socp.cones import project_cone, project_soc
from robust_slp.socp.ipm import solve_ipm
from robust_slp.socp.problem import ConicProblem, SolverSettings, SolveResult, Status

__all__ = [
    "ConicProblem",
    "SolveResult",
    "SolverSettings",
    "Status",
    "project_cone",
    "project_soc",
    "solve",
]


def _solve_unconstrained(p, algorithm):
    # no rows: optimal at x = 0 unless the objective is nonzero (unbounded)
    t0 = time.perf_counter()
    if np.any(p.c != 0):
        cert = -p.c / float(p.c @ p.c)
        out = SolveResult(Status.DUAL_INFEASIBLE, x=cert, certificate=cert,
                          objective=-np.inf, algorithm=algorithm)
    else:
        out = SolveResult(Status.OPTIMAL, x=np.zeros(p.n), s=np.zeros(0), y=np.zeros(0),
                          objective=0.0, dual_objective=0.0, algorithm=algorithm)
    out.solve_time = time.perf_counter() - t0
    return out


def _block_scale(p):
    """Power-of-two factor per cone block bringing its largest row of ``A`` near unit norm.

    Scaling a block of ``(A, b)`` by a positive scalar maps the cone onto
    itself, so the scaled problem has the same solutions; powers of two keep
    the transformation exact.
    """
    norms = np.linalg.norm(p.A, axis=1)
    d = np.ones(p.m)
    blocks = [slice(i, i + 1) for i in range(p.l)] + p.cone_slices()
    for sl in blocks:
        big = float(norms[sl].max())
        if big > 0:
            d[sl] = 2.0 ** -round(np.log2(big))
    return d


def solve(p: ConicProblem, settings: SolverSettings | None = None) -> SolveResult:
    """Solve ``minimize c@x s.t. A@x + s = b, s in K``.

    For the interior-point engine, cone blocks are equilibrated first so rows
    with very large or very small coefficients do not stall the residual
    tests; the primal residual is still measured on the original rows.
    Deterministic: identical inputs and settings give identical iterates.
    """
    settings = settings or SolverSettings()
    if p.m == 0:
        return _solve_unconstrained(p, settings.algorithm)
    if settings.algorithm == "admm":
        return solve_admm(p, settings)
    d = _block_scale(p)
    if np.all(d == 1.0):
        return solve_ipm(p, settings)
    scaled = ConicProblem(c=p.c, A=p.A * d[:, None], b=p.b * d, l=p.l, soc=p.soc)
    out = solve_ipm(scaled, settings, row_scale=d)
    # s' = D s and y' = D^{-1} y
    if out.s is not None:
        out.s = out.s / d
    if out.y is not None:
        out.y = out.y * d
    if out.certificate is not None and out.status is Status.PRIMAL_INFEASIBLE:
        out.certificate = out.y
    return out
