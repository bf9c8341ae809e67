"""Operator splitting on the homogeneous self-dual embedding.

Iterates ``u = (x, y, tau)``, ``v = (r, s, kappa)`` with

    u_tilde = (I + Q)^{-1} (u + v)
    u       = Pi_C(a u_tilde + (1 - a) u - v)
    v       = v - a u_tilde - (1 - a) u_prev + u

where ``Q`` is the skew-symmetric embedding matrix, ``C = R^n x K x R_+``
and ``a`` is the over-relaxation factor. ``I + Q`` is factored once.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.linalg as sla

from robust_slp.socp import cones
from robust_slp.socp.problem import ConicProblem, SolverSettings, SolveResult, Status


def _embedding(p: ConicProblem):
    n, m = p.n, p.m
    Q = np.zeros((n + m + 1, n + m + 1))
    Q[:n, n : n + m] = p.A.T
    Q[:n, -1] = p.c
    Q[n : n + m, :n] = -p.A
    Q[n : n + m, -1] = p.b
    Q[-1, :n] = -p.c
    Q[-1, n : n + m] = -p.b
    return Q


def solve_admm(p: ConicProblem, settings: SolverSettings) -> SolveResult:
    t0 = time.perf_counter()
    A, b, c, l = p.A, p.b, p.c, p.l
    n, m = p.n, p.m
    lay = p.layout
    lu = sla.lu_factor(np.eye(n + m + 1) + _embedding(p), check_finite=False)
    relax = settings.relaxation
    eps_abs, eps_rel, eps_inf = settings.abs_tol, settings.rel_tol, settings.infeas_tol
    nb, nc = np.linalg.norm(b), np.linalg.norm(c)

    u = np.zeros(n + m + 1)
    v = np.zeros(n + m + 1)
    u[-1] = v[-1] = 1.0
    ys = slice(n, n + m)
    pinf_count = dinf_count = 0
    res = {}

    it = 0
    for it in range(1, settings.max_iterations + 1):
        ut = sla.lu_solve(lu, u + v, check_finite=False)
        mixed = relax * ut + (1.0 - relax) * u
        w = mixed - v
        u_new = np.empty_like(w)
        u_new[:n] = w[:n]
        u_new[ys] = cones.project_cone(w[ys], lay)
        u_new[-1] = max(w[-1], 0.0)
        v = v - mixed + u_new
        u = u_new

        if it % settings.check_every:
            continue
        x, y, tau = u[:n], u[ys], u[-1]
        s, kappa = v[ys], v[-1]
        if tau > 1e-12 * max(1.0, kappa):
            xh, yh, sh = x / tau, y / tau, s / tau
            Ax, Aty = A @ xh, A.T @ yh
            cx, by = float(c @ xh), float(b @ yh)
            pres = np.linalg.norm(Ax + sh - b)
            dres = np.linalg.norm(Aty + c)
            gap = abs(cx + by)
            res = {"primal": float(pres), "dual": float(dres), "gap": float(gap)}
            if (
                pres <= eps_abs + eps_rel * max(nb, np.linalg.norm(Ax), np.linalg.norm(sh))
                and dres <= eps_abs + eps_rel * max(nc, np.linalg.norm(Aty))
                and gap <= eps_abs + eps_rel * max(abs(cx), abs(by))
            ):
                out = SolveResult(Status.OPTIMAL, x=xh, s=sh, y=yh, objective=cx,
                                  dual_objective=-by, iterations=it, residuals=res,
                                  algorithm="admm")
                out.solve_time = time.perf_counter() - t0
                return out
        by_raw, cx_raw = float(b @ y), float(c @ x)
        if by_raw < 0 and np.linalg.norm(A.T @ y) / -by_raw <= eps_inf:
            pinf_count += 1
        else:
            pinf_count = 0
        if cx_raw < 0 and np.linalg.norm(A @ x + s) / -cx_raw <= eps_inf:
            dinf_count += 1
        else:
            dinf_count = 0
        if pinf_count >= settings.infeas_confirmations:
            cert = y / -by_raw
            res["certificate"] = float(np.linalg.norm(A.T @ cert))
            out = SolveResult(Status.PRIMAL_INFEASIBLE, y=cert, certificate=cert,
                              iterations=it, residuals=res, algorithm="admm")
            out.solve_time = time.perf_counter() - t0
            return out
        if dinf_count >= settings.infeas_confirmations:
            cert = x / -cx_raw
            res["certificate"] = float(np.linalg.norm(A @ cert + s / -cx_raw))
            out = SolveResult(Status.DUAL_INFEASIBLE, x=cert, certificate=cert,
                              objective=-np.inf, iterations=it, residuals=res,
                              algorithm="admm")
            out.solve_time = time.perf_counter() - t0
            return out

    out = SolveResult(Status.ITER_LIMIT, iterations=it, residuals=res, algorithm="admm")
    tau = u[-1]
    if tau > 0:
        out.x, out.y, out.s = u[:n] / tau, u[ys] / tau, v[ys] / tau
        out.objective = float(c @ out.x)
    out.solve_time = time.perf_counter() - t0
    return out
