"""Primal-dual interior-point method on the homogeneous self-dual embedding.

The embedding

    [0]   [ 0    A^T  c] [x  ]
    [s] = [-A    0    b] [y  ] ,   (s, y) in K x K,  tau, kappa >= 0
    [k]   [-c^T -b^T  0] [tau]

is followed with Nesterov-Todd scaled Mehrotra predictor-corrector steps.
A solution with ``tau > 0`` gives primal/dual optima; ``tau -> 0`` exposes
an infeasibility certificate.
"""

from __future__ import annotations

import logging
import math
import time

import numpy as np
import scipy.linalg as sla

from robust_slp.socp import cones
from robust_slp.socp.problem import ConicProblem, SolverSettings, SolveResult, Status

log = logging.getLogger(__name__)


class _ScaledKKT:
    """Solver for the NT-scaled Newton system.

    With ``Abar = W^{-1} A`` and the scaled dual step ``dz' = W dz`` the system
    ``A^T dz = bx``, ``A dx - W^2 dz = W r`` becomes
    ``Abar^T dz' = bx``, ``Abar dx - dz' = r``. It is solved through a QR
    factor of ``Abar``, so ``W^2`` is never formed.
    """

    def __init__(self, A, scaling):
        self.Abar = scaling.inv_times_matrix(A)
        R = sla.qr(self.Abar, mode="r", check_finite=False)[0][: A.shape[1]]
        d = np.abs(np.diag(R))
        if d.size and d.min() <= 1e-14 * max(1.0, d.max()):
            R = R + np.diag(np.where(np.diag(R) < 0, -1.0, 1.0) * 1e-14 * max(1.0, d.max()))
        self.R = R

    def _once(self, bx, r):
        t = sla.solve_triangular(self.R, bx + self.Abar.T @ r, trans="T", check_finite=False)
        dx = sla.solve_triangular(self.R, t, check_finite=False)
        return dx, self.Abar @ dx - r

    def solve(self, bx, r, refine=1):
        dx, dzs = self._once(bx, r)
        for _ in range(refine):
            cx, cz = self._once(bx - self.Abar.T @ dzs, r - (self.Abar @ dx - dzs))
            dx += cx
            dzs += cz
        return dx, dzs


def _result(status, p, x, s, y, tau, it, res, t0):
    out = SolveResult(status=status, iterations=it, residuals=res, algorithm="ipm")
    out.solve_time = time.perf_counter() - t0
    if status is Status.OPTIMAL:
        out.x, out.s, out.y = x / tau, s / tau, y / tau
        out.objective = float(p.c @ out.x)
        out.dual_objective = float(-p.b @ out.y)
    elif status is Status.PRIMAL_INFEASIBLE:
        out.certificate = y / float(-(p.b @ y))
        out.y = out.certificate
    elif status is Status.DUAL_INFEASIBLE:
        out.certificate = x / float(-(p.c @ x))
        out.x = out.certificate
        out.objective = -math.inf
    else:
        if tau > 0:
            out.x, out.s, out.y = x / tau, s / tau, y / tau
            out.objective = float(p.c @ out.x)
            out.dual_objective = float(-p.b @ out.y)
    return out


def solve_ipm(p: ConicProblem, settings: SolverSettings, row_scale=None) -> SolveResult:
    """Interior-point solve of ``p``.

    ``row_scale`` is the diagonal ``D`` when ``p`` is an equilibrated copy
    ``(D A, D b)`` of some original problem; the primal residual test is then
    applied to ``D^{-1} r`` so the tolerance holds for the original rows.
    """
    t0 = time.perf_counter()
    A, b, c, l = p.A, p.b, p.c, p.l
    lay = p.layout
    n, m = p.n, p.m
    nu = lay.degree
    e = cones.identity_element(lay)
    resx0 = max(1.0, float(np.linalg.norm(c)))
    unscale = np.ones(len(b)) if row_scale is None else 1.0 / np.asarray(row_scale, dtype=float)
    resz0 = max(1.0, float(np.linalg.norm(b * unscale)))
    feastol, abstol, reltol = settings.abs_tol, settings.abs_tol, settings.rel_tol
    inftol = settings.infeas_tol

    # least-squares starting point, shifted into the cone interior
    x = np.linalg.lstsq(A, b, rcond=None)[0]
    s = cones.shift_into_cone(b - A @ x, lay)
    y = cones.shift_into_cone(np.linalg.lstsq(A.T, -c, rcond=None)[0], lay)
    tau, kappa = 1.0, 1.0

    res = {}
    for it in range(settings.ipm_max_iterations + 1):
        rx = A.T @ y + c * tau
        rz = A @ x + s - b * tau
        cx, by = float(c @ x), float(b @ y)
        rt = cx + by + kappa
        gap = float(s @ y)
        mu = (gap + tau * kappa) / (nu + 1)

        pres = np.linalg.norm(rz * unscale) / tau / resz0
        dres = np.linalg.norm(rx) / tau / resx0
        pcost, dcost = cx / tau, -by / tau
        gap_t = gap / tau**2
        denom = max(abs(pcost), abs(dcost))
        relgap = gap_t / denom if denom > 0 else math.inf
        res = {"primal": float(pres), "dual": float(dres), "gap": float(gap_t)}
        log.debug("ipm %3d pres %.2e dres %.2e gap %.2e relgap %.2e tau %.2e kappa %.2e",
                  it, pres, dres, gap_t, relgap, tau, kappa)

        if pres <= feastol and dres <= feastol and (gap_t <= abstol or relgap <= reltol):
            return _result(Status.OPTIMAL, p, x, s, y, tau, it, res, t0)
        if by < 0:
            pinf = np.linalg.norm(A.T @ y) / resx0 / -by
            if pinf <= inftol:
                res["certificate"] = float(pinf)
                return _result(Status.PRIMAL_INFEASIBLE, p, x, s, y, tau, it, res, t0)
        if cx < 0:
            dinf = np.linalg.norm((A @ x + s) * unscale) / resz0 / -cx
            if dinf <= inftol:
                res["certificate"] = float(dinf)
                return _result(Status.DUAL_INFEASIBLE, p, x, s, y, tau, it, res, t0)
        if it == settings.ipm_max_iterations:
            break

        try:
            W = cones.NTScaling(s, y, lay)
            kkt = _ScaledKKT(A, W)
        except (ValueError, np.linalg.LinAlgError, sla.LinAlgError) as exc:
            log.debug("ipm: scaling failed (%s)", exc)
            break
        lam = W.lam
        bs = W.apply_inv(b)
        x1, z1 = kkt.solve(-c, bs)
        denom_tau_base = float(c @ x1 + bs @ z1)

        # directions in scaled space: dzs = W dz, dss = W^{-1} ds
        def direction(ds_rhs, dk_rhs, eta):
            vs = cones.jordan_divide(lam, ds_rhs, lay)
            bt = -eta * rt - dk_rhs / tau
            x2, z2 = kkt.solve(-eta * rx, W.apply_inv(-eta * rz) - vs)
            dtau = (bt - c @ x2 - bs @ z2) / (denom_tau_base - kappa / tau)
            dx = x2 + dtau * x1
            dzs = z2 + dtau * z1
            dss = vs - dzs
            dkappa = (dk_rhs - kappa * dtau) / tau
            return dx, dzs, dss, dtau, dkappa

        def step_length(dzs, dss, dtau, dkappa):
            st = min(cones.max_step(lam, dss, lay), cones.max_step(lam, dzs, lay))
            if dtau < 0:
                st = min(st, -tau / dtau)
            if dkappa < 0:
                st = min(st, -kappa / dkappa)
            return st

        lamsq = cones.jordan_product(lam, lam, lay)
        dxa, dza, dsa, dta, dka = direction(-lamsq, -tau * kappa, 1.0)
        alpha_aff = min(1.0, step_length(dza, dsa, dta, dka))
        sigma = (1.0 - alpha_aff) ** 3

        corr = cones.jordan_product(dsa, dza, lay)
        ds_rhs = -lamsq + sigma * mu * e - corr
        dk_rhs = -tau * kappa + sigma * mu - dta * dka
        dx, dzs, dss, dtau, dkappa = direction(ds_rhs, dk_rhs, 1.0 - sigma)
        dz = W.apply_inv(dzs)
        # ds from the linearised primal equation rather than W @ dss, whose
        # rounding error grows with the conditioning of W near the boundary
        ds = b * dtau - (1.0 - sigma) * rz - A @ dx
        # the unscaled directions can drift from the scaled ones in nearly
        # degenerate cones, so the step also respects s and y directly
        st = min(step_length(dzs, dss, dtau, dkappa),
                 cones.max_step(s, ds, lay), cones.max_step(y, dz, lay))
        step = min(1.0, settings.step_fraction * st)
        if not step > 1e-14:
            log.debug("ipm: step length %.2e", step)
            break

        x = x + step * dx
        y = y + step * dz
        s = s + step * ds
        tau += step * dtau
        kappa += step * dkappa

    return _result(Status.ITER_LIMIT, p, x, s, y, tau, it, res, t0)
