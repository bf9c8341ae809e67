"""Monte Carlo checks of robust designs against their CSI error models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from robust_slp.precoder import SlpInstance
from robust_slp.robustcons import RobustParams, residual
from robust_slp.uncertainty import (
    complex_from_lift,
    real_lift,
    sample_gaussian_error,
    sample_spherical_error,
)

_CHUNK = 50_000


def binomial_std(p, n) -> float:
    return math.sqrt(p * (1.0 - p) / n)


@dataclass(frozen=True)
class ChanceReport:
    per_user: np.ndarray  # empirical violation probability of each user
    samples: int
    z: float

    @property
    def worst(self) -> float:
        return float(np.max(self.per_user))

    @property
    def worst_user(self) -> int:
        return int(np.argmax(self.per_user))

    @property
    def half_width(self) -> float:
        """``z`` binomial standard deviations at the worst user's estimate."""
        return self.z * binomial_std(self.worst, self.samples)


def _ci_parts(instance: SlpInstance, k: int):
    a = instance.A[k]
    w = residual(a, instance.H_hat[k], instance.s[k], instance.sigma[k], instance.gamma[k])
    return a, w


def _uncertain_term(a, e, u_c):
    """``A T(e) u`` for a batch of complex errors ``e`` of shape ``(S, N)``."""
    return real_lift((e @ u_c)[:, None]) @ a.T


def validate_chance(u_tilde, instance: SlpInstance, params: RobustParams, samples: int,
                    rng: np.random.Generator, z: float = 1.96) -> ChanceReport:
    """Empirical probability that a user's CI constraint fails under Gaussian errors.

    A draw violates user ``k`` when any entry of ``A_k T(e_k) u`` falls below
    the residual ``w_k(u)``, i.e. when the true channel ``h_hat + e`` misses
    the CI region.
    """
    u = np.asarray(u_tilde, dtype=float)
    u_c = complex_from_lift(u)
    xi = params.per_user("xi", instance.K)
    if xi is None:
        raise ValueError("params must carry the error standard deviation xi")
    out = np.zeros(instance.K)
    for k in range(instance.K):
        a, w = _ci_parts(instance, k)
        wk = w(u)
        bad = 0
        done = 0
        while done < samples:
            n = min(_CHUNK, samples - done)
            e = sample_gaussian_error(rng, instance.N, float(xi[k]) ** 2, size=n)
            q = _uncertain_term(a, e, u_c)
            bad += int(np.count_nonzero(np.any(q < wk[None, :], axis=1)))
            done += n
        out[k] = bad / samples
    return ChanceReport(per_user=out, samples=int(samples), z=z)


@dataclass(frozen=True)
class WorstCaseReport:
    min_margin: float  # min over users, rows and samples of the CI margin
    sampled_inf: np.ndarray  # (K, 2) sampled minimum of a_j^T T(e) u
    analytic_inf: np.ndarray  # (K, 2) closed-form infimum -eps ||u|| ||a_j||
    samples: int
    grid_inf: np.ndarray | None = None  # (K, 2) angular-grid infimum when N == 1

    @property
    def approach(self) -> np.ndarray:
        """Ratio of sampled to analytic infimum (1 means attained)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.sampled_inf / self.analytic_inf


def angular_infimum(u_tilde, a_row, eps, points: int = 4096) -> float:
    """``min_phi a^T T(eps e^{i phi}) u`` for a single antenna.

    A uniform grid over ``phi`` brackets the minimum, which is then polished
    by a bounded scalar search.
    """
    u_c = complex_from_lift(np.asarray(u_tilde, dtype=float))
    if u_c.shape != (1,):
        raise ValueError("angular infimum is defined for N = 1")
    a_row = np.asarray(a_row, dtype=float)

    def f(phi):
        e = eps * np.exp(1j * np.atleast_1d(phi))
        y = e * u_c[0]
        return a_row[0] * y.real + a_row[1] * y.imag

    phis = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    vals = f(phis)
    i = int(np.argmin(vals))
    h = 2.0 * np.pi / points
    res = minimize_scalar(lambda p: float(f(p)[0]), bounds=(phis[i] - h, phis[i] + h),
                          method="bounded", options={"xatol": 1e-12})
    return float(min(vals[i], res.fun))


def validate_worst_case(u_tilde, instance: SlpInstance, epsilon, samples: int,
                        rng: np.random.Generator) -> WorstCaseReport:
    """CI margins under errors drawn on the sphere ``||e_k|| = epsilon_k``.

    The margin of row ``j`` is ``a_j^T (H_hat + T(e)) u - sigma sqrt(gamma) a_j^T s``.
    """
    u = np.asarray(u_tilde, dtype=float)
    u_c = complex_from_lift(u)
    eps = np.broadcast_to(np.asarray(epsilon, dtype=float), (instance.K,))
    norm_u = float(np.linalg.norm(u))
    sampled = np.zeros((instance.K, 2))
    analytic = np.zeros((instance.K, 2))
    grid = np.zeros((instance.K, 2)) if instance.N == 1 else None
    min_margin = math.inf
    for k in range(instance.K):
        a, w = _ci_parts(instance, k)
        nominal = -w(u)  # a_j^T H_hat u - sigma sqrt(gamma) a_j^T s
        analytic[k] = -eps[k] * norm_u * np.linalg.norm(a, axis=1)
        if eps[k] > 0:
            e = sample_spherical_error(rng, instance.N, float(eps[k]), mode="surface", size=samples)
            q = _uncertain_term(a, e, u_c)
            sampled[k] = q.min(axis=0)
        min_margin = min(min_margin, float(np.min(nominal + sampled[k])))
        if grid is not None:
            grid[k] = [angular_infimum(u, a[j], float(eps[k])) for j in range(2)]
    return WorstCaseReport(min_margin=min_margin, sampled_inf=sampled, analytic_inf=analytic,
                           samples=int(samples), grid_inf=grid)

