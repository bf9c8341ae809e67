"""Power-minimising symbol-level precoder.

The design problem is written in epigraph form over ``x = (u_tilde, t)``::

    minimize t   s.t.  ||u_tilde|| <= t,  CI constraints of the chosen method

Minimising ``t`` is a monotone transform of minimising the power
``u_tilde @ u_tilde``; the program stays a pure SOCP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from robust_slp.errors import DomainError
from robust_slp.geometry import Constellation, cir_stack
from robust_slp.robustcons import (
    CiUser,
    ConstraintSet,
    Method,
    RobustParams,
    build_constraints,
    check_feasible,
    inv_sqrt_2x2,
)
from robust_slp.socp import ConicProblem, SolverSettings, SolveResult, Status, solve
from robust_slp.uncertainty import sample_channel, t_transform


@dataclass(frozen=True)
class SlpInstance:
    """Per-slot design data for ``K`` users and ``N`` antennas.

    Arrays: ``H_hat`` ``(K, 2, 2N)``, ``s`` ``(K, 2)``, ``A`` ``(K, 2, 2)``,
    ``sigma`` and ``gamma`` ``(K,)`` (noise standard deviation and linear
    SINR target).
    """

    H_hat: np.ndarray
    s: np.ndarray
    A: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    h_hat: np.ndarray | None = field(default=None, repr=False)
    symbols: np.ndarray | None = None

    def __post_init__(self):
        H = np.asarray(self.H_hat, dtype=float)
        K = H.shape[0]
        object.__setattr__(self, "H_hat", H)
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float).reshape(K, 2))
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float).reshape(K, 2, 2))
        object.__setattr__(self, "sigma", np.broadcast_to(np.asarray(self.sigma, float), (K,)).copy())
        object.__setattr__(self, "gamma", np.broadcast_to(np.asarray(self.gamma, float), (K,)).copy())
        if H.ndim != 3 or H.shape[1] != 2 or H.shape[2] % 2:
            raise DomainError(f"H_hat must have shape (K, 2, 2N), got {H.shape}")
        if self.K > self.N:
            raise DomainError(f"K <= N is required, got K={self.K}, N={self.N}")
        if np.any(self.sigma <= 0):
            raise DomainError("noise standard deviations must be > 0")
        if np.any(self.gamma < 0):
            raise DomainError("SINR targets must be >= 0")

    @property
    def K(self) -> int:
        return self.H_hat.shape[0]

    @property
    def N(self) -> int:
        return self.H_hat.shape[2] // 2

    @classmethod
    def from_complex(cls, h_hat, symbols, constellation: Constellation, sigma2=1.0, gamma=1.0):
        """Instance from complex channel rows ``(K, N)`` and symbol indices."""
        h_hat = np.atleast_2d(np.asarray(h_hat, dtype=complex))
        symbols = np.asarray(symbols, dtype=int).reshape(-1)
        cir = cir_stack(constellation)
        return cls(
            H_hat=t_transform(h_hat),
            s=constellation.points[symbols],
            A=cir[symbols],
            sigma=np.sqrt(np.asarray(sigma2, dtype=float)),
            gamma=gamma,
            h_hat=h_hat,
            symbols=symbols,
        )

    def users(self):
        return [
            CiUser(A=self.A[k], H_hat=self.H_hat[k], s=self.s[k],
                   sigma=float(self.sigma[k]), gamma=float(self.gamma[k]))
            for k in range(self.K)
        ]

    def with_gamma(self, gamma) -> "SlpInstance":
        return SlpInstance(self.H_hat, self.s, self.A, self.sigma, gamma, self.h_hat, self.symbols)


def draw_instance(rng, N, K, constellation: Constellation, sigma2=1.0, gamma=1.0) -> SlpInstance:
    """Rayleigh channel estimates and uniformly drawn symbols."""
    h_hat = sample_channel(rng, N, size=K)
    symbols = rng.integers(0, constellation.order, size=K)
    return SlpInstance.from_complex(h_hat, symbols, constellation, sigma2, gamma)


def assemble_constraints(cs: ConstraintSet) -> ConicProblem:
    """Epigraph SOCP of a constraint set; variables ``(u_tilde, t)``."""
    d = cs.dim
    n = d + 1
    C, dl, F, g = cs.arrays()
    L, S = len(dl), len(g)
    m = L + (S + 1) * n
    A = np.zeros((m, n))
    b = np.zeros(m)
    # c @ u >= d  ->  s = c @ u - d >= 0
    A[:L, :d] = -C
    b[:L] = -dl
    # power cone: s = (t, u)
    r = L
    A[r, d] = -1.0
    A[r + 1 : r + n, :d] = -np.eye(d)
    r += n
    eye = np.eye(d)
    for i in range(S):
        # s = (f @ u + g, u)
        A[r, :d] = -F[i]
        b[r] = g[i]
        A[r + 1 : r + n, :d] = -eye
        r += n
    c = np.zeros(n)
    c[d] = 1.0
    return ConicProblem(c=c, A=A, b=b, l=L, soc=(n,) * (S + 1))


def assemble(instance: SlpInstance, method, params: RobustParams | None = None) -> ConicProblem:
    cs = build_constraints(method, instance.users(), params)
    return assemble_constraints(cs)


@dataclass
class PrecoderOutput:
    status: Status
    u_tilde: np.ndarray | None
    power: float
    norm_t: float
    constraints: ConstraintSet | None = field(default=None, repr=False)
    result: SolveResult | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def power_dbw(self) -> float:
        if not self.power >= 0:  # NaN when no optimal point
            return math.nan
        return 10.0 * math.log10(self.power) if self.power > 0 else -math.inf

    @property
    def iterations(self) -> int:
        return self.result.iterations if self.result else 0

    @property
    def solve_time(self) -> float:
        return self.result.solve_time if self.result else 0.0


def solve_slp(instance: SlpInstance, method, params: RobustParams | None = None,
              settings: SolverSettings | None = None) -> PrecoderOutput:
    """Solve the non-robust (P1) or robust (P2) power minimisation.

    For an optimal status the reported transmit vector satisfies every CI row
    to within ``1e-6`` and ``power == norm_t**2`` with ``norm_t = ||u_tilde||``.
    """
    cs = build_constraints(method, instance.users(), params)
    problem = assemble_constraints(cs)
    res = solve(problem, settings)
    if res.status is not Status.OPTIMAL:
        return PrecoderOutput(res.status, None, math.nan, math.nan, cs, res)
    u = res.x[: cs.dim].copy()
    if not check_feasible(u, cs, POST_TOL):
        u = _radial_restore(u, cs)
    norm_t = float(np.linalg.norm(u))
    return PrecoderOutput(res.status, u, norm_t**2, norm_t, cs, res)


POST_TOL = 1e-6


def _radial_restore(u, cs):
    """Smallest scale-up ``t u`` (``t >= 1``) that satisfies every row exactly.

    All CI rows read ``c^T u >= d`` or ``||u|| <= f^T u + g`` with ``d >= 0``
    and ``g <= 0``, so the feasible set is closed under scaling by ``t >= 1``.
    A solve that is optimal to relative tolerance but misses a row by a few
    ``1e-6`` at large power is moved onto the set at a relative power cost of
    the same order as the solver tolerance.
    """
    C, d, F, g = cs.arrays()
    need = [1.0]
    nu = float(np.linalg.norm(u))
    for lhs, rhs in ((C @ u, d), (F @ u - nu, -g)):
        short = lhs < rhs
        if np.any(short):
            if np.any(lhs[short] <= 0) or np.any(rhs[short] < 0):
                return u  # not recoverable by scaling; leave the solver's point
            need.append(float(np.max(rhs[short] / lhs[short])))
    t = max(need)
    return u * (t * (1.0 + 1e-12))


def is_post_feasible(out: PrecoderOutput, tol=1e-6) -> bool:
    return out.optimal and check_feasible(out.u_tilde, out.constraints, tol)


@dataclass(frozen=True)
class ComplexityBound:
    """Analytic interior-point bound, to be multiplied by ``ln(1/eps)``."""

    value: float
    multiplier: str = "ln(1/eps)"

    def __float__(self):
        return self.value

    def with_accuracy(self, eps) -> float:
        return self.value * math.log(1.0 / eps)


def complexity_bound(N: int, K: int, which: str = "P2") -> ComplexityBound:
    """Worst-case complexity order of the non-robust (P1) or robust (P2) design.

    The ``O(.)`` constant is taken as 1.
    """
    if not (N >= K >= 1):
        raise DomainError(f"need N >= K >= 1, got N={N}, K={K}")
    n = 2 * N + 1
    which = str(which).upper()
    if which == "P1":
        value = 2.0 * math.sqrt(2 * K + 2) * (n**3 + (2 * K + 1) * n * (N + 1))
    elif which == "P2":
        value = 2.0 * math.sqrt(4 * K + 3) * (n**3 + 4 * K * N**2 * n + n * (N + 1))
    else:
        raise DomainError(f"which must be 'P1' or 'P2', got {which!r}")
    return ComplexityBound(value=value)


def cqp_complexity(n: int, n_linear: int, cone_sizes) -> float:
    """Generic CQP bound ``n sqrt(l + 2m) (n^2 + l (n + 1) + sum n_i^2)``."""
    cone_sizes = list(cone_sizes)
    msoc = len(cone_sizes)
    return n * math.sqrt(n_linear + 2 * msoc) * (
        n**2 + n_linear * (n + 1) + sum(q * q for q in cone_sizes)
    )


def feasibility_margin(instance: SlpInstance, method) -> float:
    """Largest uncertainty level at which a robust design stays feasible.

    All robust rows have the form ``r ||u|| <= (P u)_j - q_j`` with ``q > 0``
    for ``gamma > 0``, so the set is non-empty iff
    ``r < c* = max_{||v|| <= 1} min_j (P v)_j``. ``r`` is ``epsilon`` for
    WorstCase and ``beta * xi / sqrt(2)`` for the stochastic methods, with
    ``beta`` the method's coefficient. Returns ``c*``.
    """
    method = Method.parse(method)
    if method is Method.NON_ROBUST:
        raise DomainError("the non-robust design has no uncertainty level")
    rows = []
    for user in instance.users():
        a = np.asarray(getattr(user.A, "a", user.A), dtype=float)
        W = a @ user.H_hat
        if method is Method.WORST_CASE:
            rows.append(W / np.linalg.norm(a, axis=1)[:, None])
        else:
            rows.append(inv_sqrt_2x2(a @ a.T) @ W)
    P = np.vstack(rows)
    L, d = P.shape
    # variables (v, t): maximize t  s.t.  P v - t >= 0,  ||v|| <= 1
    A = np.zeros((L + d + 1, d + 1))
    A[:L, :d] = -P
    A[:L, d] = 1.0
    A[L + 1 :, :d] = -np.eye(d)
    b = np.zeros(L + d + 1)
    b[L] = 1.0
    c = np.zeros(d + 1)
    c[d] = -1.0
    res = solve(ConicProblem(c=c, A=A, b=b, l=L, soc=(d + 1,)))
    if res.status is not Status.OPTIMAL:
        raise RuntimeError(f"margin problem ended with status {res.status.value}")
    return float(res.x[d])
