"""Constructive-interference constraint builders.

Each user contributes the affine CI residual ``w(u) = m - W u`` with
``m = sigma sqrt(gamma) A s`` and ``W = A H_hat``; the non-robust constraint
is ``w(u) <= 0``. Every robust variant becomes two rows of the canonical SOC
shape ``||u|| <= f @ u + g``:

==============  ================================================  ===========
method          row ``j`` of the right-hand side                  coefficient
==============  ================================================  ===========
WorstCase       ``-(1 / (eps ||a_j||)) * w_j(u)``                 ``eps``
SafeApprox1     ``-(sqrt(2) / (rho xi)) * (V w(u))_j``            ``rho(v)``
SafeApprox2     ``-(sqrt(2) / (psi xi)) * (V w(u))_j``            ``psi(v)``
SphereBounding  ``-(sqrt(2) / (alpha xi)) * (V w(u))_j``          ``alpha(v)``
==============  ================================================  ===========

with ``V = (A A^T)^{-1/2}``. SafeApprox1 is stated with an entrywise max over
the two rows; since ``-c max(v1, v2) = min(-c v1, -c v2)`` for ``c > 0`` the
max form is exactly the pair of rows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from robust_slp.errors import DomainError
from robust_slp.robustcons.coefficients import alpha, psi, rho
from robust_slp.robustcons.smallmat import inv_sqrt_2x2


class Method(str, enum.Enum):
    NON_ROBUST = "NonRobust"
    WORST_CASE = "WorstCase"
    SAFE_APPROX_1 = "SafeApprox1"
    SAFE_APPROX_2 = "SafeApprox2"
    SPHERE_BOUNDING = "SphereBounding"

    @classmethod
    def parse(cls, name) -> "Method":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        try:
            return _METHOD_ALIASES[key]
        except KeyError:
            raise DomainError(f"unknown method {name!r}") from None

    @property
    def short(self) -> str:
        """Compact label: NR, W, A1, A2 or B."""
        return _SHORT[self]

    @property
    def stochastic(self) -> bool:
        return self in STOCHASTIC_METHODS

    def coefficient(self, upsilon) -> float:
        """Conservatism coefficient of a stochastic method at ``upsilon``."""
        return _COEFFICIENTS[self](upsilon)


STOCHASTIC_METHODS = (Method.SAFE_APPROX_1, Method.SAFE_APPROX_2, Method.SPHERE_BOUNDING)

_COEFFICIENTS = {
    Method.SAFE_APPROX_1: rho,
    Method.SAFE_APPROX_2: psi,
    Method.SPHERE_BOUNDING: alpha,
}

_METHOD_ALIASES = {m.value.lower(): m for m in Method}
_METHOD_ALIASES.update(
    {
        "nr": Method.NON_ROBUST,
        "w": Method.WORST_CASE,
        "wc": Method.WORST_CASE,
        "a1": Method.SAFE_APPROX_1,
        "sa1": Method.SAFE_APPROX_1,
        "a2": Method.SAFE_APPROX_2,
        "sa2": Method.SAFE_APPROX_2,
        "b": Method.SPHERE_BOUNDING,
        "sb": Method.SPHERE_BOUNDING,
    }
)


@dataclass(frozen=True)
class RobustParams:
    """Uncertainty parameters; scalars apply to every user.

    ``epsilon`` is the CSI error radius (WorstCase), ``xi`` the error standard
    deviation and ``upsilon`` the violation probability (stochastic methods).
    """

    epsilon: float | tuple | None = None
    xi: float | tuple | None = None
    upsilon: float | None = None

    @classmethod
    def gaussian(cls, xi2, upsilon):
        """Parameters from the error *variance* ``xi2``."""
        return cls(xi=float(np.sqrt(xi2)), upsilon=upsilon)

    def per_user(self, name, K):
        value = getattr(self, name)
        if value is None:
            return None
        arr = np.broadcast_to(np.asarray(value, dtype=float), (K,))
        return arr


@dataclass(frozen=True)
class CiUser:
    """One user's CI data: ``A`` (2x2), ``H_hat`` (2 x 2N), ``s`` (2,), ``sigma``, ``gamma``."""

    A: np.ndarray
    H_hat: np.ndarray
    s: np.ndarray
    sigma: float = 1.0
    gamma: float = 1.0


@dataclass(frozen=True)
class AffineResidual:
    """``w(u) = m - W @ u``."""

    m: np.ndarray
    W: np.ndarray

    def __call__(self, u_tilde):
        return self.m - self.W @ np.asarray(u_tilde, dtype=float)


@dataclass(frozen=True)
class SocConstraint:
    """``||u|| <= f @ u + g``."""

    f: np.ndarray
    g: float
    user: int = -1
    row: int = -1

    def slack(self, u_tilde):
        return float(self.f @ u_tilde + self.g - np.linalg.norm(u_tilde))


@dataclass(frozen=True)
class LinearConstraint:
    """``c @ u >= d``."""

    c: np.ndarray
    d: float
    user: int = -1
    row: int = -1

    def slack(self, u_tilde):
        return float(self.c @ u_tilde - self.d)


@dataclass(frozen=True)
class ConstraintSet:
    method: Method
    dim: int
    linear: tuple = field(default_factory=tuple)
    soc: tuple = field(default_factory=tuple)

    def arrays(self):
        """Stacked ``(C, d, F, g)`` for vectorised evaluation."""
        C = np.array([r.c for r in self.linear]).reshape(-1, self.dim)
        d = np.array([r.d for r in self.linear], dtype=float)
        F = np.array([r.f for r in self.soc]).reshape(-1, self.dim)
        g = np.array([r.g for r in self.soc], dtype=float)
        return C, d, F, g

    def for_user(self, k):
        return [r for r in self.linear + self.soc if r.user == k]

    def __len__(self):
        return len(self.linear) + len(self.soc)


def residual(A, H_hat, s, sigma, gamma) -> AffineResidual:
    """Certain part of the CI inequality for one user."""
    if gamma < 0:
        raise DomainError(f"SINR target must be >= 0, got {gamma}")
    if sigma <= 0:
        raise DomainError(f"noise standard deviation must be > 0, got {sigma}")
    a = np.asarray(getattr(A, "a", A), dtype=float)
    m = sigma * math.sqrt(gamma) * (a @ np.asarray(s, dtype=float))
    W = a @ np.asarray(H_hat, dtype=float)
    return AffineResidual(m=m, W=W)


def _positive(values, name, method):
    if values is None:
        raise DomainError(f"{method.value} requires parameter {name!r}")
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise DomainError(f"{method.value} requires {name} > 0, got {values}")
    return values


def build_constraints(method, users, params: RobustParams | None = None) -> ConstraintSet:
    """CI constraints of all ``users`` for ``method``.

    NonRobust yields ``2K`` linear rows; every robust method yields ``2K`` SOC
    rows.
    """
    method = Method.parse(method)
    users = list(users)
    params = params or RobustParams()
    K = len(users)
    if K == 0:
        raise DomainError("at least one user is required")
    dim = np.asarray(users[0].H_hat).shape[-1]

    eps = xi = None
    beta = None
    if method is Method.WORST_CASE:
        eps = _positive(params.per_user("epsilon", K), "epsilon", method)
    elif method.stochastic:
        xi = _positive(params.per_user("xi", K), "xi", method)
        if params.upsilon is None:
            raise DomainError(f"{method.value} requires parameter 'upsilon'")
        beta = method.coefficient(params.upsilon)

    linear, soc = [], []
    for k, user in enumerate(users):
        w = residual(user.A, user.H_hat, user.s, user.sigma, user.gamma)
        if method is Method.NON_ROBUST:
            for j in range(2):
                linear.append(LinearConstraint(c=w.W[j].copy(), d=float(w.m[j]), user=k, row=j))
            continue
        a = np.asarray(getattr(user.A, "a", user.A), dtype=float)
        if method is Method.WORST_CASE:
            scale = 1.0 / (eps[k] * np.linalg.norm(a, axis=1))
            P, q = scale[:, None] * w.W, scale * w.m
        else:
            V = inv_sqrt_2x2(a @ a.T)
            scale = math.sqrt(2.0) / (beta * xi[k])
            P, q = scale * (V @ w.W), scale * (V @ w.m)
        for j in range(2):
            soc.append(SocConstraint(f=P[j].copy(), g=float(-q[j]), user=k, row=j))
    return ConstraintSet(method=method, dim=dim, linear=tuple(linear), soc=tuple(soc))


def check_feasible(u_tilde, cs: ConstraintSet, tol: float = 1e-6) -> bool:
    """True iff every row of ``cs`` holds at ``u_tilde`` up to ``tol``."""
    u = np.asarray(u_tilde, dtype=float)
    if u.shape != (cs.dim,):
        raise DomainError(f"point has shape {u.shape}, constraints expect ({cs.dim},)")
    C, d, F, g = cs.arrays()
    if len(d) and np.any(C @ u < d - tol):
        return False
    if len(g) and np.any(np.linalg.norm(u) > F @ u + g + tol):
        return False
    return True


@dataclass(frozen=True)
class TightnessReport:
    upsilon: float
    rho: float
    psi: float
    alpha: float
    nesting: tuple  # methods ordered from the smallest to the largest feasible set

    @property
    def tightest(self) -> Method:
        return self.nesting[-1]

    def chain(self) -> str:
        return " ⊆ ".join(f"F_{m.short}" for m in self.nesting)


_SHORT = {
    Method.NON_ROBUST: "NR",
    Method.WORST_CASE: "W",
    Method.SAFE_APPROX_1: "A1",
    Method.SAFE_APPROX_2: "A2",
    Method.SPHERE_BOUNDING: "B",
}


def compare_tightness(upsilon) -> TightnessReport:
    """Coefficients at ``upsilon`` and the feasible-set inclusion they imply.

    All three stochastic constraints share the form
    ``||u|| <= -(sqrt(2) / (beta xi)) (V w(u))_j``, so a larger ``beta``
    gives a smaller feasible set.
    """
    r, p, a = rho(upsilon), psi(upsilon), alpha(upsilon)
    coef = {Method.SAFE_APPROX_1: r, Method.SAFE_APPROX_2: p, Method.SPHERE_BOUNDING: a}
    nesting = tuple(sorted(coef, key=lambda m: -coef[m]))
    return TightnessReport(upsilon=float(upsilon), rho=r, psi=p, alpha=a, nesting=nesting)
