"""Inverse complementary error function and the conservatism coefficients.

The three coefficients scale the common SOC form of the stochastic CI
constraints; a larger coefficient means a smaller feasible set:

* ``rho(v)   = -sqrt(2) * erfc_inv(2 sqrt(1 - v))`` (probability bounding),
* ``psi(v)   = erfc_inv(v / 4)`` (safe approximation via arrow matrices),
* ``alpha(v) = sqrt(chi2_2.ppf(1 - v)) = sqrt(-2 ln v)`` (sphere bounding).
"""

import math

import numpy as np

from robust_slp.errors import DomainError

_SQRT_PI = math.sqrt(math.pi)
_TWO_OVER_SQRT_PI = 2.0 / _SQRT_PI

# normal-quantile starting values, |error| < 4.5e-4 (Abramowitz & Stegun 26.2.23)
_C = (2.515517, 0.802853, 0.010328)
_D = (1.432788, 0.189269, 0.001308)


def _initial_guess(y):
    """Rough erfc_inv for 0 < y <= 1 from a rational normal-tail quantile."""
    t = math.sqrt(-2.0 * math.log(0.5 * y))
    z = t - (_C[0] + t * (_C[1] + t * _C[2])) / (1.0 + t * (_D[0] + t * (_D[1] + t * _D[2])))
    return max(z, 0.0) / math.sqrt(2.0)


def _erfc_inv_upper(y):
    """erfc_inv on (0, 1]: Halley refinement of the rational start."""
    if y == 1.0:
        return 0.0
    x = _initial_guess(y)
    for _ in range(12):
        f = math.erfc(x) - y
        fp = -_TWO_OVER_SQRT_PI * math.exp(-x * x)
        if fp == 0.0:
            break
        # Halley step for erfc: f'' = -2 x f'
        step = f / (fp + x * f)
        x -= step
        if abs(step) <= 1e-17 * max(1.0, abs(x)):
            break
    return x


def erfc_inv(y: float) -> float:
    """Inverse of ``math.erfc`` on ``(0, 2)``.

    Odd about ``y = 1``: ``erfc_inv(2 - y) == -erfc_inv(y)`` (``2 - y`` is
    exact in floating point for ``y`` in ``[1, 2)``).
    """
    y = float(y)
    if not 0.0 < y < 2.0:
        raise DomainError(f"erfc_inv is defined on (0, 2), got {y!r}")
    if y <= 1.0:
        return _erfc_inv_upper(y)
    return -_erfc_inv_upper(2.0 - y)


def _check_violation(v):
    v = float(v)
    if not 0.0 < v <= 0.5:
        raise DomainError(f"violation probability must lie in (0, 1/2], got {v!r}")
    return v


def rho(v: float) -> float:
    """Probability-bounding coefficient."""
    v = _check_violation(v)
    # -erfc_inv(2 sqrt(1-v)) == erfc_inv(2 - 2 sqrt(1-v)); the complement is
    # formed without cancellation
    return math.sqrt(2.0) * erfc_inv(2.0 * v / (1.0 + math.sqrt(1.0 - v)))


def psi(v: float) -> float:
    """Safe-approximation (arrow matrix, n = 2) coefficient."""
    v = _check_violation(v)
    return erfc_inv(v / 4.0)


def alpha(v: float) -> float:
    """Sphere-bounding radius: square root of the 2-dof chi-square quantile."""
    v = _check_violation(v)
    return math.sqrt(-2.0 * math.log(v))


def coefficient_table(grid):
    """Array of shape ``(len(grid), 3)`` with columns rho, psi, alpha."""
    return np.array([[rho(v), psi(v), alpha(v)] for v in grid])
