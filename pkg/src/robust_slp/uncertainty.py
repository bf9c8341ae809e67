"""Real-valued lifting, channel/CSI-error sampling and CI-term statistics.

Complex row channels ``h`` (length ``N``) are lifted to ``2 x 2N`` real
matrices ``T(h) = [[Re h, -Im h], [Im h, Re h]]`` acting on the stacked
transmit vector ``u_tilde = [Re u; Im u]``.

Random draws always go through an explicit :class:`numpy.random.Generator`.
:func:`trial_rng` derives independent per-trial streams from one root seed by
using the trial coordinates as the ``spawn_key`` of a
:class:`numpy.random.SeedSequence`; a stream depends only on
``(seed, keys)``, never on the order trials are executed in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from robust_slp.errors import DegenerateWhiteningError, DomainError
from robust_slp.robustcons.smallmat import inv_sqrt_2x2


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the substream addressed by ``keys`` under root ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class UncertaintyModel:
    """CSI error description: ``perfect``, ``spherical`` (radius) or ``gaussian`` (variance)."""

    kind: str = "perfect"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("perfect", "spherical", "gaussian"):
            raise DomainError(f"unknown uncertainty kind {self.kind!r}")
        if not np.isfinite(self.value) or self.value < 0:
            raise DomainError(f"uncertainty parameter must be finite and >= 0, got {self.value}")

    @classmethod
    def perfect(cls):
        return cls("perfect", 0.0)

    @classmethod
    def spherical(cls, radius):
        return cls("spherical", float(radius))

    @classmethod
    def gaussian(cls, variance):
        return cls("gaussian", float(variance))

    def sample(self, rng, N, size=None):
        if self.kind == "spherical":
            return sample_spherical_error(rng, N, self.value, mode="ball", size=size)
        if self.kind == "gaussian":
            return sample_gaussian_error(rng, N, self.value, size=size)
        shape = (N,) if size is None else tuple(np.atleast_1d(size)) + (N,)
        return np.zeros(shape, dtype=complex)


def t_transform(h) -> np.ndarray:
    """Real ``2 x 2N`` matrix of a complex row (batched over leading axes)."""
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.stack([top, bottom], axis=-2)


def real_lift(u) -> np.ndarray:
    """``[Re u; Im u]`` for a complex vector ``u``."""
    u = np.asarray(u, dtype=complex)
    return np.concatenate([u.real, u.imag], axis=-1)


def complex_from_lift(u_tilde) -> np.ndarray:
    u_tilde = np.asarray(u_tilde, dtype=float)
    n = u_tilde.shape[-1] // 2
    return u_tilde[..., :n] + 1j * u_tilde[..., n:]


def _complex_normal(rng, shape, variance):
    """i.i.d. CN(0, variance): real and imaginary parts each variance/2."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _shape(N, size):
    return (N,) if size is None else tuple(np.atleast_1d(size)) + (N,)


def sample_channel(rng, N, size=None) -> np.ndarray:
    """Rayleigh channel row(s) with unit per-entry complex variance."""
    return _complex_normal(rng, _shape(N, size), 1.0)


def sample_gaussian_error(rng, N, xi2, size=None) -> np.ndarray:
    """Gaussian CSI error ``e ~ CN(0, xi2 * I)``."""
    if xi2 < 0:
        raise DomainError(f"error variance must be >= 0, got {xi2}")
    return _complex_normal(rng, _shape(N, size), float(xi2))


def sample_spherical_error(rng, N, eps, mode="ball", size=None) -> np.ndarray:
    """Norm-bounded CSI error.

    ``mode="surface"`` draws uniformly on the sphere ``||e|| = eps``;
    ``mode="ball"`` draws uniformly inside the ``2N``-dimensional real ball,
    radius ``eps * U**(1/(2N))``.
    """
    if eps < 0:
        raise DomainError(f"radius must be >= 0, got {eps}")
    if mode not in ("surface", "ball"):
        raise DomainError(f"mode must be 'surface' or 'ball', got {mode!r}")
    shape = _shape(N, size)
    g = _complex_normal(rng, shape, 1.0)
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    direction = g / np.where(norm > 0, norm, 1.0)
    if mode == "surface":
        radius = eps
    else:
        radius = eps * rng.random(shape[:-1] + (1,)) ** (1.0 / (2 * N))
    return radius * direction


def vec_error_covariance(N, xi2) -> np.ndarray:
    """Covariance of ``vec(T(e))`` for ``e ~ CN(0, xi2 I)`` (``4N x 4N``)."""
    J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    eye = np.eye(2 * N)
    J = np.kron(np.eye(N), J2)
    return 0.5 * xi2 * np.block([[eye, J], [J.T, eye]])


def _amat(A):
    return np.asarray(getattr(A, "a", A), dtype=float)


def q_covariance(A, u_tilde, xi2) -> np.ndarray:
    """Covariance ``xi2/2 * ||u||^2 * A A^T`` of the uncertain term ``A T(e) u``."""
    a = _amat(A)
    u_tilde = np.asarray(u_tilde, dtype=float)
    return 0.5 * xi2 * float(u_tilde @ u_tilde) * (a @ a.T)


def whitening_matrix(A, u_tilde, xi) -> np.ndarray:
    """Inverse square root of :func:`q_covariance` (``xi`` is the standard deviation)."""
    a = _amat(A)
    unorm = float(np.linalg.norm(u_tilde))
    if unorm == 0.0 or xi <= 0:
        raise DegenerateWhiteningError(
            "whitening needs a nonzero transmit vector and a positive error level"
        )
    return (np.sqrt(2.0) / (xi * unorm)) * inv_sqrt_2x2(a @ a.T)
