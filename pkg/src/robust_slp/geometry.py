"""Constellations, distance-preserving CI regions and ML detection.

A DPCIR of a constellation point ``s`` is the wedge with vertex ``mu * s``
bounded by translates of the point's two Voronoi edges. It is written as
``A @ y >= mu * A @ s`` where the rows of ``A`` are the inner unit normals of
those edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from robust_slp.errors import (
    DomainError,
    InvalidModulationError,
    SingularGramError,
    UnsupportedConstellationError,
)

_UNIT_POWER_TOL = 1e-12
_TIE_RTOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Constellation:
    """Finite equiprobable constellation with unit average power.

    ``points`` has shape ``(M, 2)`` holding real/imaginary pairs. ``kind`` is
    ``"psk"`` or ``"custom"``; custom constellations carry one CI matrix per
    point in ``cir``.
    """

    points: np.ndarray
    kind: str = "psk"
    phase_offset: float = 0.0
    cir: tuple | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return len(self.points)

    def complex_points(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    def __len__(self):
        return self.order


@dataclass(frozen=True)
class CirMatrix:
    """Per-symbol DPCIR description: rows of ``a`` are boundary inner normals."""

    a: np.ndarray
    symbol_index: int

    def gram(self) -> np.ndarray:
        return self.a @ self.a.T


def psk_constellation(M: int, phase_offset: float = 0.0) -> Constellation:
    """M-PSK on the unit circle at angles ``phase_offset + 2*pi*m/M``."""
    if int(M) != M or M < 3:
        raise InvalidModulationError(
            f"PSK order must be an integer >= 3, got {M!r} "
            "(M = 2 gives coincident region boundaries)"
        )
    M = int(M)
    theta = phase_offset + 2.0 * np.pi * np.arange(M) / M
    pts = np.column_stack([np.cos(theta), np.sin(theta)])
    return Constellation(points=_frozen(pts), kind="psk", phase_offset=float(phase_offset))


def custom_constellation(points, cir_matrices, normalize: bool = False) -> Constellation:
    """Constellation with user-supplied CI matrices, one ``2x2`` per point.

    Only points with unbounded decision regions make sense here (inner QAM
    points do not have a wedge-shaped CI region).
    """
    pts = np.asarray(points)
    if np.iscomplexobj(pts):
        pts = np.column_stack([pts.real, pts.imag])
    pts = np.array(pts, dtype=float).reshape(-1, 2)
    power = np.mean(np.sum(pts**2, axis=1))
    if normalize:
        pts = pts / np.sqrt(power)
    elif abs(power - 1.0) > _UNIT_POWER_TOL:
        raise DomainError(f"constellation average power is {power:.16g}, expected 1")
    cirs = tuple(_frozen(np.asarray(a, dtype=float).reshape(2, 2)) for a in cir_matrices)
    if len(cirs) != len(pts):
        raise DomainError(f"{len(cirs)} CI matrices given for {len(pts)} points")
    for k, a in enumerate(cirs):
        _check_gram(a @ a.T, k)
    return Constellation(points=_frozen(pts), kind="custom", cir=cirs)


def _check_gram(g, k):
    tr = np.trace(g)
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    if tr <= 0 or det < 1e-12 * tr * tr:
        raise SingularGramError(f"CI matrix of symbol {k} has a singular Gram matrix")


def dpcir_matrix(c: Constellation, k: int) -> CirMatrix:
    """DPCIR matrix of constellation point ``k``.

    For PSK the rows are the unit normals at ``theta_k -/+ (pi/2 - pi/M)``,
    so that ``A @ s_k = sin(pi/M) * ones(2)``.
    """
    if not 0 <= k < c.order:
        raise DomainError(f"symbol index {k} outside 0..{c.order - 1}")
    if c.kind == "custom":
        if c.cir is None:
            raise UnsupportedConstellationError(
                "custom constellation without user-supplied CI matrices"
            )
        return CirMatrix(a=c.cir[k], symbol_index=int(k))
    if c.kind != "psk":
        raise UnsupportedConstellationError(f"unknown constellation kind {c.kind!r}")
    M = c.order
    theta = c.phase_offset + 2.0 * np.pi * k / M
    half = np.pi / 2 - np.pi / M
    a = np.array(
        [
            [np.cos(theta - half), np.sin(theta - half)],
            [np.cos(theta + half), np.sin(theta + half)],
        ]
    )
    return CirMatrix(a=_frozen(a), symbol_index=int(k))


def cir_stack(c: Constellation) -> np.ndarray:
    """All CI matrices of ``c`` stacked into shape ``(M, 2, 2)``."""
    return np.stack([dpcir_matrix(c, k).a for k in range(c.order)])


def ml_detect(c: Constellation, y):
    """Minimum-distance symbol decision.

    ``y`` is a 2-vector or an array of shape ``(..., 2)``; the result is an
    int or an integer array of shape ``(...)``. Distances equal to within a
    relative ``1e-12`` count as ties and go to the lowest index.
    """
    y = np.asarray(y, dtype=float)
    d2 = np.sum((y[..., None, :] - c.points) ** 2, axis=-1)
    dmin = d2.min(axis=-1, keepdims=True)
    near = d2 <= dmin * (1.0 + _TIE_RTOL) + 1e-300
    idx = np.argmax(near, axis=-1)
    if idx.ndim == 0:
        return int(idx)
    return idx
