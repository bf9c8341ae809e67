"""Cone arithmetic for products of a nonnegative orthant and Lorentz cones.

Vectors are laid out as the orthant part (length ``l``) followed by SOC
blocks. Within a block the first coordinate is the height ``t`` and the rest
is ``z``. Consecutive blocks of equal size are grouped so that every
operation is a handful of batched array expressions; a
:class:`ConeLayout` carries that grouping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConeLayout:
    l: int
    groups: tuple  # (start, count, q) runs of equal-size SOC blocks
    m: int

    @classmethod
    def from_dims(cls, l, soc):
        groups = []
        start = l
        for q in soc:
            if groups and groups[-1][2] == q:
                s0, cnt, _ = groups[-1]
                groups[-1] = (s0, cnt + 1, q)
            else:
                groups.append((start, 1, q))
            start += q
        return cls(l=int(l), groups=tuple(groups), m=start)

    @property
    def degree(self) -> int:
        return self.l + sum(cnt for _, cnt, _ in self.groups)

    def blocks(self, v):
        """Views ``(count, q)`` of the SOC groups of ``v``."""
        return [v[s : s + cnt * q].reshape(cnt, q) for s, cnt, q in self.groups]


def _as_layout(layout_or_l, slices=None) -> ConeLayout:
    if isinstance(layout_or_l, ConeLayout):
        return layout_or_l
    soc = [sl.stop - sl.start for sl in (slices or [])]
    return ConeLayout.from_dims(layout_or_l, soc)


def project_soc(v) -> np.ndarray:
    """Euclidean projection onto ``{(t, z) : ||z|| <= t}``."""
    v = np.asarray(v, dtype=float)
    return _project_blocks(v[None, :])[0]


def _project_blocks(B):
    t, z = B[:, 0], B[:, 1:]
    nz = np.linalg.norm(z, axis=1)
    out = B.copy()
    outside = nz > t
    zero = outside & (nz <= -t)
    mid = outside & ~zero
    if np.any(mid):
        scale = 0.5 * (t[mid] + nz[mid])
        out[mid, 0] = scale
        out[mid, 1:] = (scale / nz[mid])[:, None] * z[mid]
    out[zero] = 0.0
    return out


def project_cone(v, layout, slices=None) -> np.ndarray:
    lay = _as_layout(layout, slices)
    out = np.empty_like(v)
    out[: lay.l] = np.maximum(v[: lay.l], 0.0)
    for (s, cnt, q), B in zip(lay.groups, lay.blocks(v)):
        out[s : s + cnt * q] = _project_blocks(B).ravel()
    return out


def identity_element(layout, slices=None) -> np.ndarray:
    lay = _as_layout(layout, slices)
    e = np.zeros(lay.m)
    e[: lay.l] = 1.0
    for B in lay.blocks(e):
        B[:, 0] = 1.0
    return e


def max_violation(v, layout, slices=None) -> float:
    """``-min eigenvalue`` of ``v``: positive iff ``v`` lies outside ``K``."""
    lay = _as_layout(layout, slices)
    worst = -np.inf
    if lay.l:
        worst = float(np.max(-v[: lay.l]))
    for B in lay.blocks(v):
        worst = max(worst, float(np.max(np.linalg.norm(B[:, 1:], axis=1) - B[:, 0])))
    return worst


def shift_into_cone(v, layout, slices=None) -> np.ndarray:
    """Move ``v`` inside the cone along the identity direction.

    Points closer to the boundary than ``1e-3 * max(1, |v|_inf)`` are shifted
    as well: a start on the boundary leaves the interior-point method no room.
    """
    lay = _as_layout(layout, slices)
    a = max_violation(v, lay)
    if a < -1e-3 * max(1.0, float(np.max(np.abs(v)))):
        return v.copy()
    return v + (1.0 + a) * identity_element(lay)


def jordan_product(u, v, layout, slices=None) -> np.ndarray:
    lay = _as_layout(layout, slices)
    out = np.empty_like(u)
    k = lay.l
    out[:k] = u[:k] * v[:k]
    for (s, cnt, q), U, V in zip(lay.groups, lay.blocks(u), lay.blocks(v)):
        O = out[s : s + cnt * q].reshape(cnt, q)
        O[:, 0] = np.einsum("ij,ij->i", U, V)
        O[:, 1:] = U[:, :1] * V[:, 1:] + V[:, :1] * U[:, 1:]
    return out


def jordan_divide(lam, d, layout, slices=None) -> np.ndarray:
    """Solve ``lam o x = d`` for ``x`` (``lam`` in the cone interior)."""
    lay = _as_layout(layout, slices)
    out = np.empty_like(d)
    k = lay.l
    out[:k] = d[:k] / lam[:k]
    for (s, cnt, q), L, D in zip(lay.groups, lay.blocks(lam), lay.blocks(d)):
        O = out[s : s + cnt * q].reshape(cnt, q)
        l0, l1 = L[:, 0], L[:, 1:]
        n1 = np.linalg.norm(l1, axis=1)
        det = (l0 - n1) * (l0 + n1)
        x0 = (l0 * D[:, 0] - np.einsum("ij,ij->i", l1, D[:, 1:])) / det
        O[:, 0] = x0
        O[:, 1:] = (D[:, 1:] - x0[:, None] * l1) / l0[:, None]
    return out


def _soc_steps(U, D):
    """Largest ``a`` with ``U_i + a D_i`` in the SOC, row-wise, ``U`` interior."""
    u0, u1, d0, d1 = U[:, 0], U[:, 1:], D[:, 0], D[:, 1:]
    nu1 = np.linalg.norm(u1, axis=1)
    c = (u0 - nu1) * (u0 + nu1)
    b = 2.0 * (u0 * d0 - np.einsum("ij,ij->i", u1, d1))
    a = d0 * d0 - np.einsum("ij,ij->i", d1, d1)
    out = np.full(len(u0), math.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = np.abs(a) <= 1e-300
        sel = lin & (b < 0)
        out[sel] = -c[sel] / b[sel]
        quad = ~lin
        disc = b * b - 4.0 * a * c
        ok = quad & (disc >= 0)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        qq = -0.5 * (b + np.where(b >= 0, sq, -sq))
        r1 = np.where(ok, qq / a, math.inf)
        r2 = np.where(ok & (qq != 0), c / qq, math.inf)
        r1 = np.where(r1 > 0, r1, math.inf)
        r2 = np.where(r2 > 0, r2, math.inf)
        out[quad] = np.minimum(r1, r2)[quad]
    return out


def max_step(u, d, layout, slices=None) -> float:
    """Largest step keeping ``u + a d`` in the cone (``inf`` if unbounded)."""
    lay = _as_layout(layout, slices)
    step = math.inf
    k = lay.l
    if k:
        neg = d[:k] < 0
        if np.any(neg):
            step = float(np.min(-u[:k][neg] / d[:k][neg]))
    for U, D in zip(lay.blocks(u), lay.blocks(d)):
        step = min(step, float(np.min(_soc_steps(U, D))))
    return step


def _jnorms(B):
    n1 = np.linalg.norm(B[:, 1:], axis=1)
    prod = (B[:, 0] - n1) * (B[:, 0] + n1)
    if np.any(~(prod > 0)) or np.any(B[:, 0] <= 0):
        raise ValueError("iterate left the cone interior")
    return np.sqrt(prod)


class NTScaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-1} s = lam``.

    For an SOC block ``W = eta (2 v v^T - J)`` with ``J = diag(1, -1, ...)``,
    ``v^T J v = 1`` and ``W^{-1} = (2 J v v^T J - J) / eta``. The blocks are
    small, so each group keeps ``W``, ``W^{-1}`` and their squares densely as
    ``(count, q, q)`` stacks.
    """

    def __init__(self, s, z, layout, slices=None):
        lay = _as_layout(layout, slices)
        self.layout = lay
        k = lay.l
        if k and (np.any(s[:k] <= 0) or np.any(z[:k] <= 0)):
            raise ValueError("iterate left the orthant interior")
        self.d = np.sqrt(s[:k] / z[:k])
        self.mats = []
        for S, Z in zip(lay.blocks(s), lay.blocks(z)):
            sn, zn = _jnorms(S), _jnorms(Z)
            sbar = S / sn[:, None]
            zbar = Z / zn[:, None]
            gamma = np.sqrt(0.5 * (1.0 + np.einsum("ij,ij->i", sbar, zbar)))
            w = sbar.copy()
            w[:, 0] += zbar[:, 0]
            w[:, 1:] -= zbar[:, 1:]
            w /= 2.0 * gamma[:, None]
            # reflection vector of the scaling point
            w[:, 0] += 1.0
            w /= np.sqrt(2.0 * w[:, :1])
            jw = w.copy()
            jw[:, 1:] = -jw[:, 1:]
            eta = np.sqrt(sn / zn)[:, None, None]
            J = -np.eye(S.shape[1])
            J[0, 0] = 1.0
            Wm = (2.0 * w[:, :, None] * w[:, None, :] - J) * eta
            Wi = (2.0 * jw[:, :, None] * jw[:, None, :] - J) / eta
            self.mats.append((Wm, Wi, Wm @ Wm, Wi @ Wi))
        self.lam = self.apply(z)

    def _apply(self, r, which, diag):
        lay = self.layout
        out = np.empty_like(r)
        out[: lay.l] = diag * r[: lay.l]
        for (s, cnt, q), R, mats in zip(lay.groups, lay.blocks(r), self.mats):
            out[s : s + cnt * q] = (mats[which] @ R[:, :, None]).ravel()
        return out

    def apply(self, r):
        return self._apply(r, 0, self.d)

    def apply_inv(self, r):
        return self._apply(r, 1, 1.0 / self.d)

    def apply_sq(self, r):
        return self._apply(r, 2, self.d**2)

    def apply_inv_sq(self, r):
        return self._apply(r, 3, self.d**-2)

    def inv_times_matrix(self, A):
        """``W^{-1} @ A`` for a matrix with ``m`` rows."""
        lay = self.layout
        out = np.empty_like(A)
        out[: lay.l] = A[: lay.l] / self.d[:, None]
        n = A.shape[1]
        for (s, cnt, q), mats in zip(lay.groups, self.mats):
            blk = A[s : s + cnt * q].reshape(cnt, q, n)
            out[s : s + cnt * q] = (mats[1] @ blk).reshape(cnt * q, n)
        return out
