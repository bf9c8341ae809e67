"""Closed-form 2x2 symmetric matrix functions."""

import numpy as np

from robust_slp.errors import SingularGramError

_SYM_RTOL = 1e-12
_DET_RTOL = 1e-12


def _check_spd(m):
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise SingularGramError(f"expected a 2x2 matrix, got shape {m.shape}")
    tr = m[0, 0] + m[1, 1]
    scale = max(abs(m[0, 1]), abs(m[1, 0]), abs(tr))
    if abs(m[0, 1] - m[1, 0]) > _SYM_RTOL * scale:
        raise SingularGramError("matrix is not symmetric")
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if not tr > 0 or det < _DET_RTOL * tr * tr:
        raise SingularGramError(f"matrix is not positive definite (trace={tr:.3g}, det={det:.3g})")
    return m, tr, det


def sqrt_2x2(m) -> np.ndarray:
    """Principal square root, ``(m + sqrt(det) I) / sqrt(tr + 2 sqrt(det))``."""
    m, tr, det = _check_spd(m)
    rdet = np.sqrt(det)
    return (m + rdet * np.eye(2)) / np.sqrt(tr + 2.0 * rdet)


def inv_sqrt_2x2(m) -> np.ndarray:
    """Inverse principal square root of a 2x2 SPD matrix."""
    s = sqrt_2x2(m)
    det = s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0]
    inv = np.array([[s[1, 1], -s[0, 1]], [-s[1, 0], s[0, 0]]]) / det
    # exact symmetry; the closed form is symmetric up to rounding
    return 0.5 * (inv + inv.T)
