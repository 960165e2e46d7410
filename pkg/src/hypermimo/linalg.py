"""Real-composite transforms and the small dense kernels used by the detectors.

All learning-side math runs on the real equivalent of the complex model::

    [Re y]   [Re H  -Im H] [Re x]
    [Im y] = [Im H   Re H] [Im x]

Functions accept optional leading batch dimensions.
"""

import numpy as np

from .errors import DimensionError, NonPSDError, NonSymmetricError, SingularMatrixError

SYMMETRY_TOL = 1e-12
EIGEN_TOL = 1e-10


def to_real_composite(H):
    """Map complex ``(..., n, m)`` matrices to real ``(..., 2n, 2m)`` ones."""
    H = np.asarray(H)
    if H.ndim < 2:
        raise DimensionError(f"expected a matrix, got shape {H.shape}")
    re, im = H.real, H.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2).astype(np.float64)


def to_real_vector(v):
    """Stack ``[Re v; Im v]`` along the last axis."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=-1).astype(np.float64)


def from_real_vector(r):
    """Inverse of :func:`to_real_vector`."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape[-1] % 2:
        raise DimensionError(f"real vector length must be even, got {r.shape[-1]}")
    n = r.shape[-1] // 2
    return r[..., :n] + 1j * r[..., n:]


def psd_sqrt(R):
    """Symmetric PSD square root via an eigendecomposition.

    Eigenvalues in ``[-1e-10, 0)`` are clamped to zero so rank-deficient
    correlation matrices are accepted.

    Raises
    ------
    NonSymmetricError
        If ``R`` is asymmetric beyond ``1e-12`` (relative to its scale).
    NonPSDError
        If an eigenvalue is below ``-1e-10``.
    """
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {R.shape}")
    scale = max(1.0, float(np.max(np.abs(R))) if R.size else 1.0)
    if np.max(np.abs(R - R.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NonSymmetricError("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (R + R.T))
    if w.size and w.min() < -EIGEN_TOL * scale:
        raise NonPSDError(f"smallest eigenvalue {w.min():.3e} is negative")
    w = np.clip(w, 0.0, None)
    S = (V * np.sqrt(w)) @ V.T
    return 0.5 * (S + S.T)


def solve_regularized(A, lam, b):
    """Return ``(A^T A + lam I)^{-1} A^T b``.

    ``A`` is ``(..., n, m)`` and ``b`` is ``(..., n)``; ``lam`` is a scalar or
    broadcasts against the batch dimensions.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("regularization must be non-negative")
    if A.shape[-2] != b.shape[-1]:
        raise DimensionError(f"A has {A.shape[-2]} rows but b has length {b.shape[-1]}")
    m = A.shape[-1]
    At = np.swapaxes(A, -1, -2)
    G = At @ A + lam[..., None, None] * np.eye(m)
    rhs = (At @ b[..., None])[..., 0]
    if np.any(lam == 0):
        rank = np.asarray(np.linalg.matrix_rank(A))
        unregularized = np.broadcast_to(lam == 0, rank.shape)
        if np.any(rank[unregularized] < m):
            raise SingularMatrixError("A is rank deficient and lam = 0")
    try:
        return np.linalg.solve(G, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
