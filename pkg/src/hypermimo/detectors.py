"""Zero-forcing, MMSE and exhaustive maximum-likelihood detectors.

Each detector takes a :class:`DetectionProblem` whose arrays may carry
leading batch dimensions, and returns constellation indices of shape
``(..., n_tx)``.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SearchSpaceTooLarge
from .linalg import from_real_vector, solve_regularized, to_real_composite, to_real_vector
from .modem import Constellation, hard_decision

ML_ENUMERATION_CAP = 2**20


@dataclass(frozen=True, eq=False)
class DetectionProblem:
    y: np.ndarray
    H: np.ndarray
    sigma2: object
    constellation: Constellation

    def __post_init__(self):
        y, H = np.asarray(self.y), np.asarray(self.H)
        if H.shape[-2] != y.shape[-1]:
            raise DimensionError(f"H has {H.shape[-2]} rows but y has length {y.shape[-1]}")


def linear_estimate(p, lam):
    """Soft complex estimate ``(H^H H + lam I)^{-1} H^H y`` via the real composite."""
    xr = solve_regularized(to_real_composite(p.H), lam, to_real_vector(p.y))
    return from_real_vector(xr)


def detect_zf(p):
    return hard_decision(p.constellation, linear_estimate(p, 0.0))


def detect_mmse(p):
    # unit-energy symbols: the complex regularizer sigma2 carries over unchanged
    return hard_decision(p.constellation, linear_estimate(p, np.asarray(p.sigma2)))


def candidate_indices(order, n_tx):
    """All index vectors in row-major (lexicographic) order."""
    return np.array(list(itertools.product(range(order), repeat=n_tx)), dtype=np.int64).reshape(-1, n_tx)


def ml_objective(p, candidates):
    """``||y - H x||^2`` for every candidate, shape ``(..., n_candidates)``."""
    X = p.constellation.values(candidates)  # (C, n_tx)
    HX = np.einsum("...rn,cn->...cr", np.asarray(p.H), X)
    r = np.asarray(p.y)[..., None, :] - HX
    return np.sum(r.real**2 + r.imag**2, axis=-1)


def detect_ml(p, cap=ML_ENUMERATION_CAP):
    """Exact argmin of ``||y - H x||^2`` over all constellation vectors.

    Ties resolve to the first candidate in lexicographic index order.
    """
    n_tx = np.asarray(p.H).shape[-1]
    size = p.constellation.order**n_tx
    if size > cap:
        raise SearchSpaceTooLarge(f"{size} candidates exceeds the cap of {cap}")
    cands = candidate_indices(p.constellation.order, n_tx)
    best = np.argmin(ml_objective(p, cands), axis=-1)
    return cands[best]
