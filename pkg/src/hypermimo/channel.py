"""Correlated Rayleigh fading channels and the noisy MIMO forward model.

Initial channels follow the Kronecker model ``H0 = Rr^(1/2) He Ru^(1/2)``
with exponential correlation matrices; trajectories evolve as the
first-order Gauss-Markov recursion ``H_t = rho H_{t-1} + sqrt(1 - rho^2) E_t``.
Complex entries have unit variance in the ``E|h|^2 = 1`` sense.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import psd_sqrt
from .rng import complex_normal


@dataclass(frozen=True)
class KroneckerConfig:
    n_rx: int = 4
    n_tx: int = 2
    rho_k: float = 0.6

    def __post_init__(self):
        if not (self.n_rx >= self.n_tx >= 1):
            raise DomainError(f"need n_rx >= n_tx >= 1, got {self.n_rx}, {self.n_tx}")
        if not (0.0 <= self.rho_k < 1.0):
            raise DomainError(f"rho_k must lie in [0, 1), got {self.rho_k}")


@dataclass(frozen=True)
class JakesConfig:
    rho: float = 0.98
    horizon: int = 4

    def __post_init__(self):
        if not (0.0 <= self.rho <= 1.0):
            raise DomainError(f"rho must lie in [0, 1], got {self.rho}")
        if self.horizon < 0:
            raise DomainError("horizon must be non-negative")


@dataclass
class ChannelSequence:
    """``initial`` is H0; ``steps`` holds H1..HT."""

    initial: np.ndarray
    steps: list = field(default_factory=list)

    @property
    def matrices(self):
        """All matrices H0..HT stacked along a leading axis."""
        return np.stack([self.initial, *self.steps])

    def __len__(self):
        return 1 + len(self.steps)


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float
    snr_db: float = float("nan")

    @classmethod
    def from_snr(cls, snr_db, n_tx, n_rx):
        return cls(sigma2=sigma2_for_snr(snr_db, n_tx, n_rx), snr_db=float(snr_db))


def exp_correlation_matrix(n, rho_k):
    """Exponential correlation matrix with entries ``rho_k ** |i - j|``."""
    if not (0.0 <= rho_k < 1.0):
        raise DomainError(f"rho_k must lie in [0, 1), got {rho_k}")
    idx = np.arange(n)
    return np.power(float(rho_k), np.abs(idx[:, None] - idx[None, :])).astype(np.float64)


def kronecker_factors(cfg):
    """Square roots of the receive and transmit correlation matrices."""
    rr = psd_sqrt(exp_correlation_matrix(cfg.n_rx, cfg.rho_k))
    ru = psd_sqrt(exp_correlation_matrix(cfg.n_tx, cfg.rho_k))
    return rr, ru


def sample_kronecker(cfg, rng, size=None):
    """Draw Kronecker-correlated channel(s).

    Parameters
    ----------
    cfg : KroneckerConfig
    rng : numpy.random.Generator
    size : int, optional
        Number of independent channels. ``None`` returns a single
        ``(n_rx, n_tx)`` matrix, otherwise ``(size, n_rx, n_tx)``.
    """
    rr, ru = kronecker_factors(cfg)
    shape = (cfg.n_rx, cfg.n_tx) if size is None else (size, cfg.n_rx, cfg.n_tx)
    He = complex_normal(rng, shape)
    return rr @ He @ ru


def jakes_step(H_prev, rho, rng):
    if not (0.0 <= rho <= 1.0):
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    H_prev = np.asarray(H_prev, dtype=np.complex128)
    E = complex_normal(rng, H_prev.shape)
    return rho * H_prev + np.sqrt(1.0 - rho * rho) * E


def jakes_sequence(H0, cfg, rng):
    """Iterate :func:`jakes_step` ``cfg.horizon`` times starting from ``H0``."""
    H = np.asarray(H0, dtype=np.complex128)
    steps = []
    for _ in range(cfg.horizon):
        H = jakes_step(H, cfg.rho, rng)
        steps.append(H)
    return ChannelSequence(initial=np.asarray(H0, dtype=np.complex128), steps=steps)


def sigma2_for_snr(snr_db, n_tx, n_rx):
    """Per-entry complex noise variance for ``SNR = n_tx / (sigma2 n_rx)``."""
    return n_tx / (n_rx * 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0))


def transmit(H, x, noise, rng):
    """Forward model ``y = H x + n``.

    ``H`` is ``(..., n_rx, n_tx)``, ``x`` is ``(..., n_tx)``. ``noise`` is a
    :class:`NoiseModel` or a (broadcastable) array of variances ``sigma2``.
    """
    H = np.asarray(H)
    x = np.asarray(x)
    if H.shape[-1] != x.shape[-1]:
        raise DimensionError(f"H has {H.shape[-1]} columns but x has length {x.shape[-1]}")
    sigma2 = noise.sigma2 if isinstance(noise, NoiseModel) else noise
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    clean = (H @ x[..., None])[..., 0]
    n = complex_normal(rng, clean.shape) * np.sqrt(sigma2)[..., None]
    return clean + n
