"""Square QAM constellations, symbol sampling, slicing and SER counting.

Symbols are handled as integer index arrays of shape ``(..., n_tx)``; the
point with index ``k`` is ``levels[k // M] + 1j * levels[k % M]`` where
``M = sqrt(K)`` and ``levels`` is sorted ascending.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UnsupportedOrderError

SUPPORTED_ORDERS = (4, 16, 64)


@dataclass(frozen=True, eq=False)
class Constellation:
    order: int
    points: np.ndarray
    real_levels: np.ndarray

    @property
    def side(self):
        return len(self.real_levels)

    def values(self, indices):
        """Complex symbols for an index array."""
        return self.points[np.asarray(indices)]

    def real_symbols(self, indices):
        """Real-composite symbols ``[Re x; Im x]`` for an index array."""
        idx = np.asarray(indices)
        m = self.side
        return np.concatenate([self.real_levels[idx // m], self.real_levels[idx % m]], axis=-1)


def make_qam(order=4):
    """Unit average power square QAM."""
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedOrderError(f"QAM order must be one of {SUPPORTED_ORDERS}, got {order}")
    m = int(round(np.sqrt(order)))
    raw = np.arange(-(m - 1), m, 2, dtype=np.float64)
    # per-component power doubles for the complex symbol
    levels = raw / np.sqrt(2.0 * np.mean(raw**2))
    points = (levels[:, None] + 1j * levels[None, :]).reshape(-1)
    return Constellation(order=order, points=points, real_levels=levels)


def sample_symbols(c, n_tx, rng, size=None):
    """Uniform i.i.d. symbol indices, shape ``(n_tx,)`` or ``(size, n_tx)``."""
    shape = (n_tx,) if size is None else (size, n_tx)
    return rng.integers(0, c.order, size=shape)


def nearest_level(levels, values):
    """Index of the nearest level; ties resolve to the smaller index."""
    d = np.abs(np.asarray(values, dtype=np.float64)[..., None] - levels)
    return np.argmin(d, axis=-1)


def hard_decision(c, soft):
    """Slice complex soft estimates to constellation indices."""
    soft = np.asarray(soft)
    return nearest_level(c.real_levels, soft.real) * c.side + nearest_level(c.real_levels, soft.imag)


def hard_decision_real(c, soft_real):
    """Slice real-composite soft estimates ``[Re; Im]`` to indices."""
    soft_real = np.asarray(soft_real, dtype=np.float64)
    n = soft_real.shape[-1] // 2
    i = nearest_level(c.real_levels, soft_real[..., :n])
    q = nearest_level(c.real_levels, soft_real[..., n:])
    return i * c.side + q


def symbol_errors(truth, est):
    truth = np.asarray(truth)
    est = np.asarray(est)
    if truth.shape != est.shape:
        raise DimensionError(f"shape mismatch {truth.shape} vs {est.shape}")
    return int(np.count_nonzero(truth != est))


def ser(truth, est):
    """Fraction of user symbols decoded to a different constellation point."""
    truth = np.asarray(truth)
    if truth.size == 0:
        return 0.0
    return symbol_errors(truth, est) / truth.size
