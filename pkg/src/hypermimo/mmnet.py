"""Channel-specific unrolled detector.

Each of the ``L`` layers applies a learnable linear correction followed by
an elementwise Gaussian-posterior denoiser over the per-component QAM
levels::

    z_t     = x_t + A_t (y - H x_t)
    x_{t+1} = denoise(z_t, softplus(theta2_t))

with ``x_0 = 0``. Everything is in the real-composite domain.

Parameters are exchanged as a flat vector in layer-major order; within a
layer ``A_t`` (shape ``2n_tx x 2n_rx``, row-major) precedes ``theta2_t``
(length ``2n_tx``). The same order is used on disk and as the hypernetwork
output.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import DimensionError, DivergenceError
from .linalg import to_real_composite
from .modem import Constellation, hard_decision_real, make_qam, sample_symbols
from .channel import sigma2_for_snr, transmit
from .optim import AdamState, ParamStore, adam_step

DEFAULT_LAYERS = 6
# softplus(THETA2_UNIT) == 1
THETA2_UNIT = float(np.log(np.expm1(1.0)))


@dataclass(frozen=True)
class MMNetShape:
    n_rx: int = 4
    n_tx: int = 2
    n_layers: int = DEFAULT_LAYERS

    @property
    def a_shape(self):
        return (2 * self.n_tx, 2 * self.n_rx)

    @property
    def a_size(self):
        return 4 * self.n_tx * self.n_rx

    @property
    def per_layer(self):
        return self.a_size + 2 * self.n_tx

    @property
    def size(self):
        return self.n_layers * self.per_layer


@dataclass(frozen=True, eq=False)
class MMNetParams:
    A: np.ndarray  # (L, 2 n_tx, 2 n_rx)
    theta2: np.ndarray  # (L, 2 n_tx)

    @property
    def shape(self):
        L, two_tx, two_rx = self.A.shape
        return MMNetShape(n_rx=two_rx // 2, n_tx=two_tx // 2, n_layers=L)

    def flatten(self):
        L = self.A.shape[0]
        return np.concatenate([self.A.reshape(L, -1), self.theta2], axis=1).reshape(-1)

    @classmethod
    def from_flat(cls, vec, shape):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (shape.size,):
            raise DimensionError(f"expected {shape.size} parameters, got shape {vec.shape}")
        per = vec.reshape(shape.n_layers, shape.per_layer)
        A = per[:, : shape.a_size].reshape(shape.n_layers, *shape.a_shape).copy()
        return cls(A=A, theta2=per[:, shape.a_size :].copy())

    def equals(self, other):
        return np.array_equal(self.A, other.A) and np.array_equal(self.theta2, other.theta2)


@dataclass(frozen=True)
class DetectorInput:
    y_real: np.ndarray
    H_real: np.ndarray
    sigma2: object

    @classmethod
    def from_complex(cls, y, H, sigma2):
        y = np.asarray(y)
        return cls(np.concatenate([y.real, y.imag], axis=-1), to_real_composite(H), sigma2)


def denoise(z, sigma2, levels):
    """Posterior mean of a uniform discrete symbol seen through Gaussian noise.

    Returns ``sum_s s exp(-(z - s)^2 / sigma2) / sum_s exp(-(z - s)^2 / sigma2)``
    elementwise; works on arrays or tape variables.
    """
    levels = np.asarray(levels, dtype=np.float64)
    zs = ad.reshape(z, ad.value_of(z).shape + (1,))
    s2 = ad.reshape(sigma2, ad.value_of(sigma2).shape + (1,))
    logits = ad.neg(ad.div(ad.square(ad.sub(zs, levels)), s2))
    return ad.sum_(ad.mul(ad.softmax(logits, axis=-1), levels), axis=-1)


def mmnet_forward(w, y_real, H_real, levels, shape):
    """Soft real-composite estimate ``(..., 2 n_tx)``.

    ``w`` is a flat parameter vector ``(P,)`` shared across the batch, or
    per-sample parameters ``(..., P)``.
    """
    wv = ad.value_of(w)
    if wv.shape[-1] != shape.size:
        raise DimensionError(f"expected {shape.size} parameters, got {wv.shape[-1]}")
    lead = wv.shape[:-1]
    per = ad.reshape(w, lead + (shape.n_layers, shape.per_layer))
    H_real = np.asarray(H_real, dtype=np.float64)
    y_real = np.asarray(y_real, dtype=np.float64)
    x = np.zeros(np.broadcast_shapes(y_real.shape[:-1], lead) + (2 * shape.n_tx,))
    for t in range(shape.n_layers):
        A = ad.reshape(per[..., t, : shape.a_size], lead + shape.a_shape)
        s2 = ad.softplus(per[..., t, shape.a_size :])
        residual = ad.sub(y_real, ad.matvec(H_real, x))
        z = ad.add(x, ad.matvec(A, residual))
        x = denoise(z, s2, levels)
    return x


def shape_for(n_params, n_rx, n_tx):
    """Infer the layer count from a flat parameter length."""
    per = 4 * n_rx * n_tx + 2 * n_tx
    if n_params % per:
        raise DimensionError(f"{n_params} parameters is not a whole number of layers of {per}")
    return MMNetShape(n_rx=n_rx, n_tx=n_tx, n_layers=n_params // per)


def mmnet_soft(params, y, H, constellation):
    """Real-composite soft estimate for complex ``y``/``H``."""
    w = params.flatten() if isinstance(params, MMNetParams) else np.asarray(params, dtype=np.float64)
    H = np.asarray(H)
    shape = shape_for(w.shape[-1], H.shape[-2], H.shape[-1])
    inp = DetectorInput.from_complex(y, H, None)
    return mmnet_forward(w, inp.y_real, inp.H_real, constellation.real_levels, shape)


def mmnet_detect(params, y, H, constellation):
    """Hard decisions (constellation indices) from the unrolled detector."""
    return hard_decision_real(constellation, mmnet_soft(params, y, H, constellation))


@dataclass(frozen=True)
class PretrainConfig:
    iterations: int = 1000
    batch_size: int = 500
    lr: float = 1e-3
    snr_low_db: float = 5.0
    snr_high_db: float = 10.0
    init_std: float = 0.01

    @property
    def snr_mid_db(self):
        return 0.5 * (self.snr_low_db + self.snr_high_db)


def init_params(H, rng, shape, std=0.01):
    """Scaled matched filter ``H_r^T / tr(H_r^T H_r)`` plus a small perturbation."""
    Hr = to_real_composite(H)
    mf = Hr.T / np.trace(Hr.T @ Hr)
    A = mf[None] + std * rng.standard_normal((shape.n_layers,) + shape.a_shape)
    theta2 = np.full((shape.n_layers, 2 * shape.n_tx), THETA2_UNIT)
    return MMNetParams(A=A, theta2=theta2)


def draw_training_batch(H, constellation, size, snr_range, rng):
    """Fresh symbols, SNRs and noisy observations for a fixed channel."""
    n_rx, n_tx = H.shape
    idx = sample_symbols(constellation, n_tx, rng, size=size)
    snr = rng.uniform(snr_range[0], snr_range[1], size=size)
    sigma2 = sigma2_for_snr(snr, n_tx, n_rx)
    y = transmit(H, constellation.values(idx), sigma2, rng)
    return idx, y, sigma2


def squared_error_loss(x_true, x_soft):
    """Mean over the batch of the per-sample squared error."""
    return ad.mean(ad.sum_(ad.square(ad.sub(x_soft, x_true)), axis=-1))


def pretrain_mmnet(H, cfg, rng, constellation=None, n_layers=DEFAULT_LAYERS, history=None):
    """Fit a detector to one fixed channel ``H`` by ADAM on the squared error.

    Parameters
    ----------
    H : complex array (n_rx, n_tx)
    cfg : PretrainConfig
    rng : numpy.random.Generator
    history : list, optional
        Receives the per-iteration training loss.

    Returns
    -------
    MMNetParams
    """
    H = np.asarray(H, dtype=np.complex128)
    c = constellation or make_qam(4)
    shape = MMNetShape(n_rx=H.shape[0], n_tx=H.shape[1], n_layers=n_layers)
    init = init_params(H, rng, shape, std=cfg.init_std)
    params = ParamStore({"w": init.flatten()})
    state = AdamState.for_params(params, lr=cfg.lr)
    Hr = to_real_composite(H)
    for it in range(cfg.iterations):
        idx, y, _ = draw_training_batch(H, c, cfg.batch_size, (cfg.snr_low_db, cfg.snr_high_db), rng)
        yr = np.concatenate([y.real, y.imag], axis=-1)
        tape = ad.Tape()
        w = tape.variable(params["w"])
        loss = squared_error_loss(c.real_symbols(idx), mmnet_forward(w, yr, Hr, c.real_levels, shape))
        value = float(loss.value)
        if not np.isfinite(value):
            raise DivergenceError(f"non-finite pretraining loss at iteration {it}")
        if history is not None:
            history.append(value)
        (g,) = tape.gradient(loss, [w])
        params, state = adam_step(params, {"w": g}, state)
    return MMNetParams.from_flat(params["w"], shape)
