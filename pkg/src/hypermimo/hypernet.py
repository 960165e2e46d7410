"""Hypernetwork that maps CSI to unrolled-detector weights, and its training.

The hypernetwork is three dense layers with ELU on every layer, widths
``[d_in, hidden, P]`` where ``d_in = 2 n_rx n_tx + 1`` (real and imaginary
parts of ``H`` plus ``sqrt(sigma2)``) and ``P`` is the detector parameter
count. Training minimizes

    loss_a + beta * sum_i || W_i^bank - g(H_i, sigma2_i) ||_1

where ``loss_a`` is the mean squared error of the soft detector output over
fresh Kronecker channels. ``beta = 0`` is the plain (unregularized) model.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .channel import sample_kronecker, sigma2_for_snr, transmit
from .errors import DimensionError, DivergenceError
from .linalg import to_real_composite, to_real_vector
from .mmnet import MMNetParams, MMNetShape, mmnet_forward, squared_error_loss
from .modem import hard_decision_real, make_qam, sample_symbols
from .optim import AdamState, ParamStore, PlateauScheduler, adam_step

log = logging.getLogger(__name__)

HIDDEN_UNITS = 100
LAYER_NAMES = (("W1", "b1"), ("W2", "b2"), ("W3", "b3"))


def feature_size(n_rx, n_tx):
    return 2 * n_rx * n_tx + 1


def init_hypernet(mshape, rng, hidden=HIDDEN_UNITS):
    """Glorot-uniform weights, zero biases."""
    d_in = feature_size(mshape.n_rx, mshape.n_tx)
    widths = [d_in, d_in, hidden, mshape.size]
    arrays = {}
    for (wn, bn), fan_in, fan_out in zip(LAYER_NAMES, widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        arrays[wn] = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        arrays[bn] = np.zeros(fan_out)
    return ParamStore(arrays)


def detector_shape(theta, n_rx, n_tx):
    """Detector layout implied by the hypernetwork output width."""
    P = theta["W3"].shape[0]
    per = 4 * n_rx * n_tx + 2 * n_tx
    if P % per:
        raise DimensionError(f"output width {P} is not a multiple of {per}")
    return MMNetShape(n_rx=n_rx, n_tx=n_tx, n_layers=P // per)


def channel_features(H, sigma2):
    """``[vec(Re H); vec(Im H); sqrt(sigma2)]`` with row-major ``vec``."""
    H = np.asarray(H)
    lead = H.shape[:-2]
    s = np.broadcast_to(np.sqrt(np.asarray(sigma2, dtype=np.float64)), lead)
    return np.concatenate(
        [H.real.reshape(lead + (-1,)), H.imag.reshape(lead + (-1,)), s[..., None]], axis=-1
    )


def hypernet_forward(theta, H, sigma2, out_gain=1.0, out_bias=0.0):
    """Flat detector parameters ``(..., P)`` generated for channel(s) ``H``.

    ``theta`` maps layer names to arrays or tape variables.
    """
    h = channel_features(H, sigma2)
    if h.shape[-1] != ad.value_of(theta["W1"]).shape[1]:
        raise DimensionError(
            f"channel gives {h.shape[-1]} features, hypernetwork expects {ad.value_of(theta['W1']).shape[1]}"
        )
    for wn, bn in LAYER_NAMES:
        h = ad.elu(ad.add(ad.matvec(theta[wn], h), theta[bn]))
    if out_gain != 1.0 or out_bias != 0.0:
        h = ad.add(ad.mul(h, out_gain), out_bias)
    return h


def hypermimo_soft(theta, y, H, sigma2, constellation, out_gain=1.0, out_bias=0.0):
    H = np.asarray(H)
    shape = detector_shape(theta, H.shape[-2], H.shape[-1])
    w = hypernet_forward(theta, H, sigma2, out_gain, out_bias)
    return mmnet_forward(w, to_real_vector(y), to_real_composite(H), constellation.real_levels, shape)


def hypermimo_detect(theta, problem, out_gain=1.0, out_bias=0.0):
    """Hard decisions from the detector generated for ``problem.H``."""
    soft = hypermimo_soft(
        theta, problem.y, problem.H, problem.sigma2, problem.constellation, out_gain, out_bias
    )
    return hard_decision_real(problem.constellation, soft)


@dataclass
class Batch:
    """Training examples: one observation per channel."""

    H: np.ndarray  # (B, n_rx, n_tx) complex
    x: np.ndarray  # (B, n_tx) constellation indices
    y: np.ndarray  # (B, n_rx) complex
    sigma2: np.ndarray  # (B,)

    def __len__(self):
        return self.H.shape[0]


def draw_batch(channel_cfg, constellation, size, snr_range, rng):
    H = sample_kronecker(channel_cfg, rng, size=size)
    x = sample_symbols(constellation, channel_cfg.n_tx, rng, size=size)
    snr = rng.uniform(snr_range[0], snr_range[1], size=size)
    sigma2 = sigma2_for_snr(snr, channel_cfg.n_tx, channel_cfg.n_rx)
    y = transmit(H, constellation.values(x), sigma2, rng)
    return Batch(H=H, x=x, y=y, sigma2=sigma2)


def loss_a(theta, batch, constellation, out_gain=1.0, out_bias=0.0):
    """Mean over the batch of ``||x - x_soft||^2`` in the real composite."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    soft = hypermimo_soft(theta, batch.y, batch.H, batch.sigma2, constellation, out_gain, out_bias)
    return squared_error_loss(constellation.real_symbols(batch.x), soft)


def loss_b(theta, bank, beta, out_gain=1.0, out_bias=0.0):
    """``beta`` times the summed l1 distance to every bank detector."""
    if len(bank) == 0:
        raise ValueError("empty bank")
    H = np.stack([e.channel for e in bank.entries])
    s2 = np.array([e.sigma2_ref for e in bank.entries])
    target = np.stack([e.flat_params for e in bank.entries])
    generated = hypernet_forward(theta, H, s2, out_gain, out_bias)
    return ad.mul(ad.sum_(ad.abs_(ad.sub(target, generated))), float(beta))


@dataclass
class TrainConfig:
    beta: float = 1.0
    batch_channels: int = 100
    iterations: int = 50_000
    snr_low_db: float = 5.0
    snr_high_db: float = 10.0
    lr_init: float = 1e-3
    check_interval: int = 500
    lr_factor: float = 0.9
    lr_floor: float = 1e-6
    patience: int = 1
    threshold: float = 1e-4
    out_gain: float = 1.0
    out_bias: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.batch_channels < 1:
            raise ValueError("batch_channels must be positive")


@dataclass
class CheckRecord:
    iteration: int
    loss_total: float
    loss_a: float
    loss_b: float
    lr: float


@dataclass
class TrainResult:
    theta: ParamStore
    history: list = field(default_factory=list)

    def log_csv(self):
        lines = ["iteration,loss_total,loss_a,loss_b,lr"]
        for r in self.history:
            lines.append(f"{r.iteration},{r.loss_total!r},{r.loss_a!r},{r.loss_b!r},{r.lr!r}")
        return "\n".join(lines) + "\n"


def objective(theta, batch, bank, cfg, constellation):
    """``(total, loss_a, loss_b)``; ``loss_b`` is 0.0 when it does not apply."""
    la = loss_a(theta, batch, constellation, cfg.out_gain, cfg.out_bias)
    if cfg.beta > 0 and bank is not None and len(bank):
        lb = loss_b(theta, bank, cfg.beta, cfg.out_gain, cfg.out_bias)
        return ad.add(la, lb), la, lb
    return la, la, 0.0


def train(theta0, cfg, bank, channel_cfg, rng, constellation=None, on_check=None):
    """Minimize the (optionally regularized) detection loss over ``theta``.

    Each iteration draws ``cfg.batch_channels`` fresh Kronecker channels with
    one observation each, then applies one ADAM step. Every
    ``cfg.check_interval`` iterations the mean loss over the interval feeds
    the plateau scheduler and is appended to the history.
    """
    if cfg.beta > 0 and (bank is None or len(bank) == 0):
        raise ValueError("beta > 0 needs a non-empty bank")
    c = constellation or make_qam(4)
    theta = theta0.copy()
    state = AdamState.for_params(theta, lr=cfg.lr_init)
    sched = PlateauScheduler(
        lr=cfg.lr_init,
        check_interval=cfg.check_interval,
        factor=cfg.lr_factor,
        floor=min(cfg.lr_floor, cfg.lr_init),
        patience=cfg.patience,
        threshold=cfg.threshold,
    )
    result = TrainResult(theta=theta)
    acc = np.zeros(3)
    count = 0
    for it in range(1, cfg.iterations + 1):
        batch = draw_batch(channel_cfg, c, cfg.batch_channels, (cfg.snr_low_db, cfg.snr_high_db), rng)
        tape = ad.Tape()
        tv = {k: tape.variable(v) for k, v in theta.items()}
        total, la, lb = objective(tv, batch, bank, cfg, c)
        vals = np.array([ad.value_of(total), ad.value_of(la), ad.value_of(lb)], dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise DivergenceError(f"non-finite training loss at iteration {it}")
        grads = tape.gradient(total, list(tv.values()))
        state.lr = sched.lr
        theta, state = adam_step(theta, dict(zip(tv, grads)), state)
        acc += vals
        count += 1
        if it % cfg.check_interval == 0 or it == cfg.iterations:
            mean = acc / count
            sched.update(float(mean[0]))
            rec = CheckRecord(it, float(mean[0]), float(mean[1]), float(mean[2]), sched.lr)
            result.history.append(rec)
            log.info("iter %d loss %.5f (a %.5f b %.5f) lr %.3g", it, *mean, sched.lr)
            if on_check is not None:
                on_check(rec)
            acc[:] = 0.0
            count = 0
    result.theta = theta
    return result


def bank_distance(theta, bank, out_gain=1.0, out_bias=0.0):
    """Per-entry l1 distance between bank detectors and generated ones."""
    H = np.stack([e.channel for e in bank.entries])
    s2 = np.array([e.sigma2_ref for e in bank.entries])
    target = np.stack([e.flat_params for e in bank.entries])
    return np.abs(target - hypernet_forward(theta, H, s2, out_gain, out_bias)).sum(axis=-1)


def generated_params(theta, H, sigma2, out_gain=1.0, out_bias=0.0):
    """Structured detector parameters for a single channel."""
    H = np.asarray(H)
    shape = detector_shape(theta, H.shape[-2], H.shape[-1])
    return MMNetParams.from_flat(hypernet_forward(theta, H, sigma2, out_gain, out_bias), shape)
