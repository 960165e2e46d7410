"""Parameter containers, ADAM, and the reduce-on-plateau schedule."""

import math
from dataclasses import dataclass, field, replace

import numpy as np


class ParamStore:
    """Named float64 arrays with a fixed, ordered layout.

    Instances are treated as immutable values: updates return new stores.
    """

    def __init__(self, arrays):
        self._arrays = {str(k): np.array(v, dtype=np.float64) for k, v in dict(arrays).items()}

    def __getitem__(self, name):
        return self._arrays[name]

    def __iter__(self):
        return iter(self._arrays)

    def __len__(self):
        return len(self._arrays)

    def __contains__(self, name):
        return name in self._arrays

    def keys(self):
        return self._arrays.keys()

    def items(self):
        return self._arrays.items()

    def shapes(self):
        return {k: v.shape for k, v in self._arrays.items()}

    @property
    def size(self):
        return sum(v.size for v in self._arrays.values())

    def flatten(self):
        return np.concatenate([v.reshape(-1) for v in self._arrays.values()])

    def unflatten(self, vec):
        """New store with this store's layout, filled from ``vec``."""
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.size:
            raise ValueError(f"expected {self.size} values, got {vec.size}")
        out, pos = {}, 0
        for k, v in self._arrays.items():
            out[k] = vec[pos : pos + v.size].reshape(v.shape)
            pos += v.size
        return ParamStore(out)

    def copy(self):
        return ParamStore(self._arrays)

    def equals(self, other):
        return list(self.keys()) == list(other.keys()) and all(
            np.array_equal(self[k], other[k]) for k in self
        )

    def __repr__(self):
        body = ", ".join(f"{k}{v.shape}" for k, v in self._arrays.items())
        return f"ParamStore({body})"


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params, **kwargs):
        zeros = {k: np.zeros_like(a) for k, a in params.items()}
        return cls(m=zeros, v={k: z.copy() for k, z in zeros.items()}, **kwargs)


def adam_step(params, grads, state):
    """One bias-corrected ADAM update. Returns ``(new_params, new_state)``."""
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_p, new_m, new_v = {}, {}, {}
    for k, p in params.items():
        g = np.asarray(grads[k], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient for {k!r} has shape {g.shape}, expected {p.shape}")
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * g * g
        new_p[k] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_m[k], new_v[k] = m, v
    return ParamStore(new_p), replace(state, step=t, m=new_m, v=new_v)


@dataclass
class PlateauScheduler:
    """Multiply the learning rate by ``factor`` when the monitored loss stalls.

    A check counts as an improvement when ``loss < best_loss * (1 - threshold)``.
    After ``patience`` consecutive non-improving checks the rate is reduced,
    never below ``floor``.
    """

    lr: float = 1e-3
    check_interval: int = 500
    factor: float = 0.9
    floor: float = 1e-6
    patience: int = 1
    threshold: float = 1e-4
    best_loss: float = math.inf
    num_bad: int = 0

    def __post_init__(self):
        if not (0.0 < self.factor < 1.0):
            raise ValueError(f"factor must lie in (0, 1), got {self.factor}")
        if self.floor > self.lr:
            raise ValueError("floor exceeds the initial learning rate")
        if self.patience < 1 or self.check_interval < 1:
            raise ValueError("patience and check_interval must be positive")

    def update(self, current_loss):
        if current_loss < self.best_loss * (1.0 - self.threshold):
            self.best_loss = current_loss
            self.num_bad = 0
        else:
            self.best_loss = min(self.best_loss, current_loss)
            self.num_bad += 1
            if self.num_bad >= self.patience:
                self.lr = max(self.lr * self.factor, self.floor)
                self.num_bad = 0
        return self.lr
