"""Reverse-mode gradients of the detector loss against finite differences."""

import numpy as np

from hypermimo import autodiff as ad
from hypermimo.channel import KroneckerConfig
from hypermimo.hypernet import draw_batch, init_hypernet, loss_a
from hypermimo.mmnet import MMNetShape
from hypermimo.modem import make_qam
from hypermimo.rng import make_rng

c = make_qam(4)
theta = init_hypernet(MMNetShape(), make_rng(0))
batch = draw_batch(KroneckerConfig(), c, 16, (5, 10), make_rng(1))

tape = ad.Tape()
tv = {k: tape.variable(v) for k, v in theta.items()}
grads = dict(zip(tv, tape.gradient(loss_a(tv, batch, c), list(tv.values()))))

rng = make_rng(2)
h = 1e-5
for name in theta:
    u = rng.standard_normal(theta[name].shape)
    d = {k: (u / np.linalg.norm(u) if k == name else np.zeros_like(v)) for k, v in theta.items()}
    plus = {k: theta[k] + h * d[k] for k in theta}
    minus = {k: theta[k] - h * d[k] for k in theta}
    numeric = (float(loss_a(plus, batch, c)) - float(loss_a(minus, batch, c))) / (2 * h)
    analytic = float(np.sum(grads[name] * d[name]))
    print(f"{name:3s}  analytic {analytic:+.8e}  numeric {numeric:+.8e}  rel {abs(analytic - numeric) / abs(numeric):.1e}")
