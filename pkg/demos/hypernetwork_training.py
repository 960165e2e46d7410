"""Train the hypernetwork with and without the bank regularizer.

A short run on a small bank: three trajectories of four hops give thirteen
pretrained detectors. HyperMIMO ignores the bank (beta = 0); HyperMIMO-LR adds
the l1 pull towards the bank weights (beta = 1). The printout shows the two
loss terms at every scheduler check and the final distance to the bank.
Takes a few minutes on one core.
"""

import numpy as np

from hypermimo.bank import build_bank
from hypermimo.channel import JakesConfig, KroneckerConfig, sample_kronecker
from hypermimo.hypernet import TrainConfig, bank_distance, init_hypernet, train
from hypermimo.mmnet import MMNetShape, PretrainConfig
from hypermimo.rng import make_rng

kcfg = KroneckerConfig()
H0 = sample_kronecker(kcfg, make_rng(0, 1))
bank = build_bank(H0, JakesConfig(horizon=4), 3, PretrainConfig(iterations=300), seed=0)
print(f"bank of {len(bank)} detectors")

theta0 = init_hypernet(MMNetShape(), make_rng(0, 6))
for beta in (0.0, 1.0):
    cfg = TrainConfig(beta=beta, iterations=1500, check_interval=250)
    res = train(theta0, cfg, bank if beta else None, kcfg, make_rng(0, 5),
                on_check=lambda r: print(f"  beta={beta:g} iter {r.iteration:5d}  loss_a {r.loss_a:.4f}  loss_b {r.loss_b:8.2f}  lr {r.lr:.2e}"))
    print(f"beta={beta:g}: mean l1 distance to bank {np.mean(bank_distance(res.theta, bank)):.2f}")
