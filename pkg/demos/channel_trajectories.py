"""Correlated MIMO channels and how they drift over time.

Draws Kronecker-correlated 4x2 channels, checks their spatial covariance
against the closed form, then follows a batch of them through a first-order
Gauss-Markov evolution and prints how quickly they decorrelate from the start.
"""

import numpy as np

from hypermimo.channel import JakesConfig, KroneckerConfig, exp_correlation_matrix, jakes_step, sample_kronecker
from hypermimo.rng import make_rng

cfg = KroneckerConfig(n_rx=4, n_tx=2, rho_k=0.6)
rng = make_rng(0)

H = sample_kronecker(cfg, rng, size=50_000)
v = H.transpose(0, 2, 1).reshape(len(H), -1)
C = v.T @ v.conj() / len(v)
target = np.kron(exp_correlation_matrix(2, 0.6).T, exp_correlation_matrix(4, 0.6))
print(f"covariance error (relative Frobenius): {np.linalg.norm(C - target) / np.linalg.norm(target):.4f}")

jakes = JakesConfig(rho=0.98, horizon=4)
Ht = H
print("hop  mean|h|^2  corr with H0  rho^t")
for t in range(1, 21):
    Ht = jakes_step(Ht, jakes.rho, rng)
    corr = np.mean(Ht * H.conj()).real
    if t <= 4 or t % 5 == 0:
        print(f"{t:3d}  {np.mean(np.abs(Ht) ** 2):9.4f}  {corr:12.4f}  {jakes.rho ** t:.4f}")
