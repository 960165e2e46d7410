"""Fit the unrolled detector to a single channel and watch it age.

The detector is pretrained on H0 only. It is then applied, unchanged, to the
later matrices of a Gauss-Markov trajectory that starts at H0. Its error rate
grows with the hop index while MMSE, which always uses the current channel,
stays flat.
"""

import numpy as np

from hypermimo.channel import JakesConfig, KroneckerConfig, jakes_sequence, sample_kronecker, sigma2_for_snr, transmit
from hypermimo.detectors import DetectionProblem, detect_mmse
from hypermimo.mmnet import PretrainConfig, mmnet_detect, pretrain_mmnet
from hypermimo.modem import make_qam, sample_symbols
from hypermimo.rng import make_rng

c = make_qam(4)
H0 = sample_kronecker(KroneckerConfig(), make_rng(0, 1))

history = []
params = pretrain_mmnet(H0, PretrainConfig(iterations=1000), make_rng(0, 3), history=history)
print(f"pretraining loss {np.mean(history[:50]):.4f} -> {np.mean(history[-50:]):.4f}")

snr = 5.0
s2 = float(sigma2_for_snr(snr, 2, 4))
seqs = [jakes_sequence(H0, JakesConfig(horizon=4), make_rng(0, 4, s)).matrices for s in range(50)]
print(f"hop  SER(MMNet on H0)  SER(MMSE)   at {snr:g} dB")
for t in range(5):
    errs = np.zeros(2, dtype=int)
    total = 0
    for s, m in enumerate(seqs):
        rng = make_rng(0, 7, s, t)
        x = sample_symbols(c, 2, rng, size=400)
        y = transmit(m[t], c.values(x), s2, rng)
        errs[0] += np.count_nonzero(mmnet_detect(params, y, m[t], c) != x)
        errs[1] += np.count_nonzero(detect_mmse(DetectionProblem(y, m[t], s2, c)) != x)
        total += x.size
    print(f"{t:3d}  {errs[0] / total:16.4f}  {errs[1] / total:9.4f}")
