"""Zero-forcing, MMSE and exhaustive ML detection on shared trials.

All three detectors see the same channels, symbols and noise, so their error
counts can be compared directly. ML should come out on top, MMSE next.
"""

import numpy as np

from hypermimo.channel import KroneckerConfig, sample_kronecker, sigma2_for_snr, transmit
from hypermimo.detectors import DetectionProblem, detect_ml, detect_mmse, detect_zf
from hypermimo.evaluation import binomial_ci95
from hypermimo.modem import make_qam, sample_symbols
from hypermimo.rng import make_rng

c = make_qam(4)
cfg = KroneckerConfig()
n = 20_000

print("snr_db   ZF        MMSE      ML")
for snr in (0, 2, 4, 6, 8, 10):
    rng = make_rng(1, snr)
    H = sample_kronecker(cfg, rng, size=n)
    x = sample_symbols(c, cfg.n_tx, rng, size=n)
    s2 = float(sigma2_for_snr(snr, cfg.n_tx, cfg.n_rx))
    p = DetectionProblem(transmit(H, c.values(x), s2, rng), H, s2, c)
    cells = []
    for detect in (detect_zf, detect_mmse, detect_ml):
        errors = int(np.count_nonzero(detect(p) != x))
        cells.append(f"{errors / x.size:.4f}+-{binomial_ci95(errors, x.size):.4f}")
    print(f"{snr:6d}  " + "  ".join(cells))
