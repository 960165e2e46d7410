"""Paired Monte Carlo SER studies over archived channel trajectories.

For every (sequence, hop, SNR) cell the transmitted symbols and noise are
drawn from a stream keyed on ``(seed, sequence, hop, SNR)``, so every
detector, and both studies, see exactly the same trials.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as streams
from .channel import sigma2_for_snr, transmit
from .detectors import DetectionProblem, detect_ml, detect_mmse, detect_zf
from .hypernet import hypermimo_detect
from .mmnet import mmnet_detect
from .modem import sample_symbols

log = logging.getLogger(__name__)

Z95 = 1.959963984540054
MIN_RELIABLE_ERRORS = 10


def binomial_ci95(errors, n):
    """Normal-approximation 95% half-width for an error proportion."""
    if n == 0:
        return 0.0
    p = errors / n
    return Z95 * math.sqrt(p * (1.0 - p) / n)


@dataclass
class SerRow:
    detector: str
    trials: int
    errors: int
    n_tx: int
    snr_db: float
    hop: object = None

    @property
    def symbols(self):
        return self.trials * self.n_tx

    @property
    def ser(self):
        return self.errors / self.symbols if self.symbols else 0.0

    @property
    def ci95(self):
        return binomial_ci95(self.errors, self.symbols)

    @property
    def reliable(self):
        """False when too few errors for the normal approximation."""
        return self.errors >= MIN_RELIABLE_ERRORS


@dataclass
class SerReport:
    kind: str  # "snr" or "hop"
    rows: list = field(default_factory=list)

    def row(self, detector, key):
        attr = "snr_db" if self.kind == "snr" else "hop"
        for r in self.rows:
            if r.detector == detector and getattr(r, attr) == key:
                return r
        raise KeyError((detector, key))

    def detectors(self):
        return list(dict.fromkeys(r.detector for r in self.rows))

    def to_csv(self):
        if self.kind == "snr":
            lines = ["detector,snr_db,trials,errors,ser,ci95"]
            lines += [f"{r.detector},{r.snr_db!r},{r.trials},{r.errors},{r.ser!r},{r.ci95!r}" for r in self.rows]
        else:
            lines = ["detector,hop,snr_db,trials,errors,ser,ci95"]
            lines += [
                f"{r.detector},{r.hop},{r.snr_db!r},{r.trials},{r.errors},{r.ser!r},{r.ci95!r}" for r in self.rows
            ]
        return "\n".join(lines) + "\n"


def classical_detectors():
    return {
        "ZF": lambda p: detect_zf(p),
        "MMSE": lambda p: detect_mmse(p),
        "ML": lambda p: detect_ml(p),
    }


def mmnet_detector(params):
    """Fixed pretrained detector applied to whatever channel is observed."""
    return lambda p: mmnet_detect(params, p.y, p.H, p.constellation)


def hypernet_detector(theta, out_gain=1.0, out_bias=0.0):
    return lambda p: hypermimo_detect(theta, p, out_gain, out_bias)


def cell_trials(H, s, t, snr_db, trials, constellation, seed):
    """Symbols and observations for one (sequence, hop, SNR) cell."""
    rng = streams.make_rng(seed, streams.EVALUATION, s, t, streams.snr_key(snr_db))
    n_rx, n_tx = H.shape
    x = sample_symbols(constellation, n_tx, rng, size=trials)
    sigma2 = float(sigma2_for_snr(snr_db, n_tx, n_rx))
    return x, transmit(H, constellation.values(x), sigma2, rng), sigma2


def hop_errors(matrices, hop, snr_db, detectors, trials, constellation, seed):
    """Error counts per detector at one hop, pooled over all sequences."""
    xs, ys, Hs = [], [], []
    sigma2 = None
    for s in range(matrices.shape[0]):
        H = matrices[s, hop]
        x, y, sigma2 = cell_trials(H, s, hop, snr_db, trials, constellation, seed)
        xs.append(x)
        ys.append(y)
        Hs.append(np.broadcast_to(H, (trials,) + H.shape))
    x = np.concatenate(xs)
    problem = DetectionProblem(y=np.concatenate(ys), H=np.concatenate(Hs), sigma2=sigma2, constellation=constellation)
    return {name: int(np.count_nonzero(det(problem) != x)) for name, det in detectors.items()}, x.shape[0]


def ser_vs_hop(archive, snr_db, detectors, trials_per_channel, constellation, seed):
    """SER per hop ``t = 0..T``, pooled over every sequence of the archive."""
    m = archive.matrices
    report = SerReport(kind="hop")
    for t in range(m.shape[1]):
        errs, n = hop_errors(m, t, snr_db, detectors, trials_per_channel, constellation, seed)
        for name in detectors:
            report.rows.append(SerRow(name, n, errs[name], m.shape[-1], float(snr_db), hop=t))
        log.info("hop %d done at %.1f dB", t, snr_db)
    return report


def ser_vs_snr(archive, snr_grid_db, detectors, trials_per_channel, constellation, seed):
    """SER per SNR, pooled over every sequence and every hop."""
    m = archive.matrices
    report = SerReport(kind="snr")
    for snr in snr_grid_db:
        total = dict.fromkeys(detectors, 0)
        trials = 0
        for t in range(m.shape[1]):
            errs, n = hop_errors(m, t, snr, detectors, trials_per_channel, constellation, seed)
            trials += n
            for name in detectors:
                total[name] += errs[name]
        for name in detectors:
            report.rows.append(SerRow(name, trials, total[name], m.shape[-1], float(snr)))
        log.info("SNR %.1f dB done", snr)
    return report
