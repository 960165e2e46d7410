"""Hypernetwork-generated unrolled MIMO detectors with learned regularizers.

Submodules
----------
linalg       real-composite transforms, PSD square roots, regularized solves
channel      Kronecker and Gauss-Markov fading, noise at a given SNR
modem        QAM constellations, slicing, SER
detectors    ZF, MMSE and exhaustive ML baselines
autodiff     reverse-mode differentiation on numpy arrays
optim        parameter stores, ADAM, plateau schedule
mmnet        the channel-specific unrolled detector and its pretraining
hypernet     the hypernetwork, both loss terms and the training loop
bank         bank of pretrained detectors and on-disk archives
evaluation   paired Monte Carlo SER studies
config, cli  experiment configuration and command-line driver
"""

from .channel import (
    ChannelSequence,
    JakesConfig,
    KroneckerConfig,
    NoiseModel,
    exp_correlation_matrix,
    jakes_sequence,
    jakes_step,
    sample_kronecker,
    sigma2_for_snr,
    transmit,
)
from .modem import Constellation, hard_decision, make_qam, sample_symbols, ser

__version__ = "0.1.0"
