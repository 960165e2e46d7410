"""Build a tiny detector bank, write it to disk, and read it back.

The archive is a directory with a JSON manifest and one little-endian
float64 blob per entry. Reloading gives bit-identical parameters, and a
flipped byte is caught by the checksum.
"""

import tempfile
from pathlib import Path

from hypermimo.bank import build_bank, describe_bank, load_bank, save_bank
from hypermimo.channel import JakesConfig, KroneckerConfig, sample_kronecker
from hypermimo.errors import ChecksumError
from hypermimo.mmnet import PretrainConfig
from hypermimo.rng import make_rng

H0 = sample_kronecker(KroneckerConfig(), make_rng(0, 1))
bank = build_bank(H0, JakesConfig(horizon=2), 2, PretrainConfig(iterations=20), seed=0)

with tempfile.TemporaryDirectory() as tmp:
    path = save_bank(bank, Path(tmp) / "bank")
    print(describe_bank(path))
    print("round trip identical:", load_bank(path).equals(bank))

    blob = path / "entry_00001.bin"
    data = bytearray(blob.read_bytes())
    data[0] ^= 0xFF
    blob.write_bytes(bytes(data))
    try:
        load_bank(path)
    except ChecksumError as exc:
        print("tampering detected:", exc)
