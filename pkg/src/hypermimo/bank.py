"""The bank of pretrained channel-specific detectors, and on-disk archives.

Archive layout (a directory)::

    manifest.json      human-readable: format tag, version, metadata,
                       per-entry file names, sizes and SHA-256 checksums
    entry_00000.bin    one blob per entry, little-endian float64

A bank blob holds the channel (real parts row-major, then imaginary parts
row-major) followed by the flat detector parameters. A channel archive
(``format = hypermimo-channels``) holds one blob per sequence with the
matrices ``H_0..H_T`` back to back in the same channel layout.
"""

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng as streams
from .channel import JakesConfig, jakes_sequence, sigma2_for_snr
from .errors import BankFormatError, ChecksumError, DivergenceError, MissingArtifactError, VersionError
from .mmnet import DEFAULT_LAYERS, MMNetParams, MMNetShape, PretrainConfig, pretrain_mmnet
from .modem import make_qam
from .optim import ParamStore

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
BANK_FORMAT = "hypermimo-bank"
CHANNELS_FORMAT = "hypermimo-channels"
PARAMS_FORMAT = "hypermimo-params"
MANIFEST = "manifest.json"
SHARED_SEQUENCE = -1  # provenance of the initial channel shared by all sequences
_DTYPE = np.dtype("<f8")


@dataclass(eq=False)
class BankEntry:
    channel: np.ndarray
    sigma2_ref: float
    params: MMNetParams
    sequence: int
    hop: int

    @property
    def flat_params(self):
        return self.params.flatten()


@dataclass(eq=False)
class ModelBank:
    entries: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def entry_for(self, sequence, hop):
        for e in self.entries:
            if e.sequence == sequence and e.hop == hop:
                return e
        raise KeyError((sequence, hop))

    @property
    def initial(self):
        """Entry for the shared initial channel."""
        return self.entry_for(SHARED_SEQUENCE, 0)

    def equals(self, other):
        if self.meta != other.meta or len(self) != len(other):
            return False
        for a, b in zip(self.entries, other.entries):
            if (a.sequence, a.hop) != (b.sequence, b.hop):
                return False
            if not (np.array_equal(a.channel, b.channel) and a.sigma2_ref == b.sigma2_ref):
                return False
            if not a.params.equals(b.params):
                return False
        return True


def bank_channels(H0, jakes, n_sequences, seed):
    """Distinct bank channels in entry order with their provenance.

    The shared ``H0`` comes first, then hops ``1..T`` of every sequence.
    """
    out = [(np.asarray(H0, dtype=np.complex128), SHARED_SEQUENCE, 0)]
    for s in range(n_sequences):
        seq = jakes_sequence(H0, jakes, streams.make_rng(seed, streams.BANK_SEQUENCE, s))
        out.extend((H, s, t) for t, H in enumerate(seq.steps, start=1))
    return out


def _pretrain_entry(args):
    k, H, pre, seed, order, n_layers = args
    rng = streams.make_rng(seed, streams.PRETRAIN, k)
    return pretrain_mmnet(H, pre, rng, constellation=make_qam(order), n_layers=n_layers)


def build_bank(H0, jakes, n_sequences, pre, seed, order=4, n_layers=DEFAULT_LAYERS, workers=1, rho_k=None):
    """Pretrain one detector per distinct channel of ``n_sequences`` trajectories.

    Returns a bank of ``n_sequences * jakes.horizon + 1`` entries. Every
    entry's reference noise level is the midpoint of the pretraining SNR range.
    """
    H0 = np.asarray(H0, dtype=np.complex128)
    chans = bank_channels(H0, jakes, n_sequences, seed)
    jobs = [(k, H, pre, seed, order, n_layers) for k, (H, _, _) in enumerate(chans)]
    sigma2_ref = float(sigma2_for_snr(pre.snr_mid_db, H0.shape[1], H0.shape[0]))

    def run():
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                yield from pool.map(_pretrain_entry, jobs)
        else:
            yield from map(_pretrain_entry, jobs)

    entries = []
    results = run()
    for k, (H, s, t) in enumerate(chans):
        try:
            params = next(results)
        except DivergenceError as exc:
            raise DivergenceError(f"pretraining diverged for sequence {s}, hop {t}: {exc}") from exc
        entries.append(BankEntry(channel=H, sigma2_ref=sigma2_ref, params=params, sequence=s, hop=t))
        log.debug("bank entry %d/%d done (sequence %d, hop %d)", k + 1, len(chans), s, t)
    meta = {
        "n_rx": int(H0.shape[0]),
        "n_tx": int(H0.shape[1]),
        "K": int(order),
        "L": int(n_layers),
        "rho": float(jakes.rho),
        "horizon": int(jakes.horizon),
        "n_sequences": int(n_sequences),
        "seed": int(seed),
    }
    if rho_k is not None:
        meta["rho_k"] = float(rho_k)
    return ModelBank(entries=entries, meta=meta)


# persistence -----------------------------------------------------------------


def _channel_floats(H):
    H = np.asarray(H, dtype=np.complex128)
    return np.concatenate([H.real.reshape(-1), H.imag.reshape(-1)])


def _channel_from_floats(v, n_rx, n_tx):
    n = n_rx * n_tx
    return (v[:n] + 1j * v[n : 2 * n]).reshape(n_rx, n_tx)


def _write_manifest(path, manifest):
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (Path(path) / MANIFEST).write_text(text, encoding="utf-8")


def _write_blob(path, name, values):
    data = np.ascontiguousarray(values, dtype=_DTYPE).tobytes()
    (Path(path) / name).write_bytes(data)
    return {"file": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()}


def _read_manifest(path, expected_format):
    mpath = Path(path) / MANIFEST
    if not mpath.is_file():
        raise MissingArtifactError(f"no manifest at {mpath}")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BankFormatError(f"{mpath}: malformed manifest ({exc})") from exc
    if manifest.get("format") != expected_format:
        raise BankFormatError(f"{mpath}: expected format {expected_format!r}, got {manifest.get('format')!r}")
    if manifest.get("version") != FORMAT_VERSION:
        raise VersionError(
            f"{mpath}: unsupported format version {manifest.get('version')!r} (supported: {FORMAT_VERSION})"
        )
    return manifest


def _read_blob(path, item, expected_floats):
    fpath = Path(path) / item["file"]
    if not fpath.is_file():
        raise BankFormatError(f"missing blob {fpath}")
    data = fpath.read_bytes()
    if len(data) != item["bytes"] or len(data) != expected_floats * _DTYPE.itemsize:
        raise BankFormatError(f"{fpath}: truncated or oversized ({len(data)} bytes)")
    if hashlib.sha256(data).hexdigest() != item["sha256"]:
        raise ChecksumError(f"{fpath}: checksum mismatch")
    return np.frombuffer(data, dtype=_DTYPE).astype(np.float64)


def save_bank(bank, path):
    """Write ``bank`` as a manifest plus one blob per entry."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    items = []
    for k, e in enumerate(bank.entries):
        item = _write_blob(path, f"entry_{k:05d}.bin", np.concatenate([_channel_floats(e.channel), e.flat_params]))
        item.update(sequence=int(e.sequence), hop=int(e.hop), sigma2_ref=float(e.sigma2_ref))
        items.append(item)
    _write_manifest(
        path,
        {
            "format": BANK_FORMAT,
            "version": FORMAT_VERSION,
            "layout": {
                "dtype": "float64 little-endian",
                "blob": "channel real parts (row-major), channel imaginary parts (row-major), detector parameters",
                "params": "layer-major; per layer A (2n_tx x 2n_rx, row-major) then theta2 (2n_tx)",
            },
            "meta": bank.meta,
            "entries": items,
        },
    )
    return path


def load_bank(path):
    manifest = _read_manifest(path, BANK_FORMAT)
    meta = manifest["meta"]
    n_rx, n_tx, L = meta["n_rx"], meta["n_tx"], meta["L"]
    shape = MMNetShape(n_rx=n_rx, n_tx=n_tx, n_layers=L)
    n_chan = 2 * n_rx * n_tx
    entries = []
    for item in manifest["entries"]:
        v = _read_blob(path, item, n_chan + shape.size)
        entries.append(
            BankEntry(
                channel=_channel_from_floats(v, n_rx, n_tx),
                sigma2_ref=float(item["sigma2_ref"]),
                params=MMNetParams.from_flat(v[n_chan:], shape),
                sequence=int(item["sequence"]),
                hop=int(item["hop"]),
            )
        )
    return ModelBank(entries=entries, meta=meta)


def describe_bank(path):
    """Short text summary of a bank manifest."""
    manifest = _read_manifest(path, BANK_FORMAT)
    meta = manifest["meta"]
    entries = manifest["entries"]
    seqs = sorted({e["sequence"] for e in entries if e["sequence"] != SHARED_SEQUENCE})
    lines = [f"bank: {Path(path)}", f"format: {manifest['format']} v{manifest['version']}", f"entries: {len(entries)}"]
    lines += [f"{k}: {meta[k]}" for k in sorted(meta)]
    lines.append(f"sequences: {len(seqs)}")
    if entries:
        lines.append(f"sigma2_ref: {entries[0]['sigma2_ref']!r}")
    return "\n".join(lines)


@dataclass(eq=False)
class ChannelArchive:
    """Channel trajectories, ``matrices`` of shape ``(S, T + 1, n_rx, n_tx)``."""

    matrices: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def initial(self):
        return self.matrices[0, 0]

    @property
    def horizon(self):
        return self.matrices.shape[1] - 1

    def __len__(self):
        return self.matrices.shape[0]


def save_channels(archive, path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    items = []
    for s, seq in enumerate(archive.matrices):
        item = _write_blob(path, f"sequence_{s:05d}.bin", np.concatenate([_channel_floats(H) for H in seq]))
        item.update(sequence=s, n_matrices=int(seq.shape[0]))
        items.append(item)
    S, T1, n_rx, n_tx = archive.matrices.shape
    meta = dict(archive.meta, n_rx=int(n_rx), n_tx=int(n_tx), horizon=int(T1 - 1), n_sequences=int(S))
    _write_manifest(
        path,
        {
            "format": CHANNELS_FORMAT,
            "version": FORMAT_VERSION,
            "layout": {
                "dtype": "float64 little-endian",
                "blob": "matrices H_0..H_T; each real parts (row-major) then imaginary parts (row-major)",
            },
            "meta": meta,
            "entries": items,
        },
    )
    return path


def load_channels(path):
    manifest = _read_manifest(path, CHANNELS_FORMAT)
    meta = manifest["meta"]
    n_rx, n_tx = meta["n_rx"], meta["n_tx"]
    n_chan = 2 * n_rx * n_tx
    seqs = []
    for item in manifest["entries"]:
        v = _read_blob(path, item, n_chan * item["n_matrices"])
        seqs.append(np.stack([_channel_from_floats(m, n_rx, n_tx) for m in v.reshape(-1, n_chan)]))
    return ChannelArchive(matrices=np.stack(seqs), meta=meta)


def save_params(params, path):
    """Persist a :class:`ParamStore` as ``params.json`` plus ``params.bin``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    item = _write_blob(path, "params.bin", params.flatten())
    item["arrays"] = [{"name": k, "shape": list(v.shape)} for k, v in params.items()]
    text = json.dumps({"format": PARAMS_FORMAT, "version": FORMAT_VERSION, **item}, indent=2, sort_keys=True)
    (path / "params.json").write_text(text + "\n", encoding="utf-8")
    return path


def load_params(path):
    path = Path(path)
    mpath = path / "params.json"
    if not mpath.is_file():
        raise MissingArtifactError(f"no parameter file at {mpath}")
    head = json.loads(mpath.read_text(encoding="utf-8"))
    if head.get("format") != PARAMS_FORMAT:
        raise BankFormatError(f"{mpath}: not a parameter file")
    if head.get("version") != FORMAT_VERSION:
        raise VersionError(f"{mpath}: unsupported format version {head.get('version')!r}")
    sizes = [int(np.prod(a["shape"])) for a in head["arrays"]]
    v = _read_blob(path, head, sum(sizes))
    arrays, pos = {}, 0
    for a, n in zip(head["arrays"], sizes):
        arrays[a["name"]] = v[pos : pos + n].reshape(a["shape"])
        pos += n
    return ParamStore(arrays)
