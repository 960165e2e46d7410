"""Experiment configuration as sectioned key-value text (INI).

Defaults reproduce the published setup: 4x2 MIMO, 4-QAM, 6 detector
layers, rho_k = 0.6, rho = 0.98, trajectories of 4 hops, 140 bank
sequences, batches of 100 channels, 50k iterations, beta = 1 and 100
test sequences.
"""

import configparser
import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError
from .hypernet import TrainConfig
from .mmnet import PretrainConfig


@dataclass
class SystemConfig:
    n_rx: int = 4
    n_tx: int = 2
    order: int = 4
    n_layers: int = 6
    hidden_units: int = 100


@dataclass
class ChannelConfig:
    rho_k: float = 0.6
    rho: float = 0.98
    horizon: int = 4


@dataclass
class BankConfig:
    n_sequences: int = 140


@dataclass
class EvalConfig:
    n_test_sequences: int = 100
    snr_grid_db: tuple = (5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
    trials_per_channel: int = 100


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "runs/default"
    workers: int = 1


@dataclass
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    bank: BankConfig = field(default_factory=BankConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    run: RunConfig = field(default_factory=RunConfig)


SECTIONS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def _format(value):
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw, default, where):
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(v) for v in raw.split(",") if v.strip())
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from exc


def emit(cfg):
    """Render a configuration as INI text."""
    parser = configparser.ConfigParser()
    for name in SECTIONS:
        section = getattr(cfg, name)
        parser[name] = {f.name: _format(getattr(section, f.name)) for f in dataclasses.fields(section)}
    lines = []
    for name in SECTIONS:
        lines.append(f"[{name}]")
        lines += [f"{k} = {v}" for k, v in parser[name].items()]
        lines.append("")
    return "\n".join(lines)


def parse(text):
    """Parse INI text; missing keys keep their defaults, unknown keys are errors."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    cfg = ExperimentConfig()
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        section = getattr(cfg, name)
        known = {f.name: getattr(section, f.name) for f in dataclasses.fields(section)}
        updates = {}
        for key, raw in parser[name].items():
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            updates[key] = _parse(raw, known[key], f"[{name}] {key}")
        try:
            setattr(cfg, name, dataclasses.replace(section, **updates))
        except ValueError as exc:
            raise ConfigError(f"[{name}]: {exc}") from exc
    return cfg


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
