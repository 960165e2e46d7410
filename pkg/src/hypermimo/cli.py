"""Command-line driver for the experiment pipeline.

Stages write into ``--out`` and read what earlier stages left there::

    gen-channels  ->  channels/
    build-bank    ->  bank/              (needs channels/)
    pretrain-one  ->  pretrain_s<S>_t<T>/
    train         ->  hypermimo/ or hypermimo_lr/   (needs bank/ when beta > 0)
    ser-vs-snr    ->  ser_vs_snr.csv     (needs everything above)
    ser-vs-hop    ->  ser_vs_hop_<snr>dB.csv

Exit codes: 0 success, 2 configuration error, 3 missing artifact,
4 numerical divergence.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import rng as streams
from .bank import (
    ChannelArchive,
    ModelBank,
    build_bank,
    describe_bank,
    load_bank,
    load_channels,
    load_params,
    save_bank,
    save_channels,
    save_params,
    BankEntry,
)
from .channel import JakesConfig, KroneckerConfig, jakes_sequence, sample_kronecker, sigma2_for_snr
from .errors import BankFormatError, ConfigError, DivergenceError, MissingArtifactError
from .evaluation import classical_detectors, hypernet_detector, mmnet_detector, ser_vs_hop, ser_vs_snr
from .hypernet import init_hypernet, train
from .mmnet import MMNetShape, pretrain_mmnet
from .modem import make_qam

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_DIVERGED = 4

log = logging.getLogger("hypermimo")


def _resolve_config(args):
    path = getattr(args, "config", None)
    cfg = config_mod.load(path) if path else config_mod.ExperimentConfig()
    run = cfg.run
    for key in ("seed", "out", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            run = dataclasses.replace(run, **{key: value})
    cfg.run = run
    return cfg


def _out(cfg, *parts):
    return Path(cfg.run.out).joinpath(*parts)


def _need(path, stage):
    if not Path(path).exists():
        raise MissingArtifactError(f"{path} not found; run `{stage}` first")
    return path


def generate_test_channels(cfg):
    sysc, ch = cfg.system, cfg.channel
    kcfg = KroneckerConfig(n_rx=sysc.n_rx, n_tx=sysc.n_tx, rho_k=ch.rho_k)
    H0 = sample_kronecker(kcfg, streams.make_rng(cfg.run.seed, streams.H0))
    jcfg = JakesConfig(rho=ch.rho, horizon=ch.horizon)
    seqs = [
        jakes_sequence(H0, jcfg, streams.make_rng(cfg.run.seed, streams.TEST_SEQUENCE, s)).matrices
        for s in range(cfg.evaluation.n_test_sequences)
    ]
    meta = {"rho": ch.rho, "rho_k": ch.rho_k, "seed": cfg.run.seed}
    return ChannelArchive(matrices=np.stack(seqs), meta=meta)


def cmd_gen_channels(cfg, args):
    archive = generate_test_channels(cfg)
    path = save_channels(archive, _out(cfg, "channels"))
    print(f"wrote {len(archive)} sequences of {archive.horizon + 1} matrices to {path}")


def _pretrain_cfg(cfg, args):
    pre = cfg.pretrain
    if getattr(args, "iterations", None) is not None:
        pre = dataclasses.replace(pre, iterations=args.iterations)
    return pre


def cmd_build_bank(cfg, args):
    archive = load_channels(_need(_out(cfg, "channels"), "gen-channels"))
    n_seq = args.sequences if args.sequences is not None else cfg.bank.n_sequences
    horizon = args.horizon if args.horizon is not None else cfg.channel.horizon
    jcfg = JakesConfig(rho=cfg.channel.rho, horizon=horizon)
    bank = build_bank(
        archive.initial,
        jcfg,
        n_seq,
        _pretrain_cfg(cfg, args),
        cfg.run.seed,
        order=cfg.system.order,
        n_layers=cfg.system.n_layers,
        workers=cfg.run.workers,
        rho_k=cfg.channel.rho_k,
    )
    path = save_bank(bank, _out(cfg, "bank"))
    print(f"wrote bank of {len(bank)} detectors to {path}")


def cmd_pretrain_one(cfg, args):
    archive = load_channels(_need(_out(cfg, "channels"), "gen-channels"))
    H = archive.matrices[args.sequence, args.hop]
    pre = _pretrain_cfg(cfg, args)
    history = []
    rng = streams.make_rng(cfg.run.seed, streams.PRETRAIN, 1_000_000 + args.sequence, args.hop)
    params = pretrain_mmnet(
        H, pre, rng, constellation=make_qam(cfg.system.order), n_layers=cfg.system.n_layers, history=history
    )
    s2 = float(sigma2_for_snr(pre.snr_mid_db, cfg.system.n_tx, cfg.system.n_rx))
    entry = BankEntry(channel=H, sigma2_ref=s2, params=params, sequence=args.sequence, hop=args.hop)
    meta = {"n_rx": cfg.system.n_rx, "n_tx": cfg.system.n_tx, "K": cfg.system.order, "L": cfg.system.n_layers,
            "seed": cfg.run.seed}
    path = save_bank(ModelBank(entries=[entry], meta=meta), _out(cfg, f"pretrain_s{args.sequence}_t{args.hop}"))
    if history:
        print(f"loss {history[0]:.5f} -> {history[-1]:.5f}")
    print(f"wrote detector to {path}")


def _model_name(beta):
    return "hypermimo" if beta == 0 else "hypermimo_lr"


def cmd_train(cfg, args):
    tcfg = cfg.training
    if args.beta is not None:
        tcfg = dataclasses.replace(tcfg, beta=args.beta)
    if args.iterations is not None:
        tcfg = dataclasses.replace(tcfg, iterations=args.iterations)
    bank = load_bank(_need(_out(cfg, "bank"), "build-bank")) if tcfg.beta > 0 else None
    sysc = cfg.system
    mshape = MMNetShape(n_rx=sysc.n_rx, n_tx=sysc.n_tx, n_layers=sysc.n_layers)
    theta0 = init_hypernet(mshape, streams.make_rng(cfg.run.seed, streams.HYPERNET_INIT), hidden=sysc.hidden_units)
    kcfg = KroneckerConfig(n_rx=sysc.n_rx, n_tx=sysc.n_tx, rho_k=cfg.channel.rho_k)

    def progress(rec):
        print(f"iter {rec.iteration:>6d}  loss {rec.loss_total:.6f}  a {rec.loss_a:.6f}  b {rec.loss_b:.6f}  lr {rec.lr:.3g}")

    result = train(
        theta0,
        tcfg,
        bank,
        kcfg,
        streams.make_rng(cfg.run.seed, streams.TRAIN),
        constellation=make_qam(sysc.order),
        on_check=progress,
    )
    name = args.name or _model_name(tcfg.beta)
    path = save_params(result.theta, _out(cfg, name))
    (path / "train_log.csv").write_text(result.log_csv(), encoding="utf-8")
    (path / "train.ini").write_text(config_mod.emit(dataclasses.replace(cfg, training=tcfg)), encoding="utf-8")
    print(f"wrote model to {path}")


def _load_trained(path):
    """Parameters plus the output scaling they were trained with."""
    theta = load_params(path)
    ini = Path(path) / "train.ini"
    tcfg = config_mod.load(ini).training if ini.exists() else config_mod.ExperimentConfig().training
    return theta, tcfg


def _detectors(cfg):
    bank = load_bank(_need(_out(cfg, "bank"), "build-bank"))
    dets = classical_detectors()
    dets["MMNet"] = mmnet_detector(bank.initial.params)
    for label, name in (("HyperMIMO", "hypermimo"), ("HyperMIMO-LR", "hypermimo_lr")):
        theta, tcfg = _load_trained(_need(_out(cfg, name), f"train --beta {0 if name == 'hypermimo' else 1}"))
        dets[label] = hypernet_detector(theta, tcfg.out_gain, tcfg.out_bias)
    return dets


def cmd_ser_vs_snr(cfg, args):
    archive = load_channels(_need(_out(cfg, "channels"), "gen-channels"))
    report = ser_vs_snr(
        archive,
        cfg.evaluation.snr_grid_db,
        _detectors(cfg),
        cfg.evaluation.trials_per_channel,
        make_qam(cfg.system.order),
        cfg.run.seed,
    )
    path = _out(cfg, "ser_vs_snr.csv")
    path.write_text(report.to_csv(), encoding="utf-8")
    print(report.to_csv(), end="")


def cmd_ser_vs_hop(cfg, args):
    archive = load_channels(_need(_out(cfg, "channels"), "gen-channels"))
    report = ser_vs_hop(
        archive,
        args.snr,
        _detectors(cfg),
        cfg.evaluation.trials_per_channel,
        make_qam(cfg.system.order),
        cfg.run.seed,
    )
    path = _out(cfg, f"ser_vs_hop_{args.snr:g}dB.csv")
    path.write_text(report.to_csv(), encoding="utf-8")
    print(report.to_csv(), end="")


def cmd_bank_inspect(cfg, args):
    path = args.path or _out(cfg, "bank")
    print(describe_bank(_need(path, "build-bank")))


def build_parser():
    # SUPPRESS keeps subcommand parsers from overwriting values given before the subcommand
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="INI experiment configuration")
    common.add_argument("--seed", type=int, help="experiment seed (overrides the config)")
    common.add_argument("--out", metavar="DIR", help="artifact directory (overrides the config)")
    common.add_argument("--workers", type=int, help="parallel workers for bank building")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hypermimo", description=__doc__.split("\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-channels", parents=[common], help="archive H0 and the test trajectories")
    p.set_defaults(func=cmd_gen_channels)

    p = sub.add_parser("build-bank", parents=[common], help="pretrain the detector bank")
    p.add_argument("--sequences", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--iterations", type=int, help="pretraining iterations per detector")
    p.set_defaults(func=cmd_build_bank)

    p = sub.add_parser("pretrain-one", parents=[common], help="pretrain a detector for one archived channel")
    p.add_argument("--sequence", type=int, default=0)
    p.add_argument("--hop", type=int, default=0)
    p.add_argument("--iterations", type=int)
    p.set_defaults(func=cmd_pretrain_one)

    p = sub.add_parser("train", parents=[common], help="train the hypernetwork")
    p.add_argument("--beta", type=float, help="regularization weight; 0 gives the unregularized model")
    p.add_argument("--iterations", type=int)
    p.add_argument("--name", help="output subdirectory (default depends on beta)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ser-vs-snr", parents=[common], help="SER against SNR, pooled over hops")
    p.set_defaults(func=cmd_ser_vs_snr)

    p = sub.add_parser("ser-vs-hop", parents=[common], help="SER against hop at one SNR")
    p.add_argument("--snr", type=float, default=10.0)
    p.set_defaults(func=cmd_ser_vs_hop)

    p = sub.add_parser("bank", help="bank utilities")
    bsub = p.add_subparsers(dest="bank_command", required=True)
    q = bsub.add_parser("inspect", parents=[common], help="print a bank manifest summary")
    q.add_argument("path", nargs="?")
    q.set_defaults(func=cmd_bank_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    verbose = getattr(args, "verbose", False)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
        args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifactError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except BankFormatError as exc:
        print(f"bad archive: {exc}", file=sys.stderr)
        return EXIT_MISSING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
