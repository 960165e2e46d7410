"""Acceptance suite: one test per acceptance criterion.

Each test records a single ``ACCEPTANCE <n> PASS|FAIL`` line before
asserting; the lines are printed in the "acceptance criteria" section of the
terminal summary. ``python tests/test_acceptance.py`` runs just this file.
"""

import csv
import io
import math
import sys
import time

import numpy as np
import pytest

from hypermimo import autodiff as ad
from hypermimo.bank import BankEntry, ModelBank, build_bank, load_bank, save_bank
from hypermimo.channel import (
    JakesConfig,
    KroneckerConfig,
    exp_correlation_matrix,
    jakes_step,
    sample_kronecker,
    sigma2_for_snr,
    transmit,
)
from hypermimo.cli import main
from hypermimo.detectors import DetectionProblem, detect_ml, detect_mmse, detect_zf
from hypermimo.evaluation import binomial_ci95
from hypermimo.hypernet import (
    TrainConfig,
    draw_batch,
    hypernet_forward,
    init_hypernet,
    loss_a,
    loss_b,
    objective,
    train,
)
from hypermimo.linalg import to_real_composite, to_real_vector
from hypermimo.mmnet import MMNetParams, MMNetShape, PretrainConfig, mmnet_forward, pretrain_mmnet
from hypermimo.modem import make_qam, sample_symbols
from hypermimo.optim import ParamStore, PlateauScheduler
from hypermimo.rng import make_rng

from gradcheck import fd_directional5, rel_err

RESULTS = {}


def report(number, title, ok, detail=""):
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    RESULTS[number] = line
    print(line)
    return ok


# 1. gradients ------------------------------------------------------------------

N_INSTANCES = 50
TOY = MMNetShape(n_rx=2, n_tx=1, n_layers=2)
TOY_K = KroneckerConfig(n_rx=2, n_tx=1, rho_k=0.4)


def _toy_bank(rng_seed, hidden, n_entries=2):
    th = init_hypernet(TOY, make_rng(rng_seed, 1), hidden=hidden)
    H = sample_kronecker(TOY_K, make_rng(rng_seed, 2), size=n_entries)
    entries = []
    for k in range(n_entries):
        s2 = 0.05 + 0.1 * k
        w = hypernet_forward(th, H[k], s2) + make_rng(rng_seed, 3, k).normal(0, 0.3, TOY.size)
        entries.append(BankEntry(H[k], s2, MMNetParams.from_flat(w, TOY), sequence=k, hop=1))
    return ModelBank(entries=entries, meta={})


def _directional_check(fn, theta, seed):
    """Relative error between the tape gradient and a central difference of ``fn``."""
    tape = ad.Tape()
    tv = {k: tape.variable(v) for k, v in theta.items()}
    grads = tape.gradient(fn(tv), list(tv.values()))
    r = make_rng(seed, 77)
    d = {k: r.standard_normal(np.shape(v)) for k, v in theta.items()}
    analytic = sum(float(np.sum(g * d[k])) for k, g in zip(tv, grads))
    numeric = fd_directional5(lambda t: float(fn(t)), dict(theta.items()), d)
    return rel_err(analytic, numeric)


def test_1_gradient_suite():
    c = make_qam(4)
    t0 = time.perf_counter()
    worst = {}
    for seed in range(N_INSTANCES):
        th = init_hypernet(TOY, make_rng(seed), hidden=5)
        b = draw_batch(TOY_K, c, 4, (5, 10), make_rng(seed, 9))
        bank = _toy_bank(seed, hidden=5)
        cfg = TrainConfig(beta=0.7)
        H1 = sample_kronecker(TOY_K, make_rng(seed, 4), size=2)
        s2 = np.array([0.07, 0.2])
        coord = seed % TOY.size

        probe = make_rng(seed, 6).standard_normal((len(b), 2 * TOY.n_tx))

        def mm_loss(p):
            out = mmnet_forward(p["w"], to_real_vector(b.y), to_real_composite(b.H), c.real_levels, TOY)
            return ad.sum_(ad.mul(out, probe))

        w0 = {"w": make_rng(seed, 5).normal(0, 0.3, TOY.size)}
        errs = {
            "loss_a": _directional_check(lambda t: loss_a(t, b, c), th, seed),
            "loss_b": _directional_check(lambda t: loss_b(t, bank, 1.0), th, seed),
            "objective": _directional_check(lambda t: objective(t, b, bank, cfg, c)[0], th, seed),
            "mmnet_forward": _directional_check(mm_loss, w0, seed),
            "hypernet_forward": _directional_check(
                lambda t: ad.sum_(hypernet_forward(t, H1, s2)[:, coord]), th, seed
            ),
        }
        for k, e in errs.items():
            worst[k] = max(worst.get(k, 0.0), e)
    elapsed = time.perf_counter() - t0
    ok = all(e < 1e-5 for e in worst.values()) and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f}s"
    assert report(1, "reverse-mode gradients vs central differences (50 instances each)", ok, detail)


# 2. channel statistics ---------------------------------------------------------


def test_2_channel_statistics():
    t0 = time.perf_counter()
    cfg = KroneckerConfig()
    H = sample_kronecker(cfg, make_rng(2024, 1), size=100_000)
    v = H.transpose(0, 2, 1).reshape(len(H), -1)  # column-stacked vec(H)
    C = v.T @ v.conj() / len(v)
    oracle = np.kron(exp_correlation_matrix(2, 0.6).T, exp_correlation_matrix(4, 0.6))
    cov_err = float(np.linalg.norm(C - oracle) / np.linalg.norm(oracle))

    rho, n = 0.98, 100_000
    rng = make_rng(2024, 2)
    H0 = sample_kronecker(cfg, rng, size=n)
    Ht = H0
    var_dev, acf_dev = 0.0, 0.0
    for t in range(1, 51):
        Ht = jakes_step(Ht, rho, rng)
        var = np.mean(np.abs(Ht) ** 2, axis=0)
        var_dev = max(var_dev, float(np.max(np.abs(var - 1.0))))
        prod = Ht * H0.conj()
        acf = np.mean(prod, axis=0).real
        se = np.std(prod.real, axis=0) / math.sqrt(n)
        acf_dev = max(acf_dev, float(np.max(np.abs(acf - rho**t) / se)))
    elapsed = time.perf_counter() - t0
    ok = cov_err < 0.05 and var_dev < 0.03 and acf_dev < 4.5 and elapsed < 120
    detail = f"cov rel {cov_err:.4f}, var dev {var_dev:.4f}, acf max {acf_dev:.2f} s.e.; {elapsed:.1f}s"
    assert report(2, "Kronecker covariance, Jakes stationarity and autocorrelation", ok, detail)


# 3. oracle dominance -------------------------------------------------------------


def test_3_oracle_dominance():
    t0 = time.perf_counter()
    c = make_qam(4)
    cfg = KroneckerConfig()
    n = 10_000
    ok, lines = True, []
    for snr in range(5, 11):
        rng = make_rng(3, snr)
        H = sample_kronecker(cfg, rng, size=n)
        idx = sample_symbols(c, 2, rng, size=n)
        s2 = float(sigma2_for_snr(snr, 2, 4))
        y = transmit(H, c.values(idx), s2, rng)
        p = DetectionProblem(y, H, s2, c)
        e = {k: int(np.count_nonzero(f(p) != idx)) for k, f in (("ML", detect_ml), ("ZF", detect_zf), ("MMSE", detect_mmse))}
        m = 2 * n

        def slack(k):
            # two binomial standard deviations
            q = e[k] / m
            return 2 * math.sqrt(m * q * (1 - q))

        cond = (
            e["ML"] <= e["ZF"] + slack("ZF")
            and e["ML"] <= e["MMSE"] + slack("MMSE")
            and e["MMSE"] / m <= e["ZF"] / m + binomial_ci95(e["ZF"], m) + binomial_ci95(e["MMSE"], m)
        )
        ok &= cond
        lines.append(f"{snr}dB ML/MMSE/ZF {e['ML']}/{e['MMSE']}/{e['ZF']}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    assert report(3, "ML <= MMSE <= ZF on paired trials, 5..10 dB", ok, "; ".join(lines) + f"; {elapsed:.1f}s")


# 4. reduced-scale end-to-end -------------------------------------------------------

E2E_INI = """
[bank]
n_sequences = 3

[pretrain]
iterations = 1000

[training]
iterations = 5000
batch_channels = 100

[evaluation]
n_test_sequences = 100
trials_per_channel = 100
"""


@pytest.fixture(scope="module")
def e2e(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    (root / "e2e.ini").write_text(E2E_INI)
    base = ["--config", str(root / "e2e.ini"), "--seed", "0", "--out", str(root / "out")]
    t0 = time.perf_counter()
    for cmd in (
        ["gen-channels"],
        ["build-bank", "--sequences", "3", "--horizon", "4"],
        ["train", "--beta", "0"],
        ["train", "--beta", "1"],
        ["ser-vs-hop", "--snr", "10"],
    ):
        assert main(cmd + base) == 0
    rows = list(csv.DictReader(io.StringIO((root / "out" / "ser_vs_hop_10dB.csv").read_text())))
    table = {(r["detector"], int(r["hop"])): (int(r["errors"]), int(r["trials"]) * 2) for r in rows}
    return table, time.perf_counter() - t0, root / "out"


def _ser(e, m):
    return e / m, binomial_ci95(e, m)


@pytest.mark.slow
def test_4_end_to_end(e2e):
    table, elapsed, out = e2e
    assert len(load_bank(out / "bank")) == 13
    hops = range(5)

    def show(det):
        return "/".join(str(table[(det, t)][0]) for t in hops)

    lr0, lr0_ci = _ser(*table[("HyperMIMO-LR", 0)])
    mm0, mm0_ci = _ser(*table[("MMNet", 0)])
    mm4, mm4_ci = _ser(*table[("MMNet", 4)])
    a = abs(lr0 - mm0) <= lr0_ci + mm0_ci
    b = mm4 - mm0 > mm4_ci + mm0_ci

    def pooled(det):
        e = sum(table[(det, t)][0] for t in hops)
        m = sum(table[(det, t)][1] for t in hops)
        return _ser(e, m)

    lr, lr_ci = pooled("HyperMIMO-LR")
    hm, hm_ci = pooled("HyperMIMO")
    c = lr <= hm + lr_ci + hm_ci
    dets = {d for d, _ in table}
    ml = pooled("ML")[0]
    d = all(ml <= pooled(k)[0] for k in dets)
    sub = {"a": a, "b": b, "c": c, "d": d}
    detail = (
        " ".join(f"({k}) {'ok' if v else 'FAIL'}" for k, v in sub.items())
        + f"; errors by hop MMNet {show('MMNet')}, HyperMIMO {show('HyperMIMO')},"
        f" HyperMIMO-LR {show('HyperMIMO-LR')}, ML {show('ML')}; pooled SER LR {lr:.2e} vs HyperMIMO {hm:.2e};"
        f" {elapsed / 60:.1f} min"
    )
    assert report(4, "reduced-scale end-to-end at 10 dB", all(sub.values()) and elapsed < 1800, detail)


# 5. bank law and persistence -------------------------------------------------------


def test_5_bank_law_and_persistence(tmp_path):
    from pathlib import Path

    H0 = sample_kronecker(KroneckerConfig(), make_rng(5, 1))
    stub = PretrainConfig(iterations=1, batch_size=2)
    bank = build_bank(H0, JakesConfig(horizon=4), 140, stub, seed=5)
    count_ok = len(bank) == 561
    save_bank(bank, tmp_path / "b")
    back = load_bank(tmp_path / "b")
    same = back.equals(bank) and all(
        x.flat_params.tobytes() == y.flat_params.tobytes() for x, y in zip(bank.entries, back.entries)
    )
    from test_bank import DATA, golden_bank

    save_bank(golden_bank(), tmp_path / "g")
    golden = all(
        (tmp_path / "g" / n).read_bytes() == (Path(DATA) / "golden_bank" / n).read_bytes()
        for n in ("manifest.json", "entry_00000.bin", "entry_00001.bin")
    )
    ok = count_ok and same and golden
    detail = f"entries {len(bank)}, round trip {'bit-identical' if same else 'DIFFERS'}, golden {'match' if golden else 'MISMATCH'}"
    assert report(5, "bank counting law, persistence and golden files", ok, detail)


# 6. loss identities -------------------------------------------------------------


def _elu_inverse(y):
    return np.where(y > 0, y, np.log1p(np.maximum(y, -1 + 1e-15)))


def test_6_loss_identities():
    c = make_qam(4)
    # single-entry bank from a genuinely pretrained toy detector
    H1 = sample_kronecker(TOY_K, make_rng(6, 1))
    s2 = float(sigma2_for_snr(7.5, 1, 2))
    wm = pretrain_mmnet(H1, PretrainConfig(iterations=50, batch_size=50), make_rng(6, 2), n_layers=TOY.n_layers)
    bank = ModelBank([BankEntry(H1, s2, wm, sequence=0, hop=1)], meta={})
    # overparameterized toy hypernetwork: last layer ignores its input, bias reproduces W^M
    th = init_hypernet(TOY, make_rng(6, 3), hidden=30)
    th = ParamStore({**dict(th.items()), "W3": np.zeros_like(th["W3"]), "b3": _elu_inverse(wm.flatten())})
    lb_fit = float(loss_b(th, bank, 1.0))
    # and an exact copy of the hypernetwork's own output
    copy = ModelBank(
        [BankEntry(H1, s2, MMNetParams.from_flat(hypernet_forward(th, H1, s2), TOY), sequence=0, hop=1)], meta={}
    )
    lb_copy = float(loss_b(th, copy, 1.0))

    th2 = init_hypernet(TOY, make_rng(6, 4), hidden=30)
    lin = max(abs(float(loss_b(th2, bank, beta)) - beta * float(loss_b(th2, bank, 1.0))) for beta in (0.0, 0.5, 2.0, 7.0))
    b = draw_batch(TOY_K, c, 10, (5, 10), make_rng(6, 5))
    total, la, lb = objective(th2, b, bank, TrainConfig(beta=1.0), c)
    decomposition = abs(float(total) - float(la) - float(lb))

    cfg = TrainConfig(beta=0.0, iterations=40, batch_channels=10, check_interval=10)
    r1 = train(th2, cfg, bank, TOY_K, make_rng(6, 6))
    r2 = train(th2, cfg, None, TOY_K, make_rng(6, 6))
    paired = r1.theta.flatten().tobytes() == r2.theta.flatten().tobytes() and [
        h.loss_total for h in r1.history
    ] == [h.loss_total for h in r2.history]
    ok = lb_copy == 0.0 and lb_fit < 1e-12 and lin <= 1e-12 and decomposition <= 1e-12 and paired
    detail = (
        f"copy {lb_copy:.1e}, fitted {lb_fit:.1e}, beta-linearity {lin:.1e}, "
        f"decomposition {decomposition:.1e}, beta=0 paired {paired}"
    )
    assert report(6, "loss identities", ok, detail)


# 7. scheduler ---------------------------------------------------------------------


def test_7_scheduler():
    s = PlateauScheduler(lr=1e-3)
    improving = [s.update(1.0 / (k + 1)) for k in range(10)]
    s = PlateauScheduler(lr=1e-3)
    s.update(1.0)
    stagnant = [s.update(1.0) for _ in range(5)]
    s = PlateauScheduler(lr=1e-3)
    s.update(1.0)
    floored = [s.update(1.0) for _ in range(200)]
    ok = (
        all(v == 1e-3 for v in improving)
        and np.allclose(stagnant, [1e-3 * 0.9 ** (k + 1) for k in range(5)], rtol=1e-12)
        and min(floored) == 1e-6
        and floored[-1] == 1e-6
    )
    detail = f"improving {improving[-1]:.1e}, stagnant {stagnant[0]:.2e}->{stagnant[-1]:.2e}, floor {floored[-1]:.1e}"
    assert report(7, "plateau learning-rate schedule", ok, detail)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
