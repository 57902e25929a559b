"""Acceptance criteria at full scale.

Each test prints one ``[PASS]`` / ``[FAIL]`` line; the lines are repeated in
the terminal summary.  Run alone with ``pytest tests/test_acceptance.py -s``.
"""

import math

import numpy as np
import pytest

from bpmisac.allocation import (b_step_coefficients, optimize_digital, solve_b_step,
                                solve_p_step)
from bpmisac.apep import GridParams, effective_path_dist, mc_path_oracle, total_variation
from bpmisac.beamspace import ArrayGeometry, dft_codebook, sample_channel
from bpmisac.io import records_to_csv
from bpmisac.modem import ImConfig, SensingSpec
from bpmisac.oracles import exhaustive_beam_search, pg_b_step, pg_p_step
from bpmisac.precoder import (LinkNoise, comm_mse, lmmse_combiner, select_beams,
                              threshold_combiner)
from bpmisac.sim import (ExperimentConfig, run_apep_curve, run_ber_sweep, run_tradeoff_sweep,
                         run_trial, _setup)

from conftest import make_instances, record_acceptance

pytestmark = pytest.mark.acceptance

SNR_GRID = (-4.0, 0.0, 4.0, 8.0, 12.0)


def report(tag, passed, detail):
    record_acceptance(tag, passed, detail)
    assert passed, detail


def test_c1_combinatorics():
    rng = np.random.default_rng(20240101)
    worst_sum = worst_tv = 0.0
    worst_at = None
    for n_t in (4, 8, 16):
        for n_r in (4, 8, 16):
            for w in (1, 2, 3):
                for p in range(1, 9):
                    g = GridParams(n_t, n_r, w, p)
                    pmf = effective_path_dist(g).pmf
                    worst_sum = max(worst_sum, abs(pmf.sum() - 1.0))
                    tv = total_variation(pmf, mc_path_oracle(rng, g, 1_000_000))
                    if tv > worst_tv:
                        worst_tv, worst_at = tv, g
    report("C1 combinatorics", worst_sum <= 1e-9 and worst_tv <= 0.005,
           f"216 grids, max |sum-1| = {worst_sum:.2e}, max TV = {worst_tv:.4f} at {worst_at}")


def test_c2_mse_identity():
    cfg = ExperimentConfig(symbols_per_channel=100_000)
    s = _setup(cfg)
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(10):
        snr = float(rng.choice(cfg.snr_grid))
        mu = float(rng.choice([0.1, 0.5, 0.9]))
        res = run_trial(np.random.default_rng([7, i]), cfg, cfg.noise_at(snr).sigma2, mu=mu,
                        setup=s)
        assert not res.skipped
        worst = max(worst, abs(res.sq_error / cfg.symbols_per_channel - res.chi) / res.chi)
    report("C2 MSE identity", worst <= 0.01,
           f"10 instances x 1e5 symbols, max relative gap = {worst:.4f}")


def test_c3_lmmse_optimality(reference_setup):
    spec, cfg = reference_setup["spec"], reference_setup["cfg"]
    rng = np.random.default_rng(33)
    violations = 0
    min_gain = np.inf
    for eq, noise in make_instances(reference_setup, 100, seed=3, snr_choices=SNR_GRID):
        p = rng.uniform(0.2, 1.5, 4)
        b = rng.uniform(0.0, 1.0, 3) * spec.t
        w = lmmse_combiner(eq, p, b, spec, noise, cfg)
        chi = comm_mse(eq, w, p, b, spec, noise, cfg)
        delta = rng.standard_normal((1000, 4, 4)) + 1j * rng.standard_normal((1000, 4, 4))
        delta *= 1e-3 / np.linalg.norm(delta, axis=(1, 2), keepdims=True)
        pert = comm_mse(eq, w + delta, p, b, spec, noise, cfg)
        violations += int(np.sum(pert < chi))
        min_gain = min(min_gain, float(np.min(pert - chi)))
    report("C3 LMMSE optimality", violations == 0,
           f"100 x 1e3 perturbations, violations = {violations}, min increase = {min_gain:.2e}")


def test_c4_optimizer_contract(reference_setup):
    spec, cfg = reference_setup["spec"], reference_setup["cfg"]
    insts = make_instances(reference_setup, 100, seed=4, snr_choices=SNR_GRID)
    rates, bad_mono, bad_flags = {}, 0, 0
    for mu in (0.1, 0.5, 0.9):
        conv = 0
        for eq, noise in insts:
            res = optimize_digital(eq, spec, noise, cfg, mu)
            tr = res.objective_trace
            bad_mono += any(b > a + 1e-9 for a, b in zip(tr, tr[1:]))
            bad_flags += not all(res.flags.values())
            conv += res.converged and res.iterations <= 200
        rates[mu] = conv / len(insts)
    worst_mu1 = max(optimize_digital(eq, spec, noise, cfg, 1.0).objective for eq, noise in insts)
    ok = bad_mono == 0 and bad_flags == 0 and min(rates.values()) >= 0.99 and worst_mu1 <= 1e-6
    report("C4 optimizer contract", ok,
           f"non-monotone = {bad_mono}, constraint misses = {bad_flags}, converged fraction "
           f"per mu = {rates}, max MSE at mu=1 = {worst_mu1:.2e}")


def test_c5_subproblems_vs_oracle(reference_setup):
    spec, cfg = reference_setup["spec"], reference_setup["cfg"]
    rng = np.random.default_rng(55)
    q = cfg.n_c / cfg.k
    gap_b = gap_p = 0.0
    for eq, noise in make_instances(reference_setup, 50, seed=5, snr_choices=SNR_GRID):
        p = rng.uniform(0.2, 1.5, 4)
        w = lmmse_combiner(eq, p, spec.t, spec, noise, cfg)
        c0, g = b_step_coefficients(eq, w, p, spec, noise, cfg)
        gamma = c0 + rng.uniform(0.0, 1.0) * float(g @ spec.t ** 2)
        b = solve_b_step(eq, w, p, spec, noise, cfg, gamma)
        _, ref = pg_b_step(spec.t, spec.d, g, gamma - c0, spec.t_r)
        gap_b = max(gap_b, abs(float(spec.d @ (b - spec.t) ** 2) - ref))

        w2 = lmmse_combiner(eq, rng.uniform(0.2, 1.5, 4), rng.uniform(0, 1, 3) * spec.t, spec,
                            noise, cfg)
        pp = solve_p_step(eq, w2, cfg)
        a = w2 @ eq.h_c
        _, ref_p = pg_p_step(a, cfg.k, q)
        gap_p = max(gap_p, abs(q * float(np.sum(np.abs(a * pp - np.eye(4)) ** 2)) - ref_p))
    report("C5 subproblems vs oracle", max(gap_b, gap_p) <= 1e-5,
           f"50 + 50 instances, max b-step gap = {gap_b:.2e}, max p-step gap = {gap_p:.2e}")


def test_c6_beam_selection_oracle():
    geom = ArrayGeometry(8, 8)
    tx = rx = dft_codebook(8)
    cfg = ImConfig(2, 1, 4)
    spec = SensingSpec.uniform((3,), 5.0)
    rng = np.random.default_rng(66)
    # The digital combiner absorbs any reordering of the receive beams, so the
    # MSE depends on the tx and rx beam sets only and their pairing is not
    # identifiable.  Selections are compared as (tx set, rx set, MSE).
    mismatches = 0
    worst = 0.0
    for _ in range(50):
        h = sample_channel(rng, geom, 4)
        noise = LinkNoise.from_ebn0_db(float(rng.choice(SNR_GRID)), cfg)
        sel, eq = select_beams(h, tx, rx, spec, noise, cfg, 8 * 7)
        chi = comm_mse(eq, threshold_combiner(eq, spec, noise, cfg), np.ones(2), spec.t, spec,
                       noise, cfg)
        pairs, chi_ref = exhaustive_beam_search(h, tx, rx, spec, noise, cfg)
        same_sets = (set(sel.tx_indices) == {n for n, _ in pairs}
                     and set(sel.rx_indices) == {m for _, m in pairs})
        gap = abs(chi - chi_ref) / chi_ref
        worst = max(worst, gap)
        mismatches += not (same_sets and gap <= 1e-10)
    report("C6 beam-selection oracle", mismatches == 0,
           f"50 channels at 8x8, K=2, W=1, L=all, mismatches = {mismatches}, "
           f"max relative MSE gap = {worst:.1e}")


def test_c7_apep_vs_simulation():
    cfg = ExperimentConfig(on_grid=True, digital="fixed", snr_grid=(0, 2, 4, 6, 8, 10),
                           trials=2500, symbols_per_channel=100, seed=77)
    sim = run_ber_sweep(cfg, threads=4)
    analytic = dict(run_apep_curve(cfg))
    checked, worst, rows = 0, 0.0, []
    for rec in sim:
        a = analytic[rec.snr_db]
        rows.append(f"{rec.snr_db:g}dB sim={rec.ber:.3e} apep={a:.3e}")
        assert rec.bits_sent >= 1_000_000
        if 1e-4 <= rec.ber <= 1e-1:
            checked += 1
            worst = max(worst, abs(math.log10(rec.ber) - math.log10(a)))
    report("C7 APEP vs simulation", checked > 0 and worst <= 0.5,
           f"{checked} points in range, max |log10 gap| = {worst:.3f}; " + "; ".join(rows))


def _sigma(r):
    return math.sqrt(max(r.ber * (1 - r.ber), 0.0) / r.bits_sent)


def test_c8_tradeoff_monotonicity():
    cfg = ExperimentConfig(seed=88)
    mus = [round(0.1 * i, 10) for i in range(1, 11)]
    recs = run_tradeoff_sweep(cfg, mus, snr_db=8.0, threads=4)
    opt = {r.mu: r for r in recs if r.digital == "optimized"}
    base = {r.mu: r for r in recs if r.digital == "scaled"}
    mse = [opt[m].beampattern_mse for m in mus]
    mse_ok = all(b <= a for a, b in zip(mse, mse[1:]))
    # At mu = 1 both variants sit at b = t up to round-off.
    dom_ok = all(opt[m].beampattern_mse <= base[m].beampattern_mse + 1e-12 for m in mus)
    r1, r5, r9 = opt[0.1], opt[0.5], opt[0.9]
    slack95 = 2 * math.hypot(_sigma(r9), _sigma(r5))
    slack51 = 2 * math.hypot(_sigma(r5), _sigma(r1))
    ber_ok = r9.ber <= r5.ber + slack95 and r5.ber <= r1.ber + slack51
    report("C8 trade-off monotonicity", mse_ok and dom_ok and ber_ok,
           f"MSE non-increasing = {mse_ok}, optimized <= scaled = {dom_ok}, "
           f"BER(0.1, 0.5, 0.9) = ({r1.ber:.2e}, {r5.ber:.2e}, {r9.ber:.2e}) "
           f"over {r1.bits_sent} bits each, ordering = {ber_ok}")


def test_c9_reproducibility():
    cfg = ExperimentConfig(trials=40, symbols_per_channel=100, snr_grid=(-12.0, -6.0, 0.0),
                           seed=99)
    ber = {t: records_to_csv(run_ber_sweep(cfg, threads=t)) for t in (1, 4, 8)}
    trade = {t: records_to_csv(run_tradeoff_sweep(cfg, [0.3, 0.8], snr_db=-8.0, threads=t))
             for t in (1, 4, 8)}
    same = len(set(ber.values())) == 1 and len(set(trade.values())) == 1
    report("C9 reproducibility", same,
           f"BER and trade-off CSVs at 1/4/8 threads identical = {same} "
           f"({len(ber[1])} + {len(trade[1])} bytes)")
