"""Property checks run by the ``validate`` subcommand.

Each check is sized to finish in seconds; the full-scale versions live in the
acceptance tests.  ``faults`` injects known defects to show that a check can
fail: ``printed-cover-index`` swaps in the unnormalized open-row count and
``nonmonotone-optimizer`` perturbs the sensing-amplitude update.
"""

from __future__ import annotations

import json

import numpy as np

from .allocation import optimize_digital, solve_b_step, solve_p_step, b_step_coefficients
from .beamspace import sample_channel
from .apep import GridParams, effective_path_dist, mc_path_oracle, total_variation
from .errors import NonMonotoneObjectiveError
from .oracles import pg_b_step, pg_p_step
from .precoder import comm_mse, lmmse_combiner
from .sim import ExperimentConfig, _select, _setup, run_trial

__all__ = ["FAULTS", "validate", "format_report"]

FAULTS = ("printed-cover-index", "nonmonotone-optimizer")


def _instances(cfg: ExperimentConfig, n: int, seed: int, snr_db: float = 0.0):
    s = _setup(cfg)
    noise = cfg.noise_at(snr_db)
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        h = sample_channel(rng, cfg.geometry(), cfg.p, cfg.on_grid)
        _, eq = _select(h, s, noise, cfg)
        out.append(eq)
    return s, noise, out


def _check(name, passed, **detail):
    return {"name": name, "passed": bool(passed), "detail": detail}


def _normalization():
    worst = 0.0
    for n in (4, 8):
        for w in (1, 2, 3):
            for p in range(1, 9):
                pmf = effective_path_dist(GridParams(n, n, w, p)).pmf
                worst = max(worst, abs(pmf.sum() - 1.0))
    return _check("distribution_normalization", worst <= 1e-9, max_abs_error=worst)


def _oracle_agreement(faults, seed):
    cover = "printed" if "printed-cover-index" in faults else "blocked"
    rng = np.random.default_rng(seed)
    worst = 0.0
    for g in (GridParams(7, 7, 3, 7), GridParams(4, 8, 2, 5), GridParams(8, 4, 1, 8)):
        tv = total_variation(effective_path_dist(g, cover).pmf, mc_path_oracle(rng, g, 200_000))
        worst = max(worst, tv)
    return _check("oracle_agreement", worst <= 0.01, max_tv=worst, cover_index=cover)


def _lmmse_optimality(cfg, seed):
    s, noise, eqs = _instances(cfg, 10, seed)
    rng = np.random.default_rng(seed + 1)
    violations = 0
    for eq in eqs:
        p = rng.uniform(0.2, 1.5, s.im.k)
        b = rng.uniform(0.0, 1.0, s.spec.w) * s.spec.t
        w = lmmse_combiner(eq, p, b, s.spec, noise, s.im)
        chi = comm_mse(eq, w, p, b, s.spec, noise, s.im)
        delta = rng.standard_normal((200,) + w.shape) + 1j * rng.standard_normal((200,) + w.shape)
        delta *= 1e-3 / np.linalg.norm(delta, axis=(1, 2), keepdims=True)
        pert = comm_mse(eq, w + delta, p, b, s.spec, noise, s.im)
        violations += int(np.sum(pert < chi))
    return _check("lmmse_optimality", violations == 0, violations=violations)


def _chi_identity(cfg, seed):
    c = cfg.replace(symbols_per_channel=100_000)
    s = _setup(c)
    worst = 0.0
    for i in range(3):
        rng = np.random.default_rng([seed, i])
        res = run_trial(rng, c, c.noise_at(0.0).sigma2, setup=s)
        worst = max(worst, abs(res.sq_error / c.symbols_per_channel - res.chi) / res.chi)
    return _check("chi_analytic_vs_empirical", worst <= 0.01, max_rel_error=worst)


def _tampered_b_step():
    calls = {"n": 0}

    def step(*args, **kwargs):
        calls["n"] += 1
        b = solve_b_step(*args, **kwargs)
        return b if calls["n"] == 1 else 0.5 * b

    return step


def _monotone(cfg, faults, seed):
    s, noise, eqs = _instances(cfg, 10, seed)
    failures = 0
    for eq in eqs:
        b_step = _tampered_b_step() if "nonmonotone-optimizer" in faults else solve_b_step
        try:
            res = optimize_digital(eq, s.spec, noise, s.im, 0.5, cfg.solver_options(),
                                   b_step=b_step)
        except NonMonotoneObjectiveError:
            failures += 1
            continue
        if not all(res.flags.values()):
            failures += 1
    return _check("monotone_objective", failures == 0, failures=failures)


def _subproblems(cfg, seed):
    s, noise, eqs = _instances(cfg, 8, seed)
    rng = np.random.default_rng(seed + 2)
    worst_b = worst_p = 0.0
    for eq in eqs:
        p = rng.uniform(0.2, 1.5, s.im.k)
        w = lmmse_combiner(eq, p, s.spec.t, s.spec, noise, s.im)
        c0, g = b_step_coefficients(eq, w, p, s.spec, noise, s.im)
        gamma = c0 + rng.uniform(0.0, 1.0) * float(g @ s.spec.t ** 2)
        b = solve_b_step(eq, w, p, s.spec, noise, s.im, gamma)
        _, ref = pg_b_step(s.spec.t, s.spec.d, g, gamma - c0, s.spec.t_r)
        worst_b = max(worst_b, abs(float(s.spec.d @ (b - s.spec.t) ** 2) - ref))
        q = s.im.n_c / s.im.k
        pp = solve_p_step(eq, w, s.im)
        a = w @ eq.h_c
        _, ref_p = pg_p_step(a, s.im.k, q)
        val = q * float(np.sum(np.abs(a * pp - np.eye(s.im.k)) ** 2))
        worst_p = max(worst_p, abs(val - ref_p))
    return _check("subproblem_vs_oracle", max(worst_b, worst_p) <= 1e-5,
                  b_step_gap=worst_b, p_step_gap=worst_p)


def validate(cfg: ExperimentConfig | None = None, faults=(), seed: int = 0) -> dict:
    cfg = cfg or ExperimentConfig()
    unknown = set(faults) - set(FAULTS)
    if unknown:
        raise ValueError(f"unknown faults {sorted(unknown)}; choose from {FAULTS}")
    checks = [
        _normalization(),
        _oracle_agreement(faults, seed),
        _lmmse_optimality(cfg, seed),
        _chi_identity(cfg, seed),
        _monotone(cfg, faults, seed),
        _subproblems(cfg, seed),
    ]
    return {"passed": all(c["passed"] for c in checks), "faults": sorted(faults),
            "checks": checks}


def format_report(report: dict) -> str:
    return json.dumps(report, indent=2, default=float) + "\n"
