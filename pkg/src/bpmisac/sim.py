"""Monte Carlo link simulation and the experiment drivers.

Every trial owns two random streams derived from the experiment seed: a
channel stream keyed by the trial index alone, and a symbol/noise stream
keyed by ``(point, trial)``.  All SNR points and all mu values of a sweep
therefore see the same channel realizations, and the results do not depend
on the order in which trials run or on the thread count.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .allocation import (AllocationResult, SolverOptions, beampattern, beampattern_mse,
                         optimize_digital, unoptimized_allocation)
from .apep import GridParams, apep
from .beamspace import ArrayGeometry, dft_codebook, sample_channel, steering_vector
from .errors import BeamSelectionError, InfeasibleAllocationError
from .modem import (ImConfig, SensingSpec, build_im_codebook, demodulate_ml,
                    draw_sensing_symbol, modulate)
from .precoder import (LinkNoise, comm_mse, select_beams, sensing_precoder,
                       threshold_combiner)

__all__ = [
    "SCHEMES",
    "DIGITAL_MODES",
    "ExperimentConfig",
    "TrialResult",
    "SweepRecord",
    "trial_streams",
    "run_trial",
    "run_point",
    "run_ber_sweep",
    "run_tradeoff_sweep",
    "run_beampattern",
    "run_apep_curve",
]

SCHEMES = ("bpm", "pbpm", "gbm")
# optimized: alternating digital design; fixed: b = t, p = 1 with the reference
# combiner; scaled: b = sqrt(mu) t, p = 1 (feasible without optimization).
DIGITAL_MODES = ("optimized", "fixed", "scaled")


@dataclass(frozen=True)
class ExperimentConfig:
    n_t: int = 32
    n_r: int = 32
    p: int = 8
    on_grid: bool = False
    k: int = 4
    n_c: int = 3
    m: int = 4
    modulation_kind: str = "qam"
    codeword_indices: tuple = (11, 12, 13)
    t_r: float = 5.0
    d: tuple | None = None
    t: tuple | None = None
    l: int = 20
    mu: float = 0.5
    convergence_tol: float = 1e-3
    max_iterations: int = 200
    kkt_tol: float = 1e-8
    bisection_tol: float = 1e-10
    digital: str = "optimized"
    snr_grid: tuple = tuple(float(s) for s in range(-4, 13, 2))
    trials: int = 200
    symbols_per_channel: int = 500
    seed: int = 0
    scheme: str = "bpm"

    def __post_init__(self):
        object.__setattr__(self, "codeword_indices", tuple(int(i) for i in self.codeword_indices))
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        for name in ("d", "t"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(float(x) for x in val))
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.digital not in DIGITAL_MODES:
            raise ValueError(f"digital must be one of {DIGITAL_MODES}, got {self.digital!r}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if self.trials < 1 or self.symbols_per_channel < 1:
            raise ValueError("trials and symbols_per_channel must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit value")
        # Validate the derived objects eagerly.
        self.im_config()
        self.sensing_spec()
        ArrayGeometry(self.n_t, self.n_r)

    @property
    def w(self) -> int:
        return len(self.codeword_indices) if self.scheme != "gbm" else 0

    def im_config(self) -> ImConfig:
        n_c = self.k if self.scheme == "pbpm" else self.n_c
        return ImConfig(self.k, n_c, self.m, self.modulation_kind)

    def sensing_spec(self) -> SensingSpec:
        if self.scheme == "gbm" or not self.codeword_indices:
            return SensingSpec.none()
        w = len(self.codeword_indices)
        d = np.full(w, 1.0 / w) if self.d is None else np.asarray(self.d)
        if self.t is None:
            # Flat template scaled to the average sensing power.
            t = np.full(w, math.sqrt(self.t_r / float(d.sum())))
        else:
            t = np.asarray(self.t)
        return SensingSpec(self.codeword_indices, t, d, self.t_r)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(self.convergence_tol, self.max_iterations, self.kkt_tol,
                             self.bisection_tol)

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_t, self.n_r)

    def noise_at(self, snr_db: float) -> LinkNoise:
        return LinkNoise.from_ebn0_db(snr_db, self.im_config())

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, val in out.items():
            if isinstance(val, tuple):
                out[key] = list(val)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        w = data.pop("w", None)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if w is not None and data.get("scheme", "bpm") != "gbm" and w != len(cfg.codeword_indices):
            raise ValueError(f"w={w} disagrees with {len(cfg.codeword_indices)} codeword indices")
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class TrialResult:
    bit_errors: int = 0
    bits_sent: int = 0
    beampattern_mse: float = 0.0
    iterations: int = 0
    skipped: bool = False
    reason: str = ""
    chi: float = float("nan")
    sq_error: float = 0.0
    allocation: AllocationResult | None = field(default=None, repr=False)


@dataclass(frozen=True)
class SweepRecord:
    snr_db: float
    scheme: str
    digital: str
    mu: float
    ber: float
    bit_errors: int
    bits_sent: int
    beampattern_mse: float
    mean_iterations: float
    skipped_trials: int
    wall_time: float = 0.0


def trial_streams(seed: int, point: int, trial: int):
    """(channel rng, symbol rng) for one trial."""
    chan = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, trial)))
    sym = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, point, trial)))
    return chan, sym


@dataclass(frozen=True)
class _Setup:
    im: ImConfig
    spec: SensingSpec
    cb: object
    tx: object
    rx: object
    f_r: np.ndarray


def _setup(cfg: ExperimentConfig) -> _Setup:
    im = cfg.im_config()
    spec = cfg.sensing_spec()
    tx, rx = dft_codebook(cfg.n_t), dft_codebook(cfg.n_r)
    return _Setup(im, spec, build_im_codebook(im), tx, rx, sensing_precoder(spec, tx))


def _select(h, s: _Setup, noise, cfg):
    n_pairs = cfg.n_r * (cfg.n_t - s.spec.w)
    l = min(cfg.l, n_pairs)
    try:
        return select_beams(h, s.tx, s.rx, s.spec, noise, s.im, l)
    except BeamSelectionError:
        # On-grid channels leave most cells at round-off level; one wider pass.
        l2 = min(2 * l, n_pairs)
        if l2 == l:
            raise
        return select_beams(h, s.tx, s.rx, s.spec, noise, s.im, l2)


def run_trial(rng, cfg: ExperimentConfig, sigma2: float, *, mu=None, digital=None,
              channel_rng=None, setup: _Setup | None = None,
              store_allocation: bool = False) -> TrialResult:
    """One channel realization carrying ``symbols_per_channel`` transmissions.

    ``rng`` drives symbols, sensing activations and noise; the channel comes
    from ``channel_rng`` (``rng`` when omitted).  Trials whose beam selection
    or allocation fails are returned with ``skipped=True``.
    """
    s = setup or _setup(cfg)
    mu = cfg.mu if mu is None else mu
    digital = cfg.digital if digital is None else digital
    noise = LinkNoise(sigma2)
    h = sample_channel(channel_rng if channel_rng is not None else rng, cfg.geometry(),
                       cfg.p, cfg.on_grid)
    try:
        _, eq = _select(h, s, noise, cfg)
        if digital == "optimized":
            alloc = optimize_digital(eq, s.spec, noise, s.im, mu, cfg.solver_options())
        elif digital == "scaled":
            alloc = unoptimized_allocation(eq, s.spec, noise, s.im, mu)
        else:
            w0 = threshold_combiner(eq, s.spec, noise, s.im)
            alloc = AllocationResult(s.spec.t.copy(), np.ones(s.im.k), w0, [0.0], 0, True)
    except (BeamSelectionError, InfeasibleAllocationError) as exc:
        return TrialResult(skipped=True, reason=type(exc).__name__)

    n_sym = cfg.symbols_per_channel
    eta = s.cb.eta
    bits = rng.integers(0, 2, size=(n_sym, eta), dtype=np.uint8)
    x = modulate(bits, s.cb)
    x_r = draw_sensing_symbol(rng, s.spec, n_sym)
    xi = math.sqrt(sigma2 / 2) * (rng.standard_normal((n_sym, s.im.k))
                                  + 1j * rng.standard_normal((n_sym, s.im.k)))
    y = x @ (eq.h_c * alloc.p).T + x_r @ (eq.h_r * alloc.b).T + xi
    x_tilde = y @ alloc.w_bb.T
    detected = demodulate_ml(x_tilde, s.cb)

    bp = beampattern(alloc.b, s.f_r, s.spec)
    return TrialResult(
        bit_errors=int(np.count_nonzero(detected != bits)),
        bits_sent=int(bits.size),
        beampattern_mse=beampattern_mse(bp, s.spec) if s.spec.w else 0.0,
        iterations=alloc.iterations,
        chi=float(comm_mse(eq, alloc.w_bb, alloc.p, alloc.b, s.spec, noise, s.im)),
        sq_error=float(np.sum(np.abs(x_tilde - x) ** 2)),
        allocation=alloc if store_allocation else None,
    )


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_point(cfg: ExperimentConfig, snr_db: float, point: int, *, mu=None, digital=None,
              threads: int = 1) -> SweepRecord:
    """Aggregate ``cfg.trials`` trials at one SNR; counters are summed in trial order."""
    start = time.perf_counter()
    mu = cfg.mu if mu is None else mu
    digital = cfg.digital if digital is None else digital
    s = _setup(cfg)
    sigma2 = cfg.noise_at(snr_db).sigma2

    def one(trial):
        chan, sym = trial_streams(cfg.seed, point, trial)
        return run_trial(sym, cfg, sigma2, mu=mu, digital=digital, channel_rng=chan, setup=s)

    results = _map(one, range(cfg.trials), threads)
    kept = [r for r in results if not r.skipped]
    errors = sum(r.bit_errors for r in kept)
    sent = sum(r.bits_sent for r in kept)
    bp_mse = math.fsum(r.beampattern_mse for r in kept) / len(kept) if kept else float("nan")
    iters = math.fsum(r.iterations for r in kept) / len(kept) if kept else float("nan")
    return SweepRecord(
        snr_db=float(snr_db), scheme=cfg.scheme, digital=digital, mu=float(mu),
        ber=errors / sent if sent else float("nan"), bit_errors=errors, bits_sent=sent,
        beampattern_mse=bp_mse, mean_iterations=iters,
        skipped_trials=len(results) - len(kept), wall_time=time.perf_counter() - start)


def run_ber_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[SweepRecord]:
    return [run_point(cfg, snr, i, threads=threads) for i, snr in enumerate(cfg.snr_grid)]


def run_tradeoff_sweep(cfg: ExperimentConfig, mu_list, snr_db: float = 0.0,
                       threads: int = 1) -> list[SweepRecord]:
    """BER and beampattern MSE per mu, optimized first, then the ``scaled`` baseline."""
    records = []
    for digital in ("optimized", "scaled"):
        for mu in mu_list:
            records.append(run_point(cfg, snr_db, 0, mu=float(mu), digital=digital,
                                     threads=threads))
    return records


def run_beampattern(cfg: ExperimentConfig, mu: float, active=None, sensing=None,
                    snr_db: float = 0.0, n_grid: int = 1024) -> dict:
    """Normalized transmit pattern for one activation on one channel realization.

    Parameters
    ----------
    active : sequence of int, optional
        The N_C active communication beams (0-based positions in F_C).  A
        random pattern from the codebook is used when omitted.
    sensing : int, optional
        0-based position of the active sensing beam (default 0, i.e. the
        first configured direction).
    """
    s = _setup(cfg)
    chan, sym = trial_streams(cfg.seed, 0, 0)
    noise = cfg.noise_at(snr_db)
    h = sample_channel(chan, cfg.geometry(), cfg.p, cfg.on_grid)
    sel, eq = _select(h, s, noise, cfg)
    alloc = optimize_digital(eq, s.spec, noise, s.im, mu, cfg.solver_options())
    if active is None:
        active = s.cb.patterns[int(sym.integers(len(s.cb.patterns)))]
    active = tuple(int(a) for a in active)
    if len(active) != s.im.n_c or len(set(active)) != len(active) or \
            any(not 0 <= a < s.im.k for a in active):
        raise ValueError(f"need {s.im.n_c} distinct beams in [0, {s.im.k}), got {active}")

    theta = -np.pi / 2 + np.pi * np.arange(n_grid) / n_grid
    a = steering_vector(theta, cfg.n_t)
    f_c = s.tx.columns(sel.tx_indices)
    gain = np.zeros(n_grid)
    for i in active:
        gain += alloc.p[i] ** 2 * np.abs(a.conj().T @ f_c[:, i]) ** 2
    if s.spec.w:
        sensing = 0 if sensing is None else int(sensing)
        gain += alloc.b[sensing] ** 2 * np.abs(a.conj().T @ s.f_r[:, sensing]) ** 2
    gain /= gain.max()
    return {"theta": theta, "gain": gain, "active": active, "sensing": sensing,
            "tx_indices": sel.tx_indices, "b": alloc.b, "p": alloc.p, "mu": mu}


def run_apep_curve(cfg: ExperimentConfig) -> list[tuple[float, float]]:
    g = GridParams(cfg.n_t, cfg.n_r, cfg.w, cfg.p)
    s = _setup(cfg)
    return [(snr, apep(g, s.cb, cfg.noise_at(snr))) for snr in cfg.snr_grid]
