"""Analog-part design and the LMMSE / communication-MSE machinery.

Shapes follow the link model: ``h_c`` is K x K (communication beams after the
analog combiner), ``h_r`` is K x W (sensing beams leaking into the receiver),
``p`` and ``b`` are real amplitude vectors of length K and W.  The MSE and
combiner helpers broadcast over leading batch axes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .beamspace import ChannelRealization, Codebook, beamspace_matrix
from .errors import BeamSelectionError, NumericalError
from .modem import ImConfig, SensingSpec

__all__ = [
    "LinkNoise",
    "EquivalentChannels",
    "BeamSelection",
    "sensing_precoder",
    "candidate_pairs",
    "equivalent_channels",
    "comm_mse",
    "lmmse_combiner",
    "threshold_combiner",
    "mse_threshold",
    "select_beams",
]


@dataclass(frozen=True)
class LinkNoise:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"noise variance must be positive, got {self.sigma2}")

    @classmethod
    def from_ebn0_db(cls, ebn0_db: float, config: ImConfig) -> "LinkNoise":
        """Eb/N0 = N_C / (eta * sigma^2)."""
        snr = 10.0 ** (ebn0_db / 10.0)
        return cls(config.n_c / (config.eta * snr))


@dataclass(frozen=True)
class EquivalentChannels:
    h_c: np.ndarray
    h_r: np.ndarray

    @property
    def k(self) -> int:
        return self.h_c.shape[-1]

    @property
    def w(self) -> int:
        return self.h_r.shape[-1]


@dataclass(frozen=True)
class BeamSelection:
    """1-based DFT indices of the K transmit (F_C) and receive (W_RF) beams."""

    tx_indices: tuple[int, ...]
    rx_indices: tuple[int, ...]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.tx_indices, self.rx_indices))


def sensing_precoder(spec: SensingSpec, codebook: Codebook) -> np.ndarray:
    idx = spec.codeword_indices
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate sensing indices {idx}")
    if any(not 1 <= i <= codebook.size for i in idx):
        raise ValueError(f"sensing indices {idx} outside [1, {codebook.size}]")
    return codebook.columns(idx)


def _as_matrix(h) -> np.ndarray:
    return h.matrix if isinstance(h, ChannelRealization) else np.asarray(h)


def candidate_pairs(h, tx: Codebook, rx: Codebook, omega, l: int) -> list[tuple[int, int]]:
    """The ``l`` strongest admissible ``(tx, rx)`` beam pairs by ``|f_r(m)^H H f_t(n)|``.

    Transmit beams in ``omega`` are excluded.  Ties resolve to the
    lexicographically smaller ``(n, m)``.
    """
    power = np.abs(beamspace_matrix(_as_matrix(h), tx, rx))
    omega = set(int(i) for i in omega)
    m_idx, n_idx = np.meshgrid(np.arange(1, rx.size + 1), np.arange(1, tx.size + 1),
                               indexing="ij")
    keep = ~np.isin(n_idx, list(omega))
    mag, n_flat, m_flat = power[keep], n_idx[keep], m_idx[keep]
    if l > mag.size:
        raise ValueError(f"requested {l} candidates but only {mag.size} admissible pairs exist")
    order = np.lexsort((m_flat, n_flat, -mag))[:l]
    return [(int(n_flat[i]), int(m_flat[i])) for i in order]


def equivalent_channels(h, tx: Codebook, rx: Codebook, selection: BeamSelection,
                        spec: SensingSpec) -> EquivalentChannels:
    hm = _as_matrix(h)
    w_rf = rx.columns(selection.rx_indices)
    f_c = tx.columns(selection.tx_indices)
    f_r = tx.columns(spec.codeword_indices)
    return EquivalentChannels(w_rf.conj().T @ hm @ f_c, w_rf.conj().T @ hm @ f_r)


def _fro2(a):
    return np.sum(np.abs(a) ** 2, axis=(-2, -1))


def comm_mse(eq: EquivalentChannels, w_bb, p, b, spec: SensingSpec, noise: LinkNoise,
             config: ImConfig):
    """Symbol MSE of the beam vector after the digital combiner ``w_bb``.

    q * ||W H_C diag(p) - I||^2 + sum_l d_l b_l^2 ||W H_R[:, l]||^2 + sigma^2 ||W||^2
    with q = N_C / K.
    """
    q = config.n_c / config.k
    w_bb = np.asarray(w_bb)
    p = np.asarray(p, dtype=float)
    b = np.asarray(b, dtype=float)
    eye = np.eye(eq.k)
    comm = _fro2(w_bb @ (eq.h_c * p[..., None, :]) - eye)
    sens = _fro2(w_bb @ (eq.h_r * (b * np.sqrt(spec.d))[..., None, :]))
    return q * comm + sens + noise.sigma2 * _fro2(w_bb)


def lmmse_combiner(eq: EquivalentChannels, p, b, spec: SensingSpec, noise: LinkNoise,
                   config: ImConfig) -> np.ndarray:
    """W = q diag(p) H_C^H (q H_C diag(p)^2 H_C^H + H_R diag(d b^2) H_R^H + sigma^2 I)^-1."""
    q = config.n_c / config.k
    p = np.asarray(p, dtype=float)
    b = np.asarray(b, dtype=float)
    hcp = eq.h_c * p[..., None, :]
    hrb = eq.h_r * (b * np.sqrt(spec.d))[..., None, :]
    cov = (q * hcp @ np.swapaxes(hcp, -1, -2).conj()
           + hrb @ np.swapaxes(hrb, -1, -2).conj()
           + noise.sigma2 * np.eye(eq.k))
    try:
        # cov is Hermitian, so W^H = cov^-1 (q H_C diag(p)).
        w_h = np.linalg.solve(cov, q * hcp)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular LMMSE covariance") from exc
    return np.swapaxes(w_h, -1, -2).conj()


def threshold_combiner(eq: EquivalentChannels, spec: SensingSpec, noise: LinkNoise,
                       config: ImConfig) -> np.ndarray:
    """The reference combiner built with unit communication power and ``b = t``."""
    return lmmse_combiner(eq, np.ones(eq.k), spec.t, spec, noise, config)


def mse_threshold(eq: EquivalentChannels, spec: SensingSpec, noise: LinkNoise,
                  config: ImConfig, mu: float) -> float:
    """Relative MSE budget; ``mu`` scales the residual sensing-interference term."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    w0 = threshold_combiner(eq, spec, noise, config)
    base = comm_mse(eq, w0, np.ones(eq.k), np.zeros(eq.w), spec, noise, config)
    sens = comm_mse(eq, w0, np.ones(eq.k), spec.t, spec, noise, config) - base
    return float(base + mu * sens)


def select_beams(h, tx: Codebook, rx: Codebook, spec: SensingSpec, noise: LinkNoise,
                 config: ImConfig, l: int) -> tuple[BeamSelection, EquivalentChannels]:
    """Two-stage selection: ``l`` max-power candidates, then the min-MSE K-subset.

    Only subsets with pairwise distinct transmit and receive beams are
    considered.  The MSE of each subset is evaluated at the reference
    combiner with unit communication power and ``b = t``.
    """
    k = config.k
    hm = _as_matrix(h)
    cands = candidate_pairs(hm, tx, rx, spec.codeword_indices, l)
    tx_c = np.array([c[0] for c in cands])
    rx_c = np.array([c[1] for c in cands])

    combos = np.array(list(itertools.combinations(range(len(cands)), k)), dtype=int)
    if combos.size == 0:
        raise BeamSelectionError(f"{len(cands)} candidates cannot form {k} beam pairs")
    ct, cr = tx_c[combos], rx_c[combos]
    st, sr = np.sort(ct, axis=1), np.sort(cr, axis=1)
    ok = np.all(np.diff(st, axis=1) > 0, axis=1) & np.all(np.diff(sr, axis=1) > 0, axis=1)
    if not ok.any():
        raise BeamSelectionError(
            f"no {k} candidates with distinct tx and rx beams among {len(cands)}; raise l")
    combos, ct, cr = combos[ok], ct[ok], cr[ok]

    bs = beamspace_matrix(hm, tx, rx)
    h_c = bs[(cr - 1)[:, :, None], (ct - 1)[:, None, :]]
    omega = np.asarray(spec.codeword_indices, dtype=int)
    h_r = bs[(cr - 1)[:, :, None], (omega - 1)[None, None, :]]
    eq = EquivalentChannels(h_c, h_r)
    w0 = lmmse_combiner(eq, np.ones(k), spec.t, spec, noise, config)
    chi = comm_mse(eq, w0, np.ones(k), spec.t, spec, noise, config)
    best = int(np.argmin(chi))
    sel = BeamSelection(tuple(int(v) for v in ct[best]), tuple(int(v) for v in cr[best]))
    return sel, EquivalentChannels(h_c[best], h_r[best])
