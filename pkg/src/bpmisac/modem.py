"""Index modulation over beams, constellations, sensing symbols and ML detection."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ImConfig",
    "ImCodebook",
    "SensingSpec",
    "spectral_efficiency",
    "index_bits",
    "gray_constellation",
    "build_im_codebook",
    "bits_to_int",
    "int_to_bits",
    "modulate",
    "draw_sensing_symbol",
    "demodulate_ml",
    "count_bit_errors",
]


@dataclass(frozen=True)
class ImConfig:
    """``n_c`` of ``k`` beams active, each carrying an ``m``-ary symbol."""

    k: int
    n_c: int
    m: int = 4
    modulation_kind: str = "qam"

    def __post_init__(self):
        if not 1 <= self.n_c <= self.k:
            raise ValueError(f"need 1 <= n_c <= k, got n_c={self.n_c}, k={self.k}")
        if self.m < 2 or self.m & (self.m - 1):
            raise ValueError(f"constellation order must be a power of two >= 2, got {self.m}")
        if self.modulation_kind not in ("psk", "qam"):
            raise ValueError(f"unknown modulation kind {self.modulation_kind!r}")
        if self.modulation_kind == "qam" and self.m > 2 and int(math.log2(self.m)) % 2:
            raise ValueError(f"square QAM needs an even number of bits, got M={self.m}")

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.m))

    @property
    def eta(self) -> int:
        return spectral_efficiency(self)


def index_bits(k: int, n_c: int) -> int:
    return math.comb(k, n_c).bit_length() - 1


def spectral_efficiency(config: ImConfig) -> int:
    """Bits per channel use: symbol bits on active beams plus index bits."""
    return config.n_c * config.bits_per_symbol + index_bits(config.k, config.n_c)


def _gray(n):
    return n ^ (n >> 1)


def gray_constellation(m: int, kind: str = "qam") -> np.ndarray:
    """Unit average-energy constellation; ``points[label]`` is the point for ``label``.

    QAM labels split into an in-phase half (high bits) and a quadrature half
    (low bits), each Gray-mapped onto a PAM ladder.  M=2 is BPSK for either kind.
    """
    if m == 2:
        return np.array([-1.0 + 0j, 1.0 + 0j])
    if kind == "psk":
        labels = np.arange(m)
        pts = np.empty(m, dtype=complex)
        pts[_gray(labels)] = np.exp(2j * np.pi * labels / m)
        return pts
    side = int(round(math.sqrt(m)))
    half = int(math.log2(side))
    levels = np.empty(side)
    pos = np.arange(side)
    levels[_gray(pos)] = 2 * pos - side + 1
    labels = np.arange(m)
    pts = levels[labels >> half] + 1j * levels[labels & (side - 1)]
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def int_to_bits(values, n_bits: int) -> np.ndarray:
    """MSB-first bit expansion; works on scalars or arrays."""
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.shape[-1]
    return (bits << np.arange(n - 1, -1, -1)).sum(axis=-1)


@dataclass(frozen=True)
class ImCodebook:
    config: ImConfig
    patterns: tuple[tuple[int, ...], ...]
    constellation: np.ndarray
    candidates: np.ndarray = field(repr=False)

    @property
    def eta(self) -> int:
        return self.config.eta

    @property
    def n_index_bits(self) -> int:
        return index_bits(self.config.k, self.config.n_c)

    @property
    def candidate_bits(self) -> np.ndarray:
        """Row ``i`` holds the bit label of ``candidates[i]``."""
        return int_to_bits(np.arange(2 ** self.eta), self.eta)


def build_im_codebook(config: ImConfig) -> ImCodebook:
    n_idx = index_bits(config.k, config.n_c)
    patterns = tuple(itertools.islice(itertools.combinations(range(config.k), config.n_c),
                                      2 ** n_idx))
    const = gray_constellation(config.m, config.modulation_kind)
    partial = ImCodebook(config, patterns, const, np.empty((0, config.k)))
    cands = _modulate(int_to_bits(np.arange(2 ** config.eta), config.eta), partial)
    return ImCodebook(config, patterns, const, cands)


def _modulate(bits: np.ndarray, cb: ImCodebook) -> np.ndarray:
    cfg = cb.config
    n_idx = cb.n_index_bits
    q = cfg.bits_per_symbol
    pat_id = bits_to_int(bits[..., :n_idx]) if n_idx else np.zeros(bits.shape[:-1], dtype=int)
    sym_bits = bits[..., n_idx:].reshape(bits.shape[:-1] + (cfg.n_c, q))
    symbols = cb.constellation[bits_to_int(sym_bits)]
    active = np.asarray(cb.patterns, dtype=int)[pat_id]
    out = np.zeros(bits.shape[:-1] + (cfg.k,), dtype=complex)
    np.put_along_axis(out, active, symbols, axis=-1)
    return out


def modulate(bits, cb: ImCodebook) -> np.ndarray:
    """Map an eta-bit message (or a batch, last axis) to a K-length beam vector.

    Leading index bits choose the active-beam pattern, the rest fill the
    active beams in ascending order.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] != cb.eta:
        raise ValueError(f"expected {cb.eta} bits, got {bits.shape[-1]}")
    return _modulate(bits, cb)


@dataclass(frozen=True)
class SensingSpec:
    """Sensing beams: DFT indices, desired gains ``t`` and activation probabilities ``d``.

    ``w == 0`` describes a communication-only link (no sensing beams).
    """

    codeword_indices: tuple[int, ...]
    t: np.ndarray
    d: np.ndarray
    t_r: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "codeword_indices", tuple(int(i) for i in self.codeword_indices))
        w = len(self.codeword_indices)
        if t.shape != (w,) or d.shape != (w,):
            raise ValueError("t and d must have one entry per sensing beam")
        if len(set(self.codeword_indices)) != w:
            raise ValueError(f"duplicate sensing indices {self.codeword_indices}")
        if w:
            if np.any(d < 0) or abs(d.sum() - 1.0) > 1e-9:
                raise ValueError("activation probabilities must be nonnegative and sum to 1")
            if abs(float(d @ t ** 2) - self.t_r) > 1e-9:
                raise ValueError("sum(d * t**2) must equal t_r")

    @property
    def w(self) -> int:
        return len(self.codeword_indices)

    @classmethod
    def uniform(cls, indices, t_r: float) -> "SensingSpec":
        """Equal-probability scanning with the flat template ``t = sqrt(t_r)``."""
        w = len(indices)
        if w == 0:
            return cls((), np.zeros(0), np.zeros(0), 0.0)
        return cls(tuple(indices), np.full(w, np.sqrt(t_r)), np.full(w, 1.0 / w), t_r)

    @classmethod
    def none(cls) -> "SensingSpec":
        return cls.uniform((), 0.0)


def draw_sensing_symbol(rng: np.random.Generator, spec: SensingSpec, size=None) -> np.ndarray:
    """One-hot sensing vector(s); beam ``i`` fires with probability ``d[i]``."""
    n = 1 if size is None else size
    out = np.zeros((n, spec.w))
    if spec.w:
        idx = rng.choice(spec.w, size=n, p=spec.d)
        out[np.arange(n), idx] = 1.0
    return out[0] if size is None else out


def demodulate_ml(x_tilde, cb: ImCodebook, effective=None) -> np.ndarray:
    """Nearest-candidate detection over all 2**eta beam vectors.

    ``effective`` is the K x K matrix the candidates pass through before
    comparison (identity when omitted).  Accepts a single vector or a batch
    along the first axis.  Ties go to the smallest bit label.
    """
    x = np.atleast_2d(np.asarray(x_tilde, dtype=complex))
    cands = cb.candidates if effective is None else cb.candidates @ np.asarray(effective).T
    dist = (-2.0 * (x @ cands.conj().T).real
            + np.sum(np.abs(cands) ** 2, axis=1)[None, :])
    best = np.argmin(dist, axis=1)
    bits = int_to_bits(best, cb.eta)
    return bits[0] if np.ndim(x_tilde) == 1 else bits


def count_bit_errors(sent, detected) -> int:
    sent = np.asarray(sent)
    detected = np.asarray(detected)
    if sent.shape != detected.shape:
        raise ValueError(f"shape mismatch {sent.shape} vs {detected.shape}")
    return int(np.count_nonzero(sent != detected))
