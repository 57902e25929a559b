"""Array geometry, steering vectors, DFT codebooks and Saleh-Valenzuela channels.

Codeword indices are 1-based throughout the package (``f(1)`` ... ``f(N)``),
so that sensing directions can be written the way they are usually quoted,
e.g. ``(11, 12, 13)`` for a 32-element array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArrayGeometry",
    "PathParams",
    "ChannelRealization",
    "Codebook",
    "steering_vector",
    "grid_sine",
    "grid_angle",
    "dft_codebook",
    "assemble_channel",
    "sample_channel",
    "beamspace_matrix",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """Half-wavelength ULAs at both link ends."""

    n_t: int
    n_r: int

    def __post_init__(self):
        if self.n_t < 1 or self.n_r < 1:
            raise ValueError(f"antenna counts must be positive, got {self.n_t}, {self.n_r}")


@dataclass(frozen=True)
class PathParams:
    gain: complex
    aod: float
    aoa: float

    def __post_init__(self):
        for name in ("aod", "aoa"):
            ang = getattr(self, name)
            if not (-np.pi / 2 <= ang < np.pi / 2):
                raise ValueError(f"{name}={ang} outside [-pi/2, pi/2)")


@dataclass(frozen=True)
class ChannelRealization:
    """Narrowband multipath channel ``H`` (n_r x n_t) and the paths that built it.

    For on-grid channels ``cells`` holds the 1-based ``(rx, tx)`` codeword
    index of every path; it is empty otherwise.
    """

    matrix: np.ndarray
    paths: tuple[PathParams, ...]
    on_grid: bool = False
    cells: tuple[tuple[int, int], ...] = field(default=())

    @property
    def n_paths(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class Codebook:
    """DFT codebook stored column-wise: ``matrix[:, i - 1]`` is ``f(i)``."""

    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[1]

    @property
    def codewords(self) -> list[np.ndarray]:
        return [self.matrix[:, i] for i in range(self.size)]

    def codeword(self, index: int) -> np.ndarray:
        if not 1 <= index <= self.size:
            raise IndexError(f"codeword index {index} outside [1, {self.size}]")
        return self.matrix[:, index - 1]

    def columns(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        if idx.size and (idx.min() < 1 or idx.max() > self.size):
            raise IndexError(f"codeword indices {indices} outside [1, {self.size}]")
        return self.matrix[:, idx - 1]


def steering_vector(theta, n: int) -> np.ndarray:
    """Unit-norm ULA response; element ``m`` is ``exp(-j*pi*m*sin(theta))/sqrt(n)``.

    ``theta`` may be an array, in which case the result has shape
    ``(n, len(theta))`` with one steering vector per column.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    theta = np.asarray(theta, dtype=float)
    m = np.arange(n)
    if theta.ndim == 0:
        return np.exp(-1j * np.pi * m * np.sin(theta)) / np.sqrt(n)
    return np.exp(-1j * np.pi * np.outer(m, np.sin(theta))) / np.sqrt(n)


def grid_sine(index, n: int):
    """Direction sine at which ``steering_vector`` coincides with ``f(index)``.

    ``f(i)`` has phase ramp ``+2*pi*(i-1)/n`` while the steering vector ramps
    by ``-pi*sin(theta)``, so ``sin(theta) = -2(i-1)/n`` wrapped into [-1, 1).
    """
    s = -2.0 * (np.asarray(index) - 1) / n
    return np.where(s < -1.0, s + 2.0, s)


def grid_angle(index, n: int):
    return np.arcsin(grid_sine(index, n))


def dft_codebook(n: int) -> Codebook:
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n)
    return Codebook(np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n))


def assemble_channel(geom: ArrayGeometry, paths) -> np.ndarray:
    """H = sqrt(n_t n_r / P) * sum_i alpha_i a_r(theta_i) a_t(phi_i)^H."""
    paths = list(paths)
    if not paths:
        raise ValueError("at least one path is required")
    gains = np.array([pp.gain for pp in paths], dtype=complex)
    a_r = steering_vector(np.array([pp.aoa for pp in paths]), geom.n_r)
    a_t = steering_vector(np.array([pp.aod for pp in paths]), geom.n_t)
    scale = np.sqrt(geom.n_t * geom.n_r / len(paths))
    return scale * (a_r * gains) @ a_t.conj().T


def sample_channel(rng: np.random.Generator, geom: ArrayGeometry, p: int,
                   on_grid: bool = False) -> ChannelRealization:
    """Draw a P-path channel with CN(0, 1) gains.

    Off-grid angles are uniform on [-pi/2, pi/2).  On-grid channels put every
    path on its own beamspace cell, drawn uniformly without replacement from
    the ``n_r x n_t`` grid of DFT directions.
    """
    if p < 1:
        raise ValueError("path count must be >= 1")
    gains = (rng.standard_normal(p) + 1j * rng.standard_normal(p)) / np.sqrt(2)
    cells: tuple[tuple[int, int], ...] = ()
    if on_grid:
        n_cells = geom.n_t * geom.n_r
        if p > n_cells:
            raise ValueError(f"cannot place {p} paths on {n_cells} distinct grid cells")
        flat = rng.choice(n_cells, size=p, replace=False)
        rx_idx = flat // geom.n_t + 1
        tx_idx = flat % geom.n_t + 1
        aoa = grid_angle(rx_idx, geom.n_r)
        aod = grid_angle(tx_idx, geom.n_t)
        cells = tuple((int(r), int(t)) for r, t in zip(rx_idx, tx_idx))
    else:
        aoa = rng.uniform(-np.pi / 2, np.pi / 2, p)
        aod = rng.uniform(-np.pi / 2, np.pi / 2, p)
    paths = tuple(PathParams(complex(g), float(d), float(a))
                  for g, d, a in zip(gains, aod, aoa))
    return ChannelRealization(assemble_channel(geom, paths), paths, on_grid, cells)


def beamspace_matrix(h: np.ndarray, tx: Codebook, rx: Codebook) -> np.ndarray:
    """Entry ``[m-1, n-1]`` is ``f_r(m)^H H f_t(n)``."""
    return rx.matrix.conj().T @ h @ tx.matrix
