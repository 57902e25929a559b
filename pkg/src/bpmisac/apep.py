"""Effective-path combinatorics and the asymptotic pairwise error probability.

The counting model: P paths occupy distinct cells of the ``n_r x n_t``
beamspace grid.  Paths in the W sensing columns are lost (M_R of them) and
also knock out every receive row they sit in (M_B rows).  Paths left
outside both the sensing columns and the blocked rows are the effective
communication paths M_C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .modem import ImCodebook, ImConfig
from .precoder import LinkNoise

__all__ = [
    "GridParams",
    "PathCoverDistribution",
    "binom",
    "effective_path_dist",
    "mc_path_oracle",
    "total_variation",
    "beta_int",
    "conditional_pep",
    "pairwise_error_prob",
    "apep",
    "MAX_APEP_ETA",
]

MAX_APEP_ETA = 16


@dataclass(frozen=True)
class GridParams:
    n_t: int
    n_r: int
    w: int
    p: int

    def __post_init__(self):
        if not (0 <= self.w < self.n_t):
            raise ValueError(f"need 0 <= w < n_t, got w={self.w}, n_t={self.n_t}")
        if not (1 <= self.p <= self.n_t * self.n_r):
            raise ValueError(f"need 1 <= p <= n_t*n_r, got p={self.p}")


@dataclass(frozen=True)
class PathCoverDistribution:
    """pmf[c] = P(M_C = c) for c = 0..P, plus the intermediate tables.

    ``p_mr[r]`` is P(M_R = r); ``p_mb[r, b]`` is P(M_B = b | M_R = r).
    """

    grid: GridParams
    pmf: np.ndarray
    p_mr: np.ndarray
    p_mb: np.ndarray
    cover_index: str = "blocked"

    def p_mc(self, c: int, r: int, b: int) -> float:
        return _p_mc(self.grid, c, r, b, self.cover_index)

    def joint(self, c: int, r: int, b: int) -> float:
        """P(M_R = r, M_B = b, M_C = c)."""
        if r == 0:
            return float(self.p_mr[0]) if (b == 0 and c == self.grid.p) else 0.0
        return float(self.p_mr[r] * self.p_mb[r, b] * self.p_mc(c, r, b))

    def below(self, k: int) -> float:
        """P(M_C < k)."""
        return float(self.pmf[:max(k, 0)].sum())


def binom(n: int, k: int) -> int:
    """Binomial coefficient that is 0 for negative or out-of-range arguments."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _ratio(num: int, den: int) -> float:
    return 0.0 if num == 0 else num / den


def _p_mc(g: GridParams, c: int, r: int, b: int, cover_index: str) -> float:
    free_cols = g.n_t - g.w
    open_rows = g.n_r - (b if cover_index == "blocked" else r)
    return _ratio(binom(b * free_cols, g.p - r - c) * binom(open_rows * free_cols, c),
                  binom(g.n_r * free_cols, g.p - r))


@lru_cache(maxsize=None)
def _cover_tables(n_r: int, w: int, n_t: int, p: int):
    p_mr = np.array([_ratio(binom(n_r * (n_t - w), p - r) * binom(n_r * w, r),
                            binom(n_t * n_r, p)) for r in range(p + 1)])
    # Paths fall one by one into the n_r * w sensing cells; a new path opens a
    # fresh row with prob (n_r - b + 1) w / (n_r w - r + 1).
    p_mb = np.zeros((p + 1, p + 1))
    p_mb[0, 0] = 1.0
    for r in range(1, p + 1):
        cells_left = n_r * w - r + 1
        if cells_left <= 0:
            break
        for b in range(1, r + 1):
            new_row = p_mb[r - 1, b - 1] * max(n_r - b + 1, 0) * w / cells_left
            same_row = p_mb[r - 1, b] * max(b * w - r + 1, 0) / cells_left
            p_mb[r, b] = new_row + same_row
    return p_mr, p_mb


def effective_path_dist(g: GridParams, cover_index: str = "blocked") -> PathCoverDistribution:
    """Exact distribution of the number of effective communication paths.

    ``cover_index="printed"`` counts open rows as ``n_r - r`` instead of
    ``n_r - b``; the resulting "distribution" does not normalize and exists
    only as a negative control for the Monte Carlo comparison.
    """
    if cover_index not in ("blocked", "printed"):
        raise ValueError(f"unknown cover_index {cover_index!r}")
    if g.w == 0:
        pmf = np.zeros(g.p + 1)
        pmf[g.p] = 1.0
        p_mr = pmf[::-1].copy()
        p_mb = np.zeros((g.p + 1, g.p + 1))
        p_mb[0, 0] = 1.0
        return PathCoverDistribution(g, pmf, p_mr, p_mb, cover_index)
    p_mr, p_mb = _cover_tables(g.n_r, g.w, g.n_t, g.p)
    pmf = np.zeros(g.p + 1)
    pmf[g.p] = p_mr[0]
    for c in range(g.p):
        acc = 0.0
        for r in range(1, g.p - c + 1):
            for b in range(1, r + 1):
                if p_mr[r] and p_mb[r, b]:
                    acc += p_mr[r] * p_mb[r, b] * _p_mc(g, c, r, b, cover_index)
        pmf[c] = acc
    return PathCoverDistribution(g, pmf, p_mr.copy(), p_mb.copy(), cover_index)


def _sample_cells(rng: np.random.Generator, n_cells: int, p: int, trials: int) -> np.ndarray:
    """``trials`` rows of ``p`` distinct cell ids, uniform without replacement.

    Each draw is repeated until it avoids the ids already taken in its row,
    which makes it uniform over the unused ids.
    """
    picks = np.empty((trials, p), dtype=np.int64)
    for j in range(p):
        u = rng.integers(0, n_cells, size=trials)
        pending = np.arange(trials)
        while True:
            clash = np.zeros(pending.size, dtype=bool)
            for i in range(j):
                clash |= u[pending] == picks[pending, i]
            pending = pending[clash]
            if not pending.size:
                break
            u[pending] = rng.integers(0, n_cells, size=pending.size)
        picks[:, j] = u
    return picks


def mc_path_oracle(rng: np.random.Generator, g: GridParams, trials: int,
                   chunk: int = 250_000) -> np.ndarray:
    """Empirical pmf of M_C from direct placement of paths on the grid.

    Sensing beams are taken as the first ``w`` transmit columns; the grid is
    exchangeable so the choice of columns does not matter.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    counts = np.zeros(g.p + 1, dtype=np.int64)
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        cells = _sample_cells(rng, g.n_t * g.n_r, g.p, n)
        rows, cols = np.divmod(cells, g.n_t)
        in_sense = cols < g.w
        blocked = np.zeros((n, g.n_r), dtype=bool)
        ri, pi_ = np.nonzero(in_sense)
        blocked[ri, rows[ri, pi_]] = True
        row_blocked = np.take_along_axis(blocked, rows, axis=1)
        m_c = np.count_nonzero(~in_sense & ~row_blocked, axis=1)
        counts += np.bincount(m_c, minlength=g.p + 1)
        done += n
    return counts / trials


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def beta_int(x, y: int):
    """B(x, y) for integer y >= 1 as (y-1)! / (x (x+1) ... (x+y-1))."""
    if y < 1:
        raise ValueError("second Beta argument must be a positive integer")
    x = np.asarray(x, dtype=float)
    den = np.ones_like(x)
    for i in range(y):
        den = den * (x + i)
    return math.factorial(y - 1) / den


def conditional_pep(delta2, c: int, g: GridParams, noise: LinkNoise):
    """Pairwise error probability given ``c >= K`` effective paths.

    ``delta2`` holds ``|x_bar_i - x_hat_i|^2`` along its last axis (length K).
    Two exponential terms with weights 1/12 and 1/4 approximate the Q-function.
    """
    delta2 = np.asarray(delta2, dtype=float)
    k = delta2.shape[-1]
    if c < k:
        raise ValueError(f"need c >= K, got c={c}, K={k}")
    gain = g.n_t * g.n_r / (g.p * noise.sigma2)
    out = 0.0
    for weight, div in ((1.0 / 12.0, 4.0), (1.0 / 4.0, 3.0)):
        a = gain / div * delta2 + 1.0
        suffix = np.cumsum(a[..., ::-1], axis=-1)[..., ::-1]
        prod = np.prod(suffix[..., 1:], axis=-1)
        out = out + weight * beta_int(suffix[..., 0], c - k + 1) / prod
    return out


def pairwise_error_prob(x_bar, x_hat, g: GridParams, config: ImConfig, noise: LinkNoise,
                        dist: PathCoverDistribution | None = None):
    """P(x_bar -> x_hat) averaged over the effective-path distribution.

    Configurations with fewer than K effective paths contribute a uniform
    1/2**eta guess.  Broadcasts over leading axes of ``x_bar`` / ``x_hat``.
    """
    k = config.k
    if k > g.p:
        raise ValueError(f"K={k} exceeds the path count P={g.p}")
    dist = dist if dist is not None else effective_path_dist(g)
    delta2 = np.abs(np.asarray(x_bar) - np.asarray(x_hat)) ** 2
    total = dist.below(k) / 2.0 ** config.eta
    for c in range(k, g.p + 1):
        if dist.pmf[c] > 0:
            total = total + dist.pmf[c] * conditional_pep(delta2, c, g, noise)
    return np.clip(total, 0.0, 1.0)


def apep(g: GridParams, cb: ImCodebook, noise: LinkNoise, chunk: int = 256) -> float:
    """Union-bound bit error rate over all ordered candidate pairs."""
    eta = cb.eta
    if eta > MAX_APEP_ETA:
        raise ValueError(f"eta={eta} exceeds the tractable limit {MAX_APEP_ETA}")
    dist = effective_path_dist(g)
    cands = cb.candidates
    labels = np.arange(2 ** eta)
    total = 0.0
    for start in range(0, len(cands), chunk):
        xb = cands[start:start + chunk]
        pep = pairwise_error_prob(xb[:, None, :], cands[None, :, :], g, cb.config, noise, dist)
        diff = labels[start:start + chunk, None] ^ labels[None, :]
        errs = np.zeros(diff.shape, dtype=np.int64)
        for bit in range(eta):
            errs += (diff >> bit) & 1
        total += float(np.sum(pep * errs))
    return total / (eta * 2.0 ** eta)
