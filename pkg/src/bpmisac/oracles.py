"""Slow, independent reference solvers used to cross-check the fast paths.

None of these reuse the multiplier formulas of :mod:`bpmisac.allocation` or
the candidate pruning of :func:`bpmisac.precoder.select_beams`.
"""

from __future__ import annotations

import itertools

import numpy as np

from .precoder import EquivalentChannels, comm_mse, threshold_combiner

__all__ = ["project_ellipsoid", "pg_b_step", "pg_p_step", "exhaustive_beam_search"]


def project_ellipsoid(y, a, r, tol=1e-15):
    """Euclidean projection of ``y`` onto ``{x : sum(a x^2) <= r}`` (``a >= 0``)."""
    y = np.asarray(y, dtype=float)
    if float(a @ y ** 2) <= r:
        return y.copy()
    if r <= 0:
        return np.where(a > 0, 0.0, y)
    lo, hi = 0.0, 1.0
    while float(a @ (y / (1 + hi * a)) ** 2) > r:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(a @ (y / (1 + mid * a)) ** 2) > r:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return y / (1 + hi * a)


def _dykstra(y, sets, iters=500):
    x = y.copy()
    incs = [np.zeros_like(y) for _ in sets]
    for _ in range(iters):
        x_old = x
        for j, (a, r) in enumerate(sets):
            z = project_ellipsoid(x + incs[j], a, r)
            incs[j] = x + incs[j] - z
            x = z
        if np.max(np.abs(x - x_old)) < 1e-15:
            break
    # Land exactly inside both sets.
    for a, r in sets:
        x = project_ellipsoid(x, a, r)
    return x


def pg_b_step(t, d, g, budget, t_r, iters=4000):
    """Accelerated projected gradient for the sensing-amplitude QCQP.

    min sum d (b - t)^2  s.t.  sum g b^2 <= budget,  sum d b^2 <= t_r.
    Returns ``(b, objective)``.
    """
    t, d, g = (np.asarray(v, dtype=float) for v in (t, d, g))
    sets = [(g, budget), (d, t_r)]
    step = 1.0 / (2.0 * d.max())
    x = _dykstra(np.zeros_like(t), sets)
    z, theta = x.copy(), 1.0
    for _ in range(iters):
        x_new = _dykstra(z - step * 2.0 * d * (z - t), sets)
        theta_new = 0.5 * (1 + np.sqrt(1 + 4 * theta ** 2))
        z = x_new + (theta - 1) / theta_new * (x_new - x)
        if np.max(np.abs(x_new - x)) < 1e-14:
            x = x_new
            break
        x, theta = x_new, theta_new
    return x, float(d @ (x - t) ** 2)


def pg_p_step(a, k, q=1.0, iters=20000):
    """Accelerated projected gradient on ``q ||A diag(p) - I||_F^2`` over ``||p||^2 <= k``.

    The gradient is formed from the matrix expression directly.
    Returns ``(p, objective)``.
    """
    a = np.asarray(a)
    eye = np.eye(a.shape[1])

    def f(p):
        return q * float(np.sum(np.abs(a * p - eye) ** 2))

    def grad(p):
        return 2 * q * np.real(np.diag(a.conj().T @ (a * p - eye)))

    def proj(p):
        nrm = np.linalg.norm(p)
        return p if nrm ** 2 <= k else p * np.sqrt(k) / nrm

    lip = 2 * q * np.linalg.norm(a, 2) ** 2
    x = np.zeros(a.shape[1])
    z, theta = x.copy(), 1.0
    for _ in range(iters):
        x_new = proj(z - grad(z) / lip)
        theta_new = 0.5 * (1 + np.sqrt(1 + 4 * theta ** 2))
        z = x_new + (theta - 1) / theta_new * (x_new - x)
        if np.max(np.abs(x_new - x)) < 1e-15:
            x = x_new
            break
        x, theta = x_new, theta_new
    return x, f(x)


def exhaustive_beam_search(h, tx, rx, spec, noise, config):
    """Min-MSE search over every K-tuple of admissible tx beams matched to rx beams.

    Enumerates tx subsets, rx subsets and all matchings between them.
    Returns ``(pairs, chi)`` with ``pairs`` as a frozenset of ``(tx, rx)``.
    The matching never changes ``chi``: reordering the receive beams permutes
    the rows of both equivalent channels, which the digital combiner undoes.
    Compare results by their tx and rx sets, not by ``pairs``.
    """
    hm = h.matrix if hasattr(h, "matrix") else np.asarray(h)
    k = config.k
    tx_allowed = [n for n in range(1, tx.size + 1) if n not in spec.codeword_indices]
    f_r = tx.columns(spec.codeword_indices)
    best, best_pairs = np.inf, None
    for txs in itertools.combinations(tx_allowed, k):
        hf = hm @ tx.columns(txs)
        hr = hm @ f_r
        for rxs in itertools.combinations(range(1, rx.size + 1), k):
            w_rf = rx.columns(rxs).conj().T
            base_c = w_rf @ hf
            h_r = w_rf @ hr
            for perm in itertools.permutations(range(k)):
                eq = EquivalentChannels(base_c[list(perm), :], h_r[list(perm), :])
                w0 = threshold_combiner(eq, spec, noise, config)
                chi = float(comm_mse(eq, w0, np.ones(k), spec.t, spec, noise, config))
                if chi < best:
                    best = chi
                    best_pairs = frozenset((txs[j], rxs[perm[j]]) for j in range(k))
    return best_pairs, best
