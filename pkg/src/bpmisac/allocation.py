"""Digital-part power allocation by alternating minimization.

Each outer iteration solves two separable QCQPs exactly (closed form in the
Lagrange multipliers, multipliers found by bisection) and then refreshes the
LMMSE combiner:

1. sensing amplitudes ``b``: min sum_i d_i (b_i - t_i)^2
   s.t. c0 + sum_i g_i b_i^2 <= gamma and sum_i d_i b_i^2 <= T_R
2. communication amplitudes ``p``: min q ||A diag(p) - I||_F^2 s.t. ||p||^2 <= K
3. ``W_BB`` from the LMMSE formula.

Steps 2 and 3 can only lower the communication MSE, so the ``b`` of one
iteration stays feasible for the next and the objective cannot increase.
This is checked at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beamspace import steering_vector, grid_angle
from .errors import InfeasibleAllocationError, NonMonotoneObjectiveError
from .modem import ImConfig, SensingSpec
from .precoder import (EquivalentChannels, LinkNoise, comm_mse, lmmse_combiner,
                       mse_threshold, threshold_combiner)

__all__ = [
    "SolverOptions",
    "AllocationResult",
    "Beampattern",
    "beampattern",
    "beampattern_mse",
    "b_step_coefficients",
    "solve_b_step",
    "solve_p_step",
    "optimize_digital",
    "unoptimized_allocation",
]

MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class SolverOptions:
    convergence_tol: float = 1e-3
    max_iterations: int = 200
    kkt_tol: float = 1e-8
    bisection_tol: float = 1e-10

    def __post_init__(self):
        if min(self.convergence_tol, self.kkt_tol, self.bisection_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class AllocationResult:
    b: np.ndarray
    p: np.ndarray
    w_bb: np.ndarray
    objective_trace: list[float]
    iterations: int
    converged: bool
    gamma: float = float("nan")
    chi: float = float("nan")
    flags: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")


@dataclass(frozen=True)
class Beampattern:
    v: np.ndarray


def beampattern(b, f_r: np.ndarray, spec: SensingSpec) -> Beampattern:
    """Gain toward each direction of interest, ``v_l = |b_l a(theta_l)^H F_R[:, l]|``.

    Directions of interest are the grid angles of the sensing codewords.
    """
    b = np.asarray(b, dtype=float)
    if spec.w == 0:
        return Beampattern(np.zeros(0))
    n_t = f_r.shape[0]
    a = steering_vector(grid_angle(np.asarray(spec.codeword_indices), n_t), n_t)
    resp = np.einsum("nl,nl->l", a.conj(), f_r)
    return Beampattern(np.abs(b * resp))


def beampattern_mse(v, spec: SensingSpec) -> float:
    v = v.v if isinstance(v, Beampattern) else np.asarray(v, dtype=float)
    if v.shape != spec.t.shape:
        raise ValueError("beampattern length does not match the template")
    return float(spec.d @ (v - spec.t) ** 2)


def b_step_coefficients(eq: EquivalentChannels, w_bb, p, spec: SensingSpec,
                        noise: LinkNoise, config: ImConfig):
    """Split the communication MSE as ``c0 + sum_i g_i b_i^2``."""
    c0 = float(comm_mse(eq, w_bb, p, np.zeros(eq.w), spec, noise, config))
    g = spec.d * np.sum(np.abs(w_bb @ eq.h_r) ** 2, axis=0)
    return c0, g


def _bisect_decreasing(fun, hi0, tol):
    """Smallest x >= 0 (to ``tol``) with fun(x) <= 0, for nonincreasing ``fun``."""
    if fun(0.0) <= 0.0:
        return 0.0
    hi = hi0
    while fun(hi) > 0.0:
        hi *= 2.0
        if hi > 1e300:
            return hi
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if fun(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def _b_of(lam, nu, t, d, g):
    den = d * (1.0 + nu) + lam * g
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(den > 0, d * t / den, 0.0)
    return b


def solve_b_step(eq: EquivalentChannels, w_bb, p, spec: SensingSpec, noise: LinkNoise,
                 config: ImConfig, gamma: float, opts: SolverOptions = SolverOptions(),
                 return_multipliers: bool = False):
    """Closest sensing amplitudes to ``t`` under the MSE budget and the sensing power cap.

    The KKT point is ``b_i = d_i t_i / (d_i (1 + nu) + lam g_i)``; ``lam`` is
    found by outer bisection on the MSE constraint and ``nu`` by inner
    bisection on the power constraint.
    """
    if spec.w == 0:
        out = np.zeros(0)
        return (out, 0.0, 0.0) if return_multipliers else out
    t, d = spec.t, spec.d
    c0, g = b_step_coefficients(eq, w_bb, p, spec, noise, config)
    budget = gamma - c0
    if budget < -opts.kkt_tol:
        raise InfeasibleAllocationError(
            f"MSE budget {gamma:.6g} below the sensing-free residue {c0:.6g}")
    budget = max(budget, 0.0)

    def nu_for(lam):
        return _bisect_decreasing(
            lambda nu: float(d @ _b_of(lam, nu, t, d, g) ** 2) - spec.t_r,
            1.0, opts.bisection_tol)

    def mse_slack(lam):
        return float(g @ _b_of(lam, nu_for(lam), t, d, g) ** 2) - budget

    gmax = float(g.max()) if g.size else 0.0
    lam = _bisect_decreasing(mse_slack, max(1.0, 1.0 / max(gmax, 1e-300)) * d.max(),
                             opts.bisection_tol)
    nu = nu_for(lam)
    b = _b_of(lam, nu, t, d, g)
    return (b, lam, nu) if return_multipliers else b


def solve_p_step(eq: EquivalentChannels, w_bb, config: ImConfig,
                 opts: SolverOptions = SolverOptions(), return_multiplier: bool = False):
    """Communication amplitudes minimizing ``||W H_C diag(p) - I||^2`` with ``||p||^2 <= K``."""
    a = w_bb @ eq.h_c
    num = np.real(np.diag(a))
    col2 = np.sum(np.abs(a) ** 2, axis=0)
    k = config.k

    def p_of(lam):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(col2 + lam > 0, num / (col2 + lam), 0.0)

    lam = _bisect_decreasing(lambda lam: float(p_of(lam) @ p_of(lam)) - k,
                             max(1.0, float(col2.max())), opts.bisection_tol)
    p = p_of(lam)
    return (p, lam) if return_multiplier else p


def optimize_digital(eq: EquivalentChannels, spec: SensingSpec, noise: LinkNoise,
                     config: ImConfig, mu: float, opts: SolverOptions = SolverOptions(),
                     b_step=solve_b_step) -> AllocationResult:
    """Alternate b-, p- and combiner updates until the objective stalls.

    Parameters
    ----------
    eq : EquivalentChannels
        Fixed analog part.
    mu : float
        Weight in [0, 1] of the sensing-interference term in the MSE budget.
    b_step : callable
        Replacement for :func:`solve_b_step`, used for fault injection.

    Raises
    ------
    InfeasibleAllocationError
        If a b-step has no feasible point.
    NonMonotoneObjectiveError
        If an iteration raises the objective by more than 1e-9.
    """
    gamma = mse_threshold(eq, spec, noise, config, mu)
    b = spec.t.copy()
    p = np.ones(config.k)
    w_bb = threshold_combiner(eq, spec, noise, config)

    trace: list[float] = []
    converged = False
    it = 0
    for it in range(1, opts.max_iterations + 1):
        b = b_step(eq, w_bb, p, spec, noise, config, gamma, opts)
        obj = float(spec.d @ (b - spec.t) ** 2)
        if trace and obj > trace[-1] + MONOTONE_SLACK:
            raise NonMonotoneObjectiveError(
                f"objective rose from {trace[-1]:.12g} to {obj:.12g} at iteration {it}")
        prev = trace[-1] if trace else np.inf
        trace.append(obj)
        p = solve_p_step(eq, w_bb, config, opts)
        w_bb = lmmse_combiner(eq, p, b, spec, noise, config)
        if obj <= opts.kkt_tol or prev - obj < opts.convergence_tol:
            converged = True
            break

    chi = float(comm_mse(eq, w_bb, p, b, spec, noise, config))
    flags = {
        "mse_ok": chi <= gamma + 1e-6,
        "sensing_power_ok": float(spec.d @ b ** 2) <= spec.t_r + 1e-6,
        "comm_power_ok": float(p @ p) <= config.k + 1e-6,
    }
    return AllocationResult(b, p, w_bb, trace, it, converged, gamma, chi, flags)


def unoptimized_allocation(eq: EquivalentChannels, spec: SensingSpec, noise: LinkNoise,
                           config: ImConfig, mu: float) -> AllocationResult:
    """Baseline without digital optimization: ``p = 1`` and ``b = sqrt(mu) t``.

    With the reference combiner, scaling ``t`` by ``sqrt(mu)`` meets the MSE
    budget with equality, so this is the feasible point closest to ``t``
    along the template direction.
    """
    gamma = mse_threshold(eq, spec, noise, config, mu)
    b = np.sqrt(mu) * spec.t
    p = np.ones(config.k)
    w_bb = lmmse_combiner(eq, p, b, spec, noise, config)
    obj = float(spec.d @ (b - spec.t) ** 2)
    chi = float(comm_mse(eq, w_bb, p, b, spec, noise, config))
    return AllocationResult(b, p, w_bb, [obj], 0, True, gamma, chi,
                            {"mse_ok": chi <= gamma + 1e-6})
