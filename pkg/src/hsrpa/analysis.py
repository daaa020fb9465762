"""Fairness and efficiency metrics plus executable optimality checks.

The proportional-fairness test used throughout: a schedule p is
proportionally fair over the pass when every feasible competitor q satisfies
``integral (C_q - C_p) / C_p dtau <= 0``, which is equivalent to p maximizing
the log utility ``integral ln C dtau`` under the power budget. Both
functionals are implemented here, together with seeded random competitors and
an independent projected-gradient solver of the discretized problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocators import (
    SCHEMES,
    PowerProfile,
    SolverSettings,
    constant_pa,
    inversion_pa,
    mean_power,
    pf_epsilon_optimal_pa,
    pf_near_optimal_pa,
    waterfilling_pa,
)
from .channel import Scenario, capacity, channel_service, noise_power
from .numerics import DEFAULT_INTERVALS, QuadratureGrid, integrate

RANDOM_KNOTS = 16


@dataclass(frozen=True)
class SchemeMetrics:
    """One scheme's service, fairness and budget accuracy on a scenario."""

    scheme: str
    total_service: float  # nats over the whole pass
    pf_utility: float  # integral of ln(rate); -inf when the rate hits zero
    min_rate: float  # nats/s over the profile grid
    max_rate: float  # nats/s
    rate_cv: float  # stddev / mean of the sampled rate
    mean_power_error: float  # signed relative budget error
    converged: bool = True

    def __post_init__(self):
        if self.min_rate > self.max_rate:
            raise ValueError("min_rate cannot exceed max_rate")


def _simpson_nodes(horizon: float, intervals: int):
    grid = QuadratureGrid(0.0, horizon, intervals)
    weights = np.ones(intervals + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return grid.nodes, weights, horizon / intervals


def pf_utility(
    s: Scenario,
    profile: PowerProfile,
    intervals: int = DEFAULT_INTERVALS,
    rate_scale: float = 1.0,
) -> float:
    """Log-utility of the rate path; -inf as soon as the rate vanishes on the grid.

    ``rate_scale`` rescales the rate inside the logarithm (for unit changes);
    it shifts the utility by T * ln(rate_scale) and cannot change which
    schedule maximizes it.
    """
    x, w, h = _simpson_nodes(profile.duration, intervals)
    rates = capacity(s, profile.power_at(x), x)
    if np.min(rates) <= 0.0:
        return -math.inf
    return float(h / 3.0 * np.sum(w * np.log(rate_scale * rates)))


def pf_criterion_gap(
    s: Scenario,
    p: PowerProfile,
    q: PowerProfile,
    intervals: int = DEFAULT_INTERVALS,
) -> float:
    """Relative-rate advantage of q over p, integrated over the pass.

    Nonpositive (up to the solver's budget slack) for every feasible q exactly
    when p is proportionally fair. The reference p must keep a strictly
    positive rate; a vanishing reference rate leaves the ratio undefined.
    """
    x, w, h = _simpson_nodes(p.duration, intervals)
    rate_p = capacity(s, p.power_at(x), x)
    if np.min(rate_p) <= 0.0:
        tau_zero = float(x[np.argmin(rate_p)])
        raise ValueError(
            f"reference profile has zero rate at tau={tau_zero}; the criterion "
            "ratio is undefined there"
        )
    rate_q = capacity(s, q.power_at(x), x)
    return float(h / 3.0 * np.sum(w * (rate_q - rate_p) / rate_p))


def random_feasible_profile(
    s: Scenario,
    seed: int,
    knots: int = RANDOM_KNOTS,
    grid_points: int = 2048,
    intervals: int = DEFAULT_INTERVALS,
) -> PowerProfile:
    """Deterministic random competitor meeting the power budget.

    Piecewise-linear over evenly spaced knots with uniform random values,
    rescaled so the Simpson mean power equals the budget to within rounding.
    The same seed always reproduces the same profile.
    """
    rng = np.random.default_rng(seed)
    horizon = s.traversal_time
    knot_t = np.linspace(0.0, horizon, knots)
    knot_v = rng.uniform(0.0, 1.0, knots)

    raw_total = integrate(
        lambda tau: np.interp(tau, knot_t, knot_v),
        QuadratureGrid(0.0, horizon, intervals),
    )
    if not raw_total > 0.0:
        raise ValueError(f"degenerate random draw for seed {seed}")
    scale = s.avg_power * horizon / raw_total

    def fn(tau):
        return scale * np.interp(np.asarray(tau, dtype=float), knot_t, knot_v)

    times = np.linspace(0.0, horizon, grid_points)
    return PowerProfile("random", times, fn(times), {"seed": float(seed)}, fn)


def scheme_metrics(
    s: Scenario,
    profile: PowerProfile,
    intervals: int = DEFAULT_INTERVALS,
    converged: bool = True,
) -> SchemeMetrics:
    """Compute the metrics row for one profile on its own sample grid."""
    rates = capacity(s, profile.powers, profile.times)
    rate_mean = float(np.mean(rates))
    cv = float(np.std(rates) / rate_mean) if rate_mean > 0.0 else math.inf
    return SchemeMetrics(
        scheme=profile.scheme,
        total_service=channel_service(s, profile, profile.duration, intervals),
        pf_utility=pf_utility(s, profile, intervals),
        min_rate=float(np.min(rates)),
        max_rate=float(np.max(rates)),
        rate_cv=cv,
        mean_power_error=mean_power(profile, intervals) / s.avg_power - 1.0,
        converged=converged,
    )


def build_profile(s: Scenario, scheme: str, settings: SolverSettings | None = None):
    """Run one named scheme; the second element is the solve report when the
    scheme has one, else None."""
    settings = settings or SolverSettings()
    if scheme == "constant":
        return constant_pa(s, settings.grid_points), None
    if scheme == "inversion":
        return inversion_pa(s, settings.grid_points, settings.intervals), None
    if scheme == "waterfilling":
        return (
            waterfilling_pa(s, settings.grid_points, settings.intervals, settings.root_tol),
            None,
        )
    if scheme == "pf_near_optimal":
        return pf_near_optimal_pa(s, settings.grid_points), None
    if scheme == "pf_epsilon_optimal":
        return pf_epsilon_optimal_pa(s, settings)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def compare_schemes(
    s: Scenario,
    settings: SolverSettings | None = None,
    intervals: int = DEFAULT_INTERVALS,
) -> list[SchemeMetrics]:
    """Metrics for all five schemes, one row each, in canonical order.

    A non-converged multiplier search shows up as a flagged row rather than an
    exception.
    """
    settings = settings or SolverSettings()
    rows = []
    for scheme in SCHEMES:
        profile, report = build_profile(s, scheme, settings)
        converged = True if report is None else bool(report.converged)
        rows.append(scheme_metrics(s, profile, intervals, converged))
    return rows


def grid_log_utility(s: Scenario, times, powers, dt: float, rate_scale: float = 1.0) -> float:
    """Discrete log utility sum(ln(rate)) * dt on an arbitrary sample grid."""
    rates = capacity(s, np.asarray(powers, dtype=float), np.asarray(times, dtype=float))
    if np.min(rates) <= 0.0:
        return -math.inf
    return float(np.sum(np.log(rate_scale * rates)) * dt)


def pgd_allocation(
    s: Scenario,
    n_points: int = 64,
    rate_scale: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 100_000,
):
    """Maximize the discretized log utility under the power budget by
    projected gradient ascent.

    Independent of the closed-form construction: only the objective, its
    gradient and a scaled-simplex projection appear. The grid is the midpoint
    discretization of [0, T] into ``n_points`` cells. Steps use a
    Barzilai-Borwein estimate safeguarded by Armijo backtracking (which also
    rejects iterates that fall onto the zero-rate wall). Convergence is
    declared when the unit-step projected-gradient residual drops below
    ``tol``.

    Returns ``(times, powers, info)`` where info records iterations, the final
    residual, the objective and a convergence flag.
    """
    horizon = s.traversal_time
    dt = horizon / n_points
    times = (np.arange(n_points) + 0.5) * dt
    noise = noise_power(s, times)
    budget = s.avg_power * horizon
    bandwidth = s.bandwidth
    target_sum = budget / dt

    def project(v: np.ndarray) -> np.ndarray:
        # Euclidean projection onto {p >= 0, sum(p) = target_sum}
        u = np.sort(v)[::-1]
        css = np.cumsum(u) - target_sum
        idx = np.arange(1, n_points + 1)
        rho = int(np.count_nonzero(u - css / idx > 0.0))
        theta = css[rho - 1] / rho
        return np.maximum(v - theta, 0.0)

    def value(p: np.ndarray) -> float:
        ln = np.log1p(p / noise)
        if np.any(ln <= 0.0):
            return -math.inf
        return float(np.sum(np.log(rate_scale * bandwidth * ln)) * dt)

    def gradient(p: np.ndarray) -> np.ndarray:
        return dt / (np.log1p(p / noise) * (p + noise))

    p = project(np.full(n_points, s.avg_power))
    g = gradient(p)
    step = 1.0 / float(np.max(np.abs(g)))
    residual = math.inf

    for it in range(max_iter):
        residual = float(np.linalg.norm(project(p + g) - p))
        if residual <= tol:
            info = {
                "iterations": it,
                "residual": residual,
                "objective": value(p),
                "converged": True,
            }
            return times, p, info
        trial = step
        cand = project(p + trial * g)
        while value(cand) < value(p) + 1e-4 * float(np.dot(g, cand - p)):
            trial *= 0.5
            if trial < 1e-18:
                break
            cand = project(p + trial * g)
        g_new = gradient(cand)
        ds = cand - p
        dy = g_new - g
        denom = -float(np.dot(ds, dy))
        step = float(np.dot(ds, ds)) / denom if denom > 0.0 else trial * 2.0
        step = min(max(step, 1e-14), 1e14)
        p, g = cand, g_new

    info = {
        "iterations": max_iter,
        "residual": residual,
        "objective": value(p),
        "converged": False,
    }
    return times, p, info
