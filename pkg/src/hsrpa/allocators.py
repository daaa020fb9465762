"""Average-power-constrained transmit schedules for one cell pass.

Five schemes share the same contract, a budget of ``avg_power * T`` joules of
transmit energy spread over the pass:

* ``constant``: hold the average power throughout.
* ``inversion``: scale power with the noise floor so the rate stays flat.
* ``waterfilling``: fill power up to a level over the noise floor, which
  maximizes the total delivered service and may stop transmitting early.
* ``pf_near_optimal``: closed-form approximation of the log-utility
  (proportionally fair) optimum, with the multiplier fixed in closed form.
* ``pf_epsilon_optimal``: the same stationary form with the multiplier
  refined by an adaptive search until the budget is met within tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .channel import Scenario, noise_power
from .numerics import (
    DEFAULT_INTERVALS,
    QuadratureGrid,
    find_root_monotone,
    integrate,
    lambert_w0,
)

SCHEMES = (
    "constant",
    "inversion",
    "waterfilling",
    "pf_near_optimal",
    "pf_epsilon_optimal",
)

DEFAULT_GRID_POINTS = 2048

# noise-density search bracket for calibration, W/Hz
N0_BRACKET = (1e-25, 1e-5)


class CalibrationError(RuntimeError):
    """The requested cutoff cannot be reached inside the noise search bracket."""


@dataclass
class PowerProfile:
    """A sampled transmit schedule P(tau) on [0, T].

    ``power_fn`` is the scheme's closed-form evaluator and is preferred over
    interpolation whenever present, so quadratures over the profile see the
    exact schedule rather than a polyline through the samples.
    """

    scheme: str
    times: np.ndarray  # s, strictly increasing, first sample 0, last sample T
    powers: np.ndarray  # W, one per sample, nonnegative
    metadata: dict = field(default_factory=dict)
    power_fn: Callable | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.powers = np.asarray(self.powers, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2 or np.any(np.diff(self.times) <= 0.0):
            raise ValueError("profile times must be strictly increasing")
        if self.powers.shape != self.times.shape:
            raise ValueError("powers and times must have matching shapes")
        if np.any(self.powers < 0.0):
            raise ValueError("profile powers must be nonnegative")

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def power_at(self, tau):
        """Schedule value at arbitrary times (closed form when available)."""
        if self.power_fn is not None:
            p = np.asarray(self.power_fn(np.asarray(tau, dtype=float)), dtype=float)
        else:
            p = np.interp(tau, self.times, self.powers)
        return float(p) if np.ndim(tau) == 0 else p


@dataclass(frozen=True)
class SolverSettings:
    """Knobs for the multiplier search and the numerical resolutions."""

    lambda_step_init: float = 0.01  # W, initial step applied to 1/lambda
    power_ratio_tol: float = 1e-3  # exit threshold on |total / budget - 1|
    max_iterations: int = 10_000
    grid_points: int = DEFAULT_GRID_POINTS  # profile sample count
    root_tol: float | None = None  # s, cutoff bisection width; None -> 1e-10 * T
    intervals: int = DEFAULT_INTERVALS  # Simpson panels for power integrals

    def __post_init__(self):
        if not self.lambda_step_init > 0.0:
            raise ValueError("lambda_step_init must be positive")
        if not 0.0 < self.power_ratio_tol < 1.0:
            raise ValueError("power_ratio_tol must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.root_tol is not None and not self.root_tol > 0.0:
            raise ValueError("root_tol must be positive when given")
        if self.intervals < 2 or self.intervals % 2 != 0:
            raise ValueError("intervals must be even and >= 2")


class SolveStep(NamedTuple):
    iteration: int
    lam: float  # 1/W
    power_ratio: float  # budget error at this iterate


@dataclass(frozen=True)
class SolveReport:
    """Outcome of the multiplier search, including its full trajectory."""

    lambda_final: float  # 1/W
    iterations: int
    final_power_ratio: float
    converged: bool
    trajectory: tuple[SolveStep, ...]

    @property
    def lambda_trajectory(self) -> list[tuple[int, float]]:
        return [(step.iteration, step.lam) for step in self.trajectory]


class LambdaPower(NamedTuple):
    """Total scheduled energy at a fixed multiplier, noting whether the
    nonnegativity clip engaged anywhere."""

    total: float  # W * s
    clamped: bool


def _profile_times(s: Scenario, grid_points: int) -> np.ndarray:
    return np.linspace(0.0, s.traversal_time, grid_points)


def mean_power(profile: PowerProfile, intervals: int = DEFAULT_INTERVALS) -> float:
    """Time-averaged power of a profile, splitting at a cutoff kink if present."""
    horizon = profile.duration
    cutoff = profile.metadata.get("cutoff")
    upper = horizon if cutoff is None else min(cutoff, horizon)
    if upper <= 0.0:
        return 0.0
    total = integrate(profile.power_at, QuadratureGrid(0.0, upper, intervals))
    return total / horizon  # the schedule is identically zero past the cutoff


def constant_pa(s: Scenario, grid_points: int = DEFAULT_GRID_POINTS) -> PowerProfile:
    """Flat schedule: P(tau) = avg_power at every instant."""
    times = _profile_times(s, grid_points)

    def fn(tau):
        return np.full_like(np.asarray(tau, dtype=float), s.avg_power)

    return PowerProfile("constant", times, fn(times), {}, fn)


def inversion_pa(
    s: Scenario,
    grid_points: int = DEFAULT_GRID_POINTS,
    intervals: int = DEFAULT_INTERVALS,
) -> PowerProfile:
    """Channel inversion: P(tau) = k0 * N(tau), so the rate is the same everywhere.

    The gain k0 = avg_power * T / integral(N) spends the whole budget; the
    resulting rate is W * ln(1 + k0) independent of tau.
    """
    horizon = s.traversal_time
    total_noise = integrate(
        lambda t: noise_power(s, t), QuadratureGrid(0.0, horizon, intervals)
    )
    k0 = s.avg_power * horizon / total_noise

    def fn(tau):
        return k0 * noise_power(s, tau)

    times = _profile_times(s, grid_points)
    return PowerProfile("inversion", times, fn(times), {"k0": k0}, fn)


def _noise_integral(s: Scenario, t: float, intervals: int) -> float:
    if t <= 0.0:
        return 0.0
    return integrate(lambda x: noise_power(s, x), QuadratureGrid(0.0, t, intervals))


def _water_level(s: Scenario, intervals: int, root_tol: float) -> tuple[float, float]:
    """Water level and cutoff instant for the service-maximizing schedule.

    If the noise rise over the pass exceeds what the budget can fill, the
    schedule stops early at the cutoff t1 solving
    ``t1 * N(t1) - integral_0^t1 N = avg_power * T`` (the left side is
    strictly increasing in t1 for a rising noise floor). Otherwise the whole
    pass is served and the level is avg_power plus the mean noise.
    """
    horizon = s.traversal_time
    budget = s.avg_power * horizon
    full_noise = _noise_integral(s, horizon, intervals)
    edge_noise = noise_power(s, horizon)
    if edge_noise * horizon - full_noise >= budget:

        def gap(t1: float) -> float:
            return noise_power(s, t1) * t1 - _noise_integral(s, t1, intervals) - budget

        cutoff = find_root_monotone(gap, 0.0, horizon, root_tol)
        return noise_power(s, cutoff), cutoff
    return s.avg_power + full_noise / horizon, horizon


def waterfilling_pa(
    s: Scenario,
    grid_points: int = DEFAULT_GRID_POINTS,
    intervals: int = DEFAULT_INTERVALS,
    root_tol: float | None = None,
) -> PowerProfile:
    """Service-maximizing schedule: fill power up to a level over the noise floor.

    Powers are max(level - N(tau), 0); metadata records the level and the
    cutoff instant, and the sample grid always contains the cutoff so the kink
    sits on a grid point.
    """
    tol = root_tol if root_tol is not None else 1e-10 * s.traversal_time
    level, cutoff = _water_level(s, intervals, tol)

    def fn(tau):
        return np.maximum(level - noise_power(s, tau), 0.0)

    times = _profile_times(s, grid_points)
    if cutoff < s.traversal_time:
        times = np.unique(np.concatenate([times, [cutoff]]))
    meta = {"water_level": level, "cutoff": cutoff}
    return PowerProfile("waterfilling", times, fn(times), meta, fn)


def _inverse_multiplier_apx(s: Scenario) -> float:
    """Closed-form 1/lambda that pins the stationary schedule to the budget at
    the cell edge, i.e. makes P(T) = avg_power exactly."""
    edge_noise = noise_power(s, s.traversal_time)
    return (s.avg_power + edge_noise) * math.log1p(s.avg_power / edge_noise)


def _stationary_power(s: Scenario, inv_lambda: float, tau):
    """Zero of the log-utility Lagrangian at the given multiplier, clipped at 0.

    The clip is defensive only: for any positive multiplier the stationary
    power is strictly positive (the log utility walls off zero rate).
    """
    n = noise_power(s, tau)
    return np.maximum(inv_lambda / lambert_w0(inv_lambda / n) - n, 0.0)


def pf_near_optimal_pa(s: Scenario, grid_points: int = DEFAULT_GRID_POINTS) -> PowerProfile:
    """Closed-form proportionally fair schedule with the edge-matched multiplier.

    By construction P(T) = avg_power exactly; elsewhere the schedule sits
    below the budget (it is nondecreasing in tau), so its mean power falls
    short of avg_power. The iterative search corrects that shortfall.
    """
    inv = _inverse_multiplier_apx(s)
    times = _profile_times(s, grid_points)

    def fn(tau):
        return _stationary_power(s, inv, tau)

    meta = {"lambda": 1.0 / inv, "inv_lambda": inv}
    return PowerProfile("pf_near_optimal", times, fn(times), meta, fn)


def total_power_for_lambda(
    s: Scenario, lam: float, intervals: int = DEFAULT_INTERVALS
) -> LambdaPower:
    """Scheduled energy of the stationary schedule at multiplier ``lam``.

    Strictly decreasing in ``lam``. Negative stationary values (which cannot
    occur for positive multipliers, but are guarded against anyway) are
    clipped at zero and flagged in the result.
    """
    if not lam > 0.0:
        raise ValueError(f"multiplier must be positive, got {lam}")
    inv = 1.0 / lam
    grid = QuadratureGrid(0.0, s.traversal_time, intervals)
    x = grid.nodes
    n = noise_power(s, x)
    raw = inv / lambert_w0(inv / n) - n
    clamped = bool(np.any(raw < 0.0))
    y = np.maximum(raw, 0.0)
    h = s.traversal_time / intervals
    total = h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2]))
    return LambdaPower(float(total), clamped)


def pf_epsilon_optimal_pa(
    s: Scenario, settings: SolverSettings | None = None
) -> tuple[PowerProfile, SolveReport]:
    """Refine the proportionally fair multiplier until the budget is met.

    Starting from the closed-form multiplier, each iteration steps 1/lambda
    against the sign of the budget error, doubles the step while the error
    keeps its sign and divides it by 7 after a crossing. The search never
    raises on non-convergence; the report carries ``converged`` and the full
    (iteration, lambda, error) trajectory, and stepping is damped whenever a
    move would drive 1/lambda nonpositive.
    """
    settings = settings or SolverSettings()
    budget = s.avg_power * s.traversal_time
    inv = _inverse_multiplier_apx(s)
    step = settings.lambda_step_init

    total = total_power_for_lambda(s, 1.0 / inv, settings.intervals).total
    ratio = total / budget - 1.0
    steps = [SolveStep(0, 1.0 / inv, ratio)]
    iterations = 0

    while abs(ratio) > settings.power_ratio_tol and iterations < settings.max_iterations:
        sign = 1.0 if ratio >= 0.0 else -1.0
        trial = inv - sign * step
        iterations += 1
        if trial <= 0.0:
            # keep the multiplier positive: retry the move with half the step
            step *= 0.5
            steps.append(SolveStep(iterations, 1.0 / inv, ratio))
            continue
        inv = trial
        total = total_power_for_lambda(s, 1.0 / inv, settings.intervals).total
        new_ratio = total / budget - 1.0
        new_sign = 1.0 if new_ratio >= 0.0 else -1.0
        step = step * 2.0 if new_sign * sign > 0.0 else step / 7.0
        ratio = new_ratio
        steps.append(SolveStep(iterations, 1.0 / inv, ratio))

    converged = abs(ratio) <= settings.power_ratio_tol
    inv_final = inv
    times = _profile_times(s, settings.grid_points)

    def fn(tau):
        return _stationary_power(s, inv_final, tau)

    meta = {"lambda": 1.0 / inv_final, "inv_lambda": inv_final}
    profile = PowerProfile("pf_epsilon_optimal", times, fn(times), meta, fn)
    report = SolveReport(1.0 / inv_final, iterations, ratio, converged, tuple(steps))
    return profile, report


def waterfilling_cutoff(
    s: Scenario, intervals: int = DEFAULT_INTERVALS, root_tol: float | None = None
) -> float:
    """Cutoff instant of the service-maximizing schedule (T when it never stops)."""
    tol = root_tol if root_tol is not None else 1e-10 * s.traversal_time
    return _water_level(s, intervals, tol)[1]


def calibrate_noise(
    s: Scenario,
    target_cutoff: float,
    intervals: int = DEFAULT_INTERVALS,
    root_tol: float | None = None,
    max_iter: int = 200,
) -> float:
    """Noise density that makes the water-filling cutoff land on ``target_cutoff``.

    The scenario's own noise_psd is ignored; only the geometry, bandwidth,
    pathloss exponent and power budget matter. A larger noise density steepens
    the noise floor and pulls the cutoff earlier, so the cutoff is strictly
    decreasing in the density and a log-scale bisection over N0_BRACKET pins
    it down to ``root_tol`` seconds on the cutoff.
    """
    horizon = s.traversal_time
    if not 0.0 < target_cutoff < horizon:
        raise ValueError(
            f"target_cutoff must lie strictly inside (0, {horizon}), got {target_cutoff}"
        )
    tol = root_tol if root_tol is not None else 1e-10 * horizon

    def cutoff_at(n0: float) -> float:
        return waterfilling_cutoff(replace(s, noise_psd=n0), intervals, tol / 8.0)

    lo, hi = N0_BRACKET
    t_lo = cutoff_at(lo)
    t_hi = cutoff_at(hi)
    if not (t_hi <= target_cutoff <= t_lo):
        raise CalibrationError(
            f"target cutoff {target_cutoff} s is outside the achievable range: "
            f"{t_hi} s at noise_psd={hi} W/Hz up to {t_lo} s at noise_psd={lo} W/Hz"
        )
    a, b = math.log10(lo), math.log10(hi)
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        t_m = cutoff_at(10.0**m)
        if abs(t_m - target_cutoff) <= tol:
            return 10.0**m
        if t_m > target_cutoff:
            a = m  # noise too small, cutoff too late
        else:
            b = m
    raise CalibrationError(
        f"calibration did not reach the target within {max_iter} bisections "
        f"(last cutoff {t_m} s for target {target_cutoff} s)"
    )
