"""Physical link model: geometry, effective noise, capacity and channel service.

A single base station sits at distance ``d0`` from a straight track; the train
passes the point of closest approach at time zero and leaves the cell after
``T = cell_radius / velocity`` seconds. The receiver-side noise grows with the
pathloss, so the effective noise floor N(tau) = W * N0 * d(tau)**alpha rises
as the train moves away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import DEFAULT_INTERVALS, QuadratureGrid, integrate

# relative slack on [0, T] domain checks, guards rounded endpoints
_DOMAIN_SLACK = 1e-9


@dataclass(frozen=True)
class Scenario:
    """Cell, train and radio parameters, all in SI units.

    Unit conversions (dBW, km/h, MHz) happen at the configuration boundary;
    everything in here and below is watts, meters, seconds, hertz and nats.
    """

    bandwidth: float  # Hz
    avg_power: float  # W, average transmit budget
    d0: float  # m, closest approach between base station and track
    cell_radius: float  # m
    velocity: float  # m/s
    pathloss_exp: float  # dimensionless, >= 0
    noise_psd: float  # W/Hz

    def __post_init__(self):
        for name in ("bandwidth", "avg_power", "d0", "cell_radius", "velocity", "noise_psd"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if self.pathloss_exp < 0.0:
            raise ValueError(f"pathloss_exp must be >= 0, got {self.pathloss_exp}")

    @property
    def traversal_time(self) -> float:
        """Seconds from closest approach to the cell edge (cell_radius / velocity)."""
        return self.cell_radius / self.velocity


def _check_tau(s: Scenario, tau) -> np.ndarray:
    t = np.asarray(tau, dtype=float)
    horizon = s.traversal_time
    slack = _DOMAIN_SLACK * horizon
    if np.any(t < -slack) or np.any(t > horizon + slack):
        raise ValueError(
            f"tau must lie in [0, {horizon}], got {float(np.atleast_1d(t)[0])!r}"
        )
    return t


def distance(s: Scenario, tau):
    """Base-station-to-train separation sqrt(d0**2 + (v * tau)**2) in meters."""
    t = _check_tau(s, tau)
    d = np.hypot(s.d0, s.velocity * t)
    return float(d) if np.ndim(tau) == 0 else d


def noise_power(s: Scenario, tau):
    """Effective noise W * N0 * d(tau)**alpha in watts; increases with tau."""
    d = distance(s, tau)
    n = s.bandwidth * s.noise_psd * np.power(d, s.pathloss_exp)
    return float(n) if np.ndim(tau) == 0 else n


def capacity(s: Scenario, p, tau):
    """Instantaneous rate W * ln(1 + p / N(tau)) in nats per second.

    Zero power gives zero rate; negative power is a domain error.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0.0):
        raise ValueError("transmit power must be nonnegative")
    c = s.bandwidth * np.log1p(p_arr / noise_power(s, tau))
    if np.ndim(p) == 0 and np.ndim(tau) == 0:
        return float(c)
    return c


def channel_service(s: Scenario, profile, t: float, intervals: int = DEFAULT_INTERVALS) -> float:
    """Cumulative service in nats delivered over [0, t] under ``profile``.

    Water-filling style profiles carry a ``cutoff`` instant in their metadata;
    the quadrature stops there because the transmit power, and hence the rate,
    is identically zero beyond it. Keeping the kink off the Simpson panels
    preserves the quadrature accuracy.
    """
    horizon = profile.duration
    slack = _DOMAIN_SLACK * horizon
    if t < -slack or t > horizon + slack:
        raise ValueError(f"t must lie in the profile domain [0, {horizon}], got {t}")
    cutoff = profile.metadata.get("cutoff")
    upper = min(t, cutoff) if cutoff is not None else t
    if upper <= 0.0:
        return 0.0
    grid = QuadratureGrid(0.0, float(upper), intervals)
    return integrate(lambda x: capacity(s, profile.power_at(x), x), grid)


def service_samples(s: Scenario, profile, times, substeps: int = 8) -> np.ndarray:
    """Cumulative service at each sample time, accumulated segment by segment.

    Each segment between consecutive samples is integrated with a small
    Simpson rule of ``substeps`` panels; a segment straddling the profile's
    cutoff is split there first.
    """
    pts = np.asarray(times, dtype=float)
    if pts.ndim != 1 or pts.size < 1:
        raise ValueError("times must be a one-dimensional sample grid")
    cutoff = profile.metadata.get("cutoff")
    out = np.zeros(pts.shape)
    total = 0.0

    def segment(a: float, b: float) -> float:
        if b - a <= 0.0:
            return 0.0
        grid = QuadratureGrid(a, b, substeps)
        return integrate(lambda x: capacity(s, profile.power_at(x), x), grid)

    for i in range(1, pts.size):
        a, b = float(pts[i - 1]), float(pts[i])
        if cutoff is not None and a < cutoff < b:
            total += segment(a, cutoff) + segment(cutoff, b)
        else:
            total += segment(a, b)
        out[i] = total
    return out


@dataclass(frozen=True)
class ServiceCurve:
    """Cumulative channel service sampled on an increasing time grid."""

    times: np.ndarray  # s, strictly increasing from 0
    service: np.ndarray  # nats, nondecreasing, starts at 0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        service = np.asarray(self.service, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "service", service)
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0.0):
            raise ValueError("service curve times must be strictly increasing")
        if abs(times[0]) > _DOMAIN_SLACK:
            raise ValueError("service curve must start at time 0")
        if service.shape != times.shape:
            raise ValueError("service and times must have matching shapes")
        if abs(service[0]) > 0.0:
            raise ValueError("service must start at 0")
        tol = _DOMAIN_SLACK * max(1.0, float(np.max(np.abs(service))))
        if np.any(np.diff(service) < -tol):
            raise ValueError("service must be nondecreasing")


def service_curve(s: Scenario, profile, times=None, substeps: int = 8) -> ServiceCurve:
    """Sample the cumulative service of ``profile`` into a ServiceCurve."""
    pts = profile.times if times is None else np.asarray(times, dtype=float)
    return ServiceCurve(pts, service_samples(s, profile, pts, substeps))
