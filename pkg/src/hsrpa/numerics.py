"""Self-contained numerical kernels used throughout the package.

Three pieces: the principal branch of the Lambert W function, composite
Simpson quadrature on a fixed grid, and bisection root finding for monotone
functions. All of them are pure functions and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Default number of Simpson panels. The integrands in this package are smooth
# (the one kink, at the water-filling cutoff, is always split away), so a
# fixed resolution is enough; doubling it moves results by well under 1e-8.
DEFAULT_INTERVALS = 4096

_HALLEY_TOL = 1e-14
_HALLEY_MAX_ITER = 80


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


def lambert_w0(z):
    """Principal branch of the Lambert W function for nonnegative arguments.

    Returns w >= 0 solving w * exp(w) = z. Scalars map to a float, arrays
    elementwise to an array. Seeds: the small-argument series z*(1 - z + ...)
    near zero, log(1 + z) up to e, and log(z) - log(log(z)) beyond, then
    Halley iterations down to a residual of 1e-14 * max(1, z).

    Parameters
    ----------
    z : float or ndarray
        Nonnegative argument(s). Negative input raises ValueError; the
        secondary branch is out of scope here.
    """
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(arr < 0.0):
        raise ValueError("lambert_w0 expects z >= 0 (principal branch only)")

    w = np.empty_like(arr)
    small = arr <= 0.05
    big = arr > np.e
    mid = ~small & ~big
    zs = arr[small]
    w[small] = zs * (1.0 - zs + 1.5 * zs * zs)
    w[mid] = np.log1p(arr[mid])
    lz = np.log(arr[big])
    w[big] = lz - np.log(lz)

    for _ in range(_HALLEY_MAX_ITER):
        ew = np.exp(w)
        err = w * ew - arr
        if np.all(np.abs(err) <= _HALLEY_TOL * np.maximum(1.0, arr)):
            break
        wp1 = w + 1.0
        w = w - err / (ew * wp1 - (w + 2.0) * err / (2.0 * wp1))

    if np.isscalar(z) or np.ndim(z) == 0:
        return float(w[0])
    return w


@dataclass(frozen=True)
class QuadratureGrid:
    """A closed interval split into an even number of Simpson panels."""

    lower: float  # seconds
    upper: float  # seconds
    intervals: int = DEFAULT_INTERVALS

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(
                f"quadrature grid needs lower < upper, got [{self.lower}, {self.upper}]"
            )
        if self.intervals < 2 or self.intervals % 2 != 0:
            raise ValueError(f"intervals must be even and >= 2, got {self.intervals}")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.intervals + 1)


def _evaluate(f, x: np.ndarray) -> np.ndarray:
    """Evaluate f on all nodes, falling back to a scalar loop for callables
    that do not broadcast."""
    try:
        y = np.asarray(f(x), dtype=float)
    except (TypeError, ValueError):
        return np.array([float(f(xi)) for xi in x])
    if y.shape != x.shape:
        y = np.broadcast_to(np.asarray(y, dtype=float), x.shape)
    return y


def integrate(f, grid: QuadratureGrid) -> float:
    """Composite Simpson estimate of the integral of ``f`` over ``grid``.

    Exact for polynomials up to cubics on each panel pair. A non-finite
    integrand value raises ValueError naming the offending abscissa.
    """
    x = grid.nodes
    y = _evaluate(f, x)
    bad = ~np.isfinite(y)
    if np.any(bad):
        raise ValueError(
            f"integrand returned a non-finite value at tau={float(x[bad][0])!r}"
        )
    h = (grid.upper - grid.lower) / grid.intervals
    acc = y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2])
    return float(h / 3.0 * acc)


def find_root_monotone(g, lo: float, hi: float, tol: float) -> float:
    """Bisection root of a monotone function on a sign-changing bracket.

    ``tol`` applies to the argument: the bracket is shrunk until its width is
    at most ``tol`` and the midpoint is returned. Endpoints whose images share
    a sign raise BracketError quoting both values.
    """
    if not lo < hi:
        raise ValueError(f"bracket needs lo < hi, got [{lo}, {hi}]")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    g_lo = float(g(lo))
    g_hi = float(g(hi))
    if g_lo == 0.0:
        return float(lo)
    if g_hi == 0.0:
        return float(hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise BracketError(
            f"no sign change on bracket: g({lo}) = {g_lo}, g({hi}) = {g_hi}"
        )
    a, b, g_a = float(lo), float(hi), g_lo
    while (b - a) > tol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:  # hit the floating-point floor
            break
        g_mid = float(g(mid))
        if g_mid == 0.0:
            return mid
        if np.sign(g_mid) == np.sign(g_a):
            a, g_a = mid, g_mid
        else:
            b = mid
    return 0.5 * (a + b)
