"""Figure rendering for run reports: PNG files next to the CSV output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

_COLORS = {
    "constant": "tab:blue",
    "inversion": "tab:orange",
    "waterfilling": "tab:green",
    "pf_near_optimal": "tab:red",
    "pf_epsilon_optimal": "tab:purple",
}


def _line_kwargs(scheme: str) -> dict:
    return {"label": scheme, "color": _COLORS.get(scheme), "linewidth": 1.4}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_run_figures(
    out_dir,
    taus,
    scheme_columns: dict[str, dict],
    trace=None,
    bits: bool = False,
) -> list[Path]:
    """Render power, rate, service and (when available) convergence figures.

    ``scheme_columns`` is the same structure the CSV writer consumes; ``trace``
    is the multiplier search report, plotted when present. Returns the list of
    files written.
    """
    out_dir = Path(out_dir)
    rate_unit = "bits/s" if bits else "nats/s"
    service_unit = "bits" if bits else "nats"
    scale = 1.0 / math.log(2.0) if bits else 1.0
    written = []

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for scheme, cols in scheme_columns.items():
        ax.plot(taus, cols["power"], **_line_kwargs(scheme))
    ax.set_xlabel("time in cell [s]")
    ax.set_ylabel("transmit power [W]")
    ax.grid(True, ls=":")
    ax.legend()
    written.append(_save(fig, out_dir / "power_allocation.png"))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for scheme, cols in scheme_columns.items():
        ax.plot(taus, scale * cols["rate"], **_line_kwargs(scheme))
    ax.set_xlabel("time in cell [s]")
    ax.set_ylabel(f"transmission rate [{rate_unit}]")
    ax.grid(True, ls=":")
    ax.legend()
    written.append(_save(fig, out_dir / "transmission_rate.png"))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for scheme, cols in scheme_columns.items():
        ax.plot(taus, scale * cols["service"], **_line_kwargs(scheme))
    ax.set_xlabel("time in cell [s]")
    ax.set_ylabel(f"cumulative channel service [{service_unit}]")
    ax.grid(True, ls=":")
    ax.legend()
    written.append(_save(fig, out_dir / "channel_service.png"))

    if trace is not None:
        iterations = [step.iteration for step in trace.trajectory]
        lambdas = [step.lam for step in trace.trajectory]
        ratios = [step.power_ratio for step in trace.trajectory]
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.2), sharex=True)
        ax1.plot(iterations, lambdas, marker="o", color="tab:purple")
        ax1.set_ylabel("multiplier lambda [1/W]")
        ax1.grid(True, ls=":")
        ax2.plot(iterations, ratios, marker="o", color="tab:gray")
        ax2.axhline(0.0, color="black", linewidth=0.8)
        ax2.set_xlabel("iteration")
        ax2.set_ylabel("budget error ratio")
        ax2.grid(True, ls=":")
        written.append(_save(fig, out_dir / "multiplier_convergence.png"))

    return written
