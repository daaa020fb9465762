"""Delimited report files: profile samples, scheme metrics and the solver trace.

Numbers are written with 12 significant digits, plain decimal below a
magnitude of 1e6 and scientific notation above, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .allocators import SolveReport
from .analysis import SchemeMetrics

LN2 = math.log(2.0)


def format_number(x: float) -> str:
    """Deterministic 12-significant-digit rendering of one value."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0"
    magnitude = abs(x)
    if magnitude >= 1e6:
        return f"{x:.11e}"
    decimals = 11 - math.floor(math.log10(magnitude))
    return f"{x:.{decimals}f}"


def _write_rows(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_profiles_csv(
    path,
    taus: np.ndarray,
    scheme_columns: dict[str, dict[str, np.ndarray]],
    bits: bool = False,
) -> None:
    """Write tau_s plus power/rate/service column triples per scheme.

    ``scheme_columns`` maps scheme name to arrays under the keys "power",
    "rate" and "service", all aligned with ``taus``. With ``bits`` the rate
    and service columns are scaled by 1/ln 2 and renamed accordingly.
    """
    path = Path(path)
    unit = "bits" if bits else "nats"
    factor = 1.0 / LN2 if bits else 1.0
    header = ["tau_s"]
    for scheme in scheme_columns:
        header += [
            f"power_w_{scheme}",
            f"rate_{unit}_per_s_{scheme}",
            f"service_{unit}_{scheme}",
        ]

    rows = []
    for i, tau in enumerate(taus):
        row = [format_number(tau)]
        for columns in scheme_columns.values():
            row.append(format_number(columns["power"][i]))
            row.append(format_number(factor * columns["rate"][i]))
            row.append(format_number(factor * columns["service"][i]))
        rows.append(row)
    _write_rows(path, header, rows)


def write_metrics_csv(path, rows: list[SchemeMetrics], bits: bool = False) -> None:
    """One metrics row per scheme. Rates and service scale under ``bits``;
    the log utility stays in natural-log units either way."""
    path = Path(path)
    unit = "bits" if bits else "nats"
    factor = 1.0 / LN2 if bits else 1.0
    header = [
        "scheme",
        f"total_service_{unit}",
        "pf_utility",
        f"min_rate_{unit}_per_s",
        f"max_rate_{unit}_per_s",
        "rate_cv",
        "mean_power_error",
        "converged",
    ]
    body = [
        [
            m.scheme,
            format_number(factor * m.total_service),
            format_number(m.pf_utility),
            format_number(factor * m.min_rate),
            format_number(factor * m.max_rate),
            format_number(m.rate_cv),
            format_number(m.mean_power_error),
            "true" if m.converged else "false",
        ]
        for m in rows
    ]
    _write_rows(path, header, body)


def write_trace_csv(path, report: SolveReport) -> None:
    """Multiplier search trajectory: iteration, lambda, budget error ratio."""
    path = Path(path)
    body = [
        [str(step.iteration), format_number(step.lam), format_number(step.power_ratio)]
        for step in report.trajectory
    ]
    _write_rows(path, ["iteration", "lambda", "r_delta_p"], body)


def write_calibration_sidecar(path, noise_psd: float) -> None:
    """Single key=value line recording a calibrated noise density."""
    Path(path).write_text(f"noise_psd_w_per_hz={noise_psd!r}\n")
