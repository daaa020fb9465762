"""Command line front end.

``hsrpa run`` executes the configured schemes and writes profiles.csv,
metrics.csv, solver_trace.csv and the report figures into the output
directory. ``hsrpa calibrate`` recovers a noise density from a water-filling
cutoff and stores it in a sidecar file.

Exit codes: 0 success, 1 validation or I/O problem, 2 numeric failure or
non-convergence.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .allocators import CalibrationError, calibrate_noise
from .analysis import build_profile, scheme_metrics
from .channel import capacity, service_samples
from .config import ConfigError, RunConfig, load_config
from .report import (
    write_calibration_sidecar,
    write_metrics_csv,
    write_profiles_csv,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2

# placeholder density used while calibrating: the cutoff search overrides it
_PROVISIONAL_NOISE = 1.0


def _resolve_scenario(cfg: RunConfig, out_dir: Path | None):
    """Scenario from the config, calibrating the noise density if requested.

    Returns (scenario, calibrated_noise_or_None).
    """
    if not cfg.needs_calibration:
        return cfg.scenario.to_scenario(), None
    provisional = cfg.scenario.to_scenario(noise_psd=_PROVISIONAL_NOISE)
    n0 = calibrate_noise(
        provisional,
        cfg.scenario.target_cutoff_s,
        intervals=cfg.solver.intervals,
        root_tol=cfg.solver.root_tol,
    )
    if out_dir is not None:
        write_calibration_sidecar(out_dir / "calibration.txt", n0)
    return cfg.scenario.to_scenario(noise_psd=n0), n0


def execute_run(cfg: RunConfig, out_dir: Path, bits: bool, figures: bool) -> int:
    """Produce all report files for one configuration; returns the exit code."""
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario, _ = _resolve_scenario(cfg, out_dir)

    taus = np.linspace(0.0, scenario.traversal_time, cfg.output.samples)
    scheme_columns: dict[str, dict] = {}
    metrics = []
    trace = None
    all_converged = True

    for scheme in cfg.output.schemes:
        profile, report = build_profile(scenario, scheme, cfg.solver)
        converged = True if report is None else bool(report.converged)
        all_converged &= converged
        if report is not None:
            trace = report
        scheme_columns[scheme] = {
            "power": profile.power_at(taus),
            "rate": capacity(scenario, profile.power_at(taus), taus),
            "service": service_samples(scenario, profile, taus),
        }
        metrics.append(scheme_metrics(scenario, profile, cfg.solver.intervals, converged))

    write_profiles_csv(out_dir / "profiles.csv", taus, scheme_columns, bits)
    write_metrics_csv(out_dir / "metrics.csv", metrics, bits)
    if trace is not None:
        write_trace_csv(out_dir / "solver_trace.csv", trace)
    if figures:
        from .figures import render_run_figures

        render_run_figures(out_dir, taus, scheme_columns, trace, bits)

    return EXIT_OK if all_converged else EXIT_NUMERIC


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="hsrpa")
def main():
    """Transmit-power schedules for one base-station cell pass."""


@main.command(name="run")
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="YAML run configuration.",
)
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Output directory (overrides output.out_dir from the config).",
)
@click.option(
    "--bits",
    is_flag=True,
    help="Report rates and service in bits instead of nats (display only; "
    "the schedules themselves do not change).",
)
@click.option(
    "--figures/--no-figures",
    default=True,
    help="Render PNG figures alongside the CSV files.",
)
def run_command(config_path: Path, out_dir: Path | None, bits: bool, figures: bool):
    """Run the configured schemes and write the CSV and figure reports."""
    try:
        cfg = load_config(config_path)
        target_dir = out_dir if out_dir is not None else Path(cfg.output.out_dir)
        code = execute_run(cfg, target_dir, bits, figures)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as exc:
        click.echo(f"output error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except CalibrationError as exc:
        click.echo(f"calibration failed: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    if code != EXIT_OK:
        click.echo("at least one scheme did not converge; see metrics.csv", err=True)
    sys.exit(code)


@main.command(name="calibrate")
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="YAML run configuration.",
)
@click.option(
    "--target-cutoff",
    type=float,
    default=None,
    help="Cutoff instant in seconds (overrides scenario.target_cutoff_s).",
)
@click.option(
    "--out",
    "sidecar_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Sidecar file path (default: the config path with a .calibration suffix).",
)
def calibrate_command(config_path: Path, target_cutoff: float | None, sidecar_path: Path | None):
    """Recover the noise density reproducing a water-filling cutoff."""
    try:
        cfg = load_config(config_path)
        target = target_cutoff if target_cutoff is not None else cfg.scenario.target_cutoff_s
        if target is None:
            raise ConfigError(
                "no cutoff target: set scenario.target_cutoff_s or pass --target-cutoff"
            )
        horizon = cfg.scenario.traversal_time_s
        if not 0.0 < target < horizon:
            raise ConfigError(
                f"target cutoff must lie inside (0, {horizon}) seconds, got {target}"
            )
        provisional = cfg.scenario.to_scenario(noise_psd=_PROVISIONAL_NOISE)
        n0 = calibrate_noise(
            provisional, target, intervals=cfg.solver.intervals, root_tol=cfg.solver.root_tol
        )
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except CalibrationError as exc:
        click.echo(f"calibration failed: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)

    click.echo(f"noise_psd_w_per_hz = {n0:.6g}")
    sidecar = sidecar_path if sidecar_path is not None else config_path.with_suffix(".calibration")
    try:
        write_calibration_sidecar(sidecar, n0)
    except OSError as exc:
        click.echo(f"output error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(f"wrote {sidecar}")
    sys.exit(EXIT_OK)
