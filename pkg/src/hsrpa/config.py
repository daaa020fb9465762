"""Run configuration: YAML ingestion, validation and SI conversion.

A config file has up to three sections. ``scenario`` is required and carries
the physical parameters in field units (MHz, dBW, m, km, km/h); exactly one
of ``noise_psd_w_per_hz`` and ``target_cutoff_s`` must be present, the latter
requesting noise calibration from a water-filling cutoff. ``solver`` and
``output`` are optional overrides of the search and reporting defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .allocators import SCHEMES, SolverSettings
from .channel import Scenario


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


_SCENARIO_KEYS = {
    "bandwidth_mhz",
    "avg_power_dbw",
    "d0_m",
    "cell_radius_km",
    "velocity_kmh",
    "pathloss_exp",
    "noise_psd_w_per_hz",
    "target_cutoff_s",
}
_SOLVER_KEYS = {
    "lambda_step_init",
    "power_ratio_tol",
    "max_iterations",
    "grid_points",
    "root_tol",
    "intervals",
}
_OUTPUT_KEYS = {"out_dir", "schemes", "samples"}


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario block exactly as written in the file (pre-SI units)."""

    bandwidth_mhz: float
    avg_power_dbw: float
    d0_m: float
    cell_radius_km: float
    velocity_kmh: float
    pathloss_exp: float
    noise_psd_w_per_hz: float | None = None
    target_cutoff_s: float | None = None

    @property
    def traversal_time_s(self) -> float:
        # always derived from geometry and speed, never an input
        return self.cell_radius_km * 1e3 / (self.velocity_kmh / 3.6)

    def to_scenario(self, noise_psd: float | None = None) -> Scenario:
        """SI-converted Scenario; ``noise_psd`` overrides the config value
        (used once calibration has produced one)."""
        n0 = noise_psd if noise_psd is not None else self.noise_psd_w_per_hz
        if n0 is None:
            raise ConfigError(
                "scenario.noise_psd_w_per_hz is not set; calibrate first or pass noise_psd"
            )
        return Scenario(
            bandwidth=self.bandwidth_mhz * 1e6,
            avg_power=10.0 ** (self.avg_power_dbw / 10.0),
            d0=self.d0_m,
            cell_radius=self.cell_radius_km * 1e3,
            velocity=self.velocity_kmh / 3.6,
            pathloss_exp=self.pathloss_exp,
            noise_psd=n0,
        )


@dataclass(frozen=True)
class OutputConfig:
    out_dir: str = "."
    schemes: tuple[str, ...] = SCHEMES
    samples: int = 201


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    solver: SolverSettings
    output: OutputConfig

    @property
    def needs_calibration(self) -> bool:
        return self.scenario.target_cutoff_s is not None


def _require_number(section: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    return float(value)


def _require_positive(section: str, key: str, value) -> float:
    number = _require_number(section, key, value)
    if not number > 0.0:
        raise ConfigError(f"{section}.{key} must be positive, got {value!r}")
    return number


def _check_keys(section: str, mapping: dict, allowed: set[str]) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key {section}.{sorted(unknown)[0]}")


def _parse_scenario(raw: dict) -> ScenarioConfig:
    _check_keys("scenario", raw, _SCENARIO_KEYS)
    for key in ("bandwidth_mhz", "avg_power_dbw", "d0_m", "cell_radius_km",
                "velocity_kmh", "pathloss_exp"):
        if key not in raw:
            raise ConfigError(f"missing key scenario.{key}")

    has_noise = raw.get("noise_psd_w_per_hz") is not None
    has_target = raw.get("target_cutoff_s") is not None
    if has_noise == has_target:
        raise ConfigError(
            "scenario must set exactly one of noise_psd_w_per_hz and target_cutoff_s"
        )

    cfg = ScenarioConfig(
        bandwidth_mhz=_require_positive("scenario", "bandwidth_mhz", raw["bandwidth_mhz"]),
        avg_power_dbw=_require_number("scenario", "avg_power_dbw", raw["avg_power_dbw"]),
        d0_m=_require_positive("scenario", "d0_m", raw["d0_m"]),
        cell_radius_km=_require_positive("scenario", "cell_radius_km", raw["cell_radius_km"]),
        velocity_kmh=_require_positive("scenario", "velocity_kmh", raw["velocity_kmh"]),
        pathloss_exp=_require_number("scenario", "pathloss_exp", raw["pathloss_exp"]),
        noise_psd_w_per_hz=(
            _require_positive("scenario", "noise_psd_w_per_hz", raw["noise_psd_w_per_hz"])
            if has_noise
            else None
        ),
        target_cutoff_s=(
            _require_positive("scenario", "target_cutoff_s", raw["target_cutoff_s"])
            if has_target
            else None
        ),
    )
    if cfg.pathloss_exp < 0.0:
        raise ConfigError(f"scenario.pathloss_exp must be >= 0, got {cfg.pathloss_exp}")
    if cfg.target_cutoff_s is not None and cfg.target_cutoff_s >= cfg.traversal_time_s:
        raise ConfigError(
            f"scenario.target_cutoff_s must lie inside (0, {cfg.traversal_time_s}), "
            f"got {cfg.target_cutoff_s}"
        )
    return cfg


def _parse_solver(raw: dict) -> SolverSettings:
    _check_keys("solver", raw, _SOLVER_KEYS)
    kwargs = {}
    if "lambda_step_init" in raw:
        kwargs["lambda_step_init"] = _require_positive(
            "solver", "lambda_step_init", raw["lambda_step_init"]
        )
    if "power_ratio_tol" in raw:
        kwargs["power_ratio_tol"] = _require_positive(
            "solver", "power_ratio_tol", raw["power_ratio_tol"]
        )
    if "max_iterations" in raw:
        kwargs["max_iterations"] = int(
            _require_positive("solver", "max_iterations", raw["max_iterations"])
        )
    if "grid_points" in raw:
        kwargs["grid_points"] = int(_require_positive("solver", "grid_points", raw["grid_points"]))
    if "root_tol" in raw and raw["root_tol"] is not None:
        kwargs["root_tol"] = _require_positive("solver", "root_tol", raw["root_tol"])
    if "intervals" in raw:
        kwargs["intervals"] = int(_require_positive("solver", "intervals", raw["intervals"]))
    try:
        return SolverSettings(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"solver settings invalid: {exc}") from exc


def _parse_output(raw: dict) -> OutputConfig:
    _check_keys("output", raw, _OUTPUT_KEYS)
    out_dir = raw.get("out_dir", ".")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError(f"output.out_dir must be a non-empty string, got {out_dir!r}")

    schemes = raw.get("schemes", "all")
    if schemes == "all":
        scheme_tuple = SCHEMES
    else:
        if not isinstance(schemes, (list, tuple)) or not schemes:
            raise ConfigError("output.schemes must be 'all' or a non-empty list")
        for name in schemes:
            if name not in SCHEMES:
                raise ConfigError(
                    f"output.schemes contains unknown scheme {name!r}; known: {list(SCHEMES)}"
                )
        scheme_tuple = tuple(schemes)

    samples = raw.get("samples", 201)
    samples = int(_require_positive("output", "samples", samples))
    if samples < 2:
        raise ConfigError(f"output.samples must be >= 2, got {samples}")
    return OutputConfig(out_dir=out_dir, schemes=scheme_tuple, samples=samples)


def load_config(path) -> RunConfig:
    """Parse and validate a YAML run configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping with a scenario section")
    _check_keys("config", raw, {"scenario", "solver", "output"})
    if "scenario" not in raw or not isinstance(raw["scenario"], dict):
        raise ConfigError("missing key scenario (mapping section)")

    solver_raw = raw.get("solver", {}) or {}
    output_raw = raw.get("output", {}) or {}
    if not isinstance(solver_raw, dict):
        raise ConfigError("solver section must be a mapping")
    if not isinstance(output_raw, dict):
        raise ConfigError("output section must be a mapping")

    return RunConfig(
        scenario=_parse_scenario(raw["scenario"]),
        solver=_parse_solver(solver_raw),
        output=_parse_output(output_raw),
    )
