"""Shared scenario fixtures.

The reference setup used throughout: 5 MHz bandwidth, a 100 m closest
approach, a 2.5 km cell, 300 km/h and a quartic pathloss, with the noise
density calibrated so the water-filling schedule stops at 10.4 s when the
budget is 5 dBW. The calibration runs once per session.
"""

import pytest

from hsrpa import Scenario, calibrate_noise

REFERENCE_CUTOFF_S = 10.4


def reference_scenario(noise_psd: float = 1.0, avg_power_dbw: float = 5.0) -> Scenario:
    return Scenario(
        bandwidth=5e6,
        avg_power=10.0 ** (avg_power_dbw / 10.0),
        d0=100.0,
        cell_radius=2500.0,
        velocity=300.0 / 3.6,
        pathloss_exp=4.0,
        noise_psd=noise_psd,
    )


@pytest.fixture(scope="session")
def calibrated_noise() -> float:
    return calibrate_noise(reference_scenario(), REFERENCE_CUTOFF_S)


@pytest.fixture(scope="session")
def scenario5(calibrated_noise) -> Scenario:
    return reference_scenario(noise_psd=calibrated_noise)


@pytest.fixture(scope="session")
def scenario15(calibrated_noise) -> Scenario:
    return reference_scenario(noise_psd=calibrated_noise, avg_power_dbw=15.0)


@pytest.fixture(scope="session")
def flat_scenario() -> Scenario:
    # pathloss disabled: every scheme should collapse to constant power
    return Scenario(
        bandwidth=5e6,
        avg_power=2.0,
        d0=100.0,
        cell_radius=2500.0,
        velocity=300.0 / 3.6,
        pathloss_exp=0.0,
        noise_psd=2e-7,  # flat noise floor of exactly 1 W
    )


@pytest.fixture(scope="session")
def eps5(scenario5):
    from hsrpa import pf_epsilon_optimal_pa

    return pf_epsilon_optimal_pa(scenario5)
