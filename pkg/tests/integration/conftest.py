# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Fixtures for beheco integration tests."""

import logging

import pytest

import lti
import presets
import state

logger = logging.getLogger(__name__)

SISO_L_ID = 8
SISO_L_P = 3
SISO_L_F = 3


@pytest.fixture(scope="module", name="trials")
def trials_fixture(pytestconfig: pytest.Config) -> int:
    """Number of seeded trials of the statistical tests."""
    trials = pytestconfig.getoption("--trials")
    assert trials and trials > 0, "Please specify a positive --trials command line option"
    return trials


@pytest.fixture(scope="module", name="processes")
def processes_fixture(pytestconfig: pytest.Config) -> int | None:
    """Number of worker processes of the sweeps."""
    return pytestconfig.getoption("--processes")


@pytest.fixture(scope="module", name="siso_clean")
def siso_clean_fixture() -> lti.Trajectory:
    """Clean historical data of the single-output benchmark, T = 160."""
    return lti.generate_historical(presets.EQ18_SYSTEM, SISO_L_ID, 20, 2.0, 0)


@pytest.fixture(scope="module", name="siso_sweep")
def siso_sweep_fixture(trials: int, processes: int | None) -> state.ExperimentConfig:
    """Single-output sweep over the default noise bound grid."""
    return state.ExperimentConfig(
        preset=state.Preset.SISO,
        deltas=state.DEFAULT_DELTAS,
        trials=trials,
        seed_base=0,
        processes=processes,
        out=None,
        trajectories_out=None,
        scenario=presets.RegulationScenario(),
        system=presets.EQ18_SYSTEM,
    )
