# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for defining unit test fixtures."""

import numpy as np
import pytest

import lti
import presets
from page import BehavioralData, RecentTrajectory, behavioral_data_from_trajectory, split_recent
from predictor import PredictorState, build_predictor

L_ID = 8
L_P = 3
L_F = 3


@pytest.fixture(name="eq18_system")
def eq18_system_fixture() -> lti.StateSpace:
    """The single-output benchmark system."""
    return presets.EQ18_SYSTEM


@pytest.fixture(name="clean_historical")
def clean_historical_fixture(eq18_system: lti.StateSpace) -> lti.Trajectory:
    """Clean historical data of the benchmark system, T = 160."""
    return lti.generate_historical(eq18_system, L_ID, 20, 2.0, 0)


@pytest.fixture(name="recent_window")
def recent_window_fixture(
    eq18_system: lti.StateSpace,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Recent inputs, their clean outputs and the state at the window start."""
    window_u = np.asarray(presets.SISO_RECENT_U).reshape(-1, 1)
    x_start = lti.recover_initial_state(eq18_system, window_u, presets.SISO_RECENT_Y)
    return window_u, lti.simulate(eq18_system, x_start, window_u), x_start


@pytest.fixture(name="clean_data")
def clean_data_fixture(clean_historical: lti.Trajectory) -> BehavioralData:
    """Noiseless behavioral data with l_p = l_f = 3."""
    return behavioral_data_from_trajectory(
        clean_historical.inputs, clean_historical.outputs, L_P + L_F, L_P
    )


@pytest.fixture(name="noisy_data")
def noisy_data_fixture(
    eq18_system: lti.StateSpace, clean_historical: lti.Trajectory
) -> BehavioralData:
    """Behavioral data with outputs corrupted by noise bounded by 1e-3."""
    noise = lti.NoiseModel(delta=1e-3, seed=1)
    noisy = lti.add_noise(clean_historical.outputs, noise)
    return behavioral_data_from_trajectory(
        clean_historical.inputs, noisy, L_P + L_F, L_P, delta=noise.delta
    )


@pytest.fixture(name="recent")
def recent_fixture(recent_window: tuple[np.ndarray, np.ndarray, np.ndarray]) -> RecentTrajectory:
    """Recent window with R = 10 I and Q = I."""
    window_u, window_y, _ = recent_window
    return split_recent(window_u, window_y, L_P, Q=np.eye(L_F), R=10 * np.eye(L_F))


@pytest.fixture(name="clean_state")
def clean_state_fixture(clean_data: BehavioralData, recent: RecentTrajectory) -> PredictorState:
    """Predictor state of the noiseless data."""
    return build_predictor(clean_data, recent)


@pytest.fixture(name="noisy_state")
def noisy_state_fixture(noisy_data: BehavioralData, recent: RecentTrajectory) -> PredictorState:
    """Predictor state of the noisy data."""
    return build_predictor(noisy_data, recent)
