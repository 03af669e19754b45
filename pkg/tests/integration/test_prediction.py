# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Integration tests for the certified behavioral predictor."""

import logging

import numpy as np
import pytest

import lti
import predictor
import presets
from page import behavioral_data_from_trajectory, is_page_exciting, split_recent
from tests.integration.conftest import SISO_L_F, SISO_L_P
from tests.integration.helpers import prediction_error, random_system

logger = logging.getLogger(__name__)

REALIZATIONS = 100
MAX_DRAWS = 200


def test_noiseless_prediction_is_exact():
    """
    arrange: given noiseless exciting data of 100 random systems with up to four states.
    act: when a fresh trajectory's future is predicted with l_p equal to the order.
    assert: the prediction matches the simulation to 1e-8 relative.
    """
    for seed in range(REALIZATIONS):
        n_x = 1 + seed % 4
        system = random_system(seed, n_x)
        l_f = 3
        L = n_x + l_f
        clean = lti.generate_historical(system, L, 12 * L, 1.0, seed)
        assert is_page_exciting(clean.inputs, L, n_x + 1)
        data = behavioral_data_from_trajectory(clean.inputs, clean.outputs, L, n_x)
        generator = np.random.default_rng(seed + 1000)
        inputs = generator.normal(size=L)
        outputs = lti.simulate(system, generator.normal(size=n_x), inputs)
        state = predictor.build_predictor(data, split_recent(inputs[:n_x], outputs[:n_x], n_x))

        prediction = predictor.predict(state, inputs[n_x:])

        error = np.linalg.norm(prediction.y_f_hat - outputs[n_x:, 0])
        assert error <= 1e-8 * max(1.0, float(np.linalg.norm(outputs[n_x:, 0]))), seed


@pytest.mark.parametrize(
    "delta",
    [
        pytest.param(1e-4, id="delta 1e-4"),
        pytest.param(1e-3, id="delta 1e-3"),
    ],
)
def test_prediction_bounds_hold(siso_clean: lti.Trajectory, delta: float):
    """
    arrange: given seeded noisy realizations of the benchmark data.
    act: when the noisy and the clean predictors evaluate the same input on the first 100
        realizations satisfying the small-noise condition.
    assert: 100 realizations are checked and no coefficient or output error exceeds its bound.
    """
    L = SISO_L_P + SISO_L_F
    clean_data = behavioral_data_from_trajectory(
        siso_clean.inputs, siso_clean.outputs, L, SISO_L_P
    )
    violations = 0
    checked = 0
    skipped = []
    for seed in range(MAX_DRAWS):
        if checked == REALIZATIONS:
            break
        generator = np.random.default_rng(seed)
        noise = lti.NoiseModel(delta=delta, seed=seed)
        window_u = 2.0 * generator.normal(size=SISO_L_P)
        window_y = lti.simulate(presets.EQ18_SYSTEM, generator.normal(size=3), window_u)
        u_f = 2.0 * generator.normal(size=SISO_L_F)
        clean_state = predictor.build_predictor(
            clean_data, split_recent(window_u, window_y, SISO_L_P)
        )
        noisy = lti.add_noise(siso_clean.outputs, noise, rng=generator)
        noisy_data = behavioral_data_from_trajectory(siso_clean.inputs, noisy, L, SISO_L_P, delta)
        noisy_recent = split_recent(
            window_u, lti.add_noise(window_y, noise, rng=generator), SISO_L_P
        )
        noisy_state = predictor.build_predictor(noisy_data, noisy_recent)
        if not predictor.check_small_noise(noisy_state, delta):
            skipped.append(seed)
            continue

        reference = predictor.predict(clean_state, u_f)
        prediction = predictor.predict(noisy_state, u_f)

        checked += 1
        g_error = np.linalg.norm(prediction.g_hat - reference.g_hat)
        y_error = np.linalg.norm(prediction.y_f_hat - reference.y_f_hat)
        if g_error > prediction.g_ball_radius or y_error > prediction.y_f_error_bound:
            logger.warning("Seed %s: g error %.3e, y_f error %.3e", seed, g_error, y_error)
            violations += 1
    logger.info("Checked %s realizations at delta=%s, skipped seeds %s", checked, delta, skipped)
    assert checked == REALIZATIONS
    assert violations == 0


def test_past_window_length_sensitivity(siso_clean: lti.Trajectory):
    """
    arrange: given noisy benchmark data and 20 seeded fresh trajectories.
    act: when three future outputs are predicted with l_p = 3 and with l_p = 4.
    assert: the median error is small at the observability index and explodes above it.
    """
    errors = {
        l_p: np.median(
            [
                prediction_error(presets.EQ18_SYSTEM, siso_clean, l_p, SISO_L_F, 1e-3, seed)
                for seed in range(20)
            ]
        )
        for l_p in (3, 4)
    }
    logger.info("Median prediction errors %s", errors)

    assert errors[3] < 1e-1
    assert errors[4] > 1e2
