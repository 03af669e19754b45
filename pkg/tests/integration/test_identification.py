# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Integration tests for the observability index identification."""

import logging

import lti
import obs_index
import presets
from page import page_matrix
from tests.integration.conftest import SISO_L_ID

logger = logging.getLogger(__name__)


def test_identification_finds_observability_index(trials: int):
    """
    arrange: given seeded noisy benchmark data with T = 160 and delta = 1e-3.
    act: when the observability index is identified with confirmed stops for every seed.
    assert: the index 3 is returned on at least 98% of the seeds.
    """
    correct = 0
    for seed in range(trials):
        clean = lti.generate_historical(presets.EQ18_SYSTEM, SISO_L_ID, 20, 2.0, seed)
        noise = lti.NoiseModel(delta=1e-3, seed=seed + 10_000)

        report = obs_index.identify_with_scaling(
            presets.EQ18_SYSTEM, clean.inputs, noise, SISO_L_ID
        )

        if report.l_o == 3:
            correct += 1
        else:
            logger.warning("Seed %s identified %s\n%s", seed, report.l_o, report.to_table())
        if report.overruled_at:
            logger.info("Seed %s overruled stops at %s", seed, report.overruled_at)

    assert correct >= 0.98 * trials


def test_noisy_rank_rule_never_overshoots(trials: int):
    """
    arrange: given seeded noisy benchmark data with T = 160 and delta = 1e-3.
    act: when the plain noisy-rank stopping rule runs for every seed.
    assert: no seed returns more than 3 and at least 90% return 3.
    """
    results = []
    for seed in range(trials):
        clean = lti.generate_historical(presets.EQ18_SYSTEM, SISO_L_ID, 20, 2.0, seed)
        noisy = lti.add_noise(clean.outputs, lti.NoiseModel(delta=1e-3, seed=seed + 10_000))

        report = obs_index.identify_observability_index(
            page_matrix(clean.inputs, SISO_L_ID), page_matrix(noisy, SISO_L_ID), 1e-3, SISO_L_ID
        )

        results.append(report.l_o)
        if report.l_o != 3:
            logger.warning("Seed %s stopped early at %s\n%s", seed, report.l_o, report.to_table())

    # T = 160 is below the 4 L^2 + L samples of the input design, so sigma_min(H_3)
    # sometimes falls under l_h * delta; H_4 is rank deficient and always stops.
    assert all(l_o is not None and l_o <= 3 for l_o in results)
    assert results.count(3) >= 0.9 * trials


def test_scaling_check_separates_window_lengths(siso_clean: lti.Trajectory):
    """
    arrange: given the benchmark input scaled by growing factors.
    act: when the sigma_min trace is collected for l_p = 3 and l_p = 4.
    assert: only the observability index passes the proportional growth check.
    """
    noise = lti.NoiseModel(delta=1e-3, seed=7)
    alphas = (1.0, 2.0, 4.0, 8.0, 16.0)

    verdicts = {
        l_p: obs_index.scaling_heuristic(
            obs_index.collect_scaling_trace(
                presets.EQ18_SYSTEM, siso_clean.inputs, alphas, noise, SISO_L_ID, l_p
            )
        )
        for l_p in (3, 4)
    }

    assert verdicts == {3: True, 4: False}
