# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Helper utilities for integration tests."""

import logging
import math
import typing

import numpy as np

import experiment
import lti
import predictor
from page import behavioral_data_from_trajectory, split_recent

logger = logging.getLogger(__name__)


def random_system(seed: int, n_x: int) -> lti.StateSpace:
    """Draw a random stable single-input single-output system.

    Args:
        seed: The generator seed.
        n_x: The state dimension.

    Returns:
        The system with spectral radius 0.8.
    """
    generator = np.random.default_rng(seed)
    A = generator.normal(size=(n_x, n_x))
    A = 0.8 * A / max(np.abs(np.linalg.eigvals(A)))
    return lti.StateSpace(
        A=A,
        B=generator.normal(size=(n_x, 1)),
        C=generator.normal(size=(1, n_x)),
        D=np.zeros((1, 1)),
    )


def prediction_error(
    system: lti.StateSpace, clean: lti.Trajectory, l_p: int, l_f: int, delta: float, seed: int
) -> float:
    """Error of a noisy-data prediction of a fresh trajectory.

    Args:
        system: The true system.
        clean: The clean historical trajectory.
        l_p: The past window length.
        l_f: The future window length.
        delta: The noise bound of the historical and recent outputs.
        seed: The seed of the noise, the recent state and the inputs.

    Returns:
        The Euclidean norm of the future output prediction error.
    """
    generator = np.random.default_rng(seed)
    noise = lti.NoiseModel(delta=delta, seed=seed)
    noisy = lti.add_noise(clean.outputs, noise, rng=generator)
    data = behavioral_data_from_trajectory(clean.inputs, noisy, l_p + l_f, l_p, delta)
    inputs = 2.0 * generator.normal(size=l_p + l_f)
    outputs = lti.simulate(system, generator.normal(size=system.n_x), inputs)
    recent = split_recent(inputs[:l_p], lti.add_noise(outputs[:l_p], noise, rng=generator), l_p)
    prediction = predictor.predict(predictor.build_predictor(data, recent), inputs[l_p:])
    return float(np.linalg.norm(prediction.y_f_hat - outputs[l_p:, 0]))


def finite_records(
    records: typing.Iterable[experiment.TrialRecord],
) -> list[experiment.TrialRecord]:
    """Drop the rows of failed trials.

    Args:
        records: The sweep rows.

    Returns:
        The rows with a finite true cost.
    """
    kept = [record for record in records if math.isfinite(record.c_check)]
    logger.info("Kept %s finite rows", len(kept))
    return kept


def count_inversions(values: typing.Sequence[float]) -> int:
    """Count the adjacent pairs that decrease.

    Args:
        values: The sequence.

    Returns:
        The number of indices i with values[i + 1] < values[i].
    """
    return sum(1 for current, following in zip(values, values[1:]) if following < current)
