# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Integration tests for the linear algebra properties the certificates rely on."""

import numpy as np
import pytest
import scipy.linalg

import predictor
import presets


def test_row_append_does_not_increase_sigma_min():
    """
    arrange: given 1000 random wide matrices of varying shape and a random row each.
    act: when the row is appended.
    assert: the smallest singular value never increases.
    """
    generator = np.random.default_rng(10)
    for _ in range(1000):
        rows = int(generator.integers(1, 8))
        columns = rows + int(generator.integers(2, 10))
        matrix = generator.normal(size=(rows, columns))
        row = generator.normal(size=(1, columns))

        appended = np.vstack([matrix, row])

        assert scipy.linalg.svdvals(appended)[-1] <= scipy.linalg.svdvals(matrix)[-1] + 1e-12


def test_pseudoinverse_perturbation():
    """
    arrange: given 1000 random full row rank matrices and bounded perturbations.
    act: when both pseudoinverses are computed.
    assert: their distance is bounded by 2 max(||A^+||^2, ||B^+||^2) ||E||.
    """
    generator = np.random.default_rng(11)
    for _ in range(1000):
        matrix = generator.normal(size=(6, 15))
        perturbation = 1e-2 * generator.uniform(-1, 1, size=(6, 15))
        clean_inverse, _ = predictor.truncated_pinv(matrix)
        noisy_inverse, _ = predictor.truncated_pinv(matrix + perturbation)

        distance = np.linalg.norm(clean_inverse - noisy_inverse, 2)

        largest = max(np.linalg.norm(clean_inverse, 2), np.linalg.norm(noisy_inverse, 2))
        assert distance <= 2 * largest**2 * np.linalg.norm(perturbation, 2) + 1e-12


@pytest.mark.parametrize(
    "l_p, full_row_rank",
    [
        pytest.param(2, True, id="l_p 2"),
        pytest.param(3, True, id="l_p 3"),
        pytest.param(4, False, id="l_p 4"),
    ],
)
def test_rank_phenomena(l_p: int, full_row_rank: bool):
    """
    arrange: given the benchmark system over several input seeds.
    act: when the rank of the clean stacked matrix is verified.
    assert: it is full row rank exactly when l_p does not exceed the observability index.
    """
    for seed in range(10):
        report = predictor.verify_rank_phenomena(presets.EQ18_SYSTEM, 8, l_p, seed=seed)

        assert report.full_row_rank is full_row_rank
