# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for the least-squares behavioral predictor and its certified error bounds."""

import dataclasses
import logging
import math
import typing

import numpy as np
import scipy.linalg

import lti
from exceptions import DimensionError, NoiseBoundError
from page import BehavioralData, RecentTrajectory, behavioral_data_from_trajectory

logger = logging.getLogger(__name__)

PINV_TOL = 1e-12
RANK_TOL = 1e-10


@dataclasses.dataclass(frozen=True, eq=False)
class PredictorState:
    """The data matrices of the predictor with the pseudoinverse of the stacked matrix.

    Attributes:
        data: The split historical data.
        recent: The recent window with the regulation objective.
        H_pinv: The truncated SVD pseudoinverse of H.
        sigma_min_H: The smallest of the min(rows, cols) singular values of H.
        sigma_max_H: The largest singular value of H.
        pinv_tol: The relative truncation tolerance of the pseudoinverse.
    """

    data: BehavioralData
    recent: RecentTrajectory
    H_pinv: np.ndarray
    sigma_min_H: float
    sigma_max_H: float
    pinv_tol: float = PINV_TOL

    @property
    def u_f_size(self) -> int:
        """The number of stacked future inputs m * l_f."""
        return self.data.m * self.data.l_f

    @property
    def y_f_size(self) -> int:
        """The number of stacked future outputs p * l_f."""
        return self.data.p * self.data.l_f

    @property
    def b_zero(self) -> np.ndarray:
        """The right-hand side [u_p; y_p; 0] for a zero future input."""
        return self.b(np.zeros(self.u_f_size))

    def b(self, u_f: typing.Any) -> np.ndarray:
        """Stack the right-hand side [u_p; y_p; u_f].

        Args:
            u_f: The (m * l_f) future input.

        Raises:
            DimensionError: If the future input has the wrong size.

        Returns:
            The stacked vector.
        """
        future = np.asarray(u_f, dtype=float).reshape(-1)
        if future.shape[0] != self.u_f_size:
            raise DimensionError(f"u_f must have {self.u_f_size} entries, got {future.shape[0]}")
        return np.concatenate([self.recent.u_p, self.recent.y_p, future])

    def gain(self) -> tuple[np.ndarray, np.ndarray]:
        """The affine prediction map y_f = K1 b(0) + K2 u_f.

        Returns:
            The pair (K1, K2) with K1 = Y_f H^+ and K2 its future input columns.
        """
        K1 = self.data.Y_f @ self.H_pinv
        return K1, K1[:, self.data.u_f_rows]

    def with_recent(self, recent: RecentTrajectory) -> "PredictorState":
        """Reuse the factorization with another recent window.

        Args:
            recent: The replacement recent window.

        Returns:
            The predictor state for the new window.
        """
        _check_recent(self.data, recent)
        return dataclasses.replace(self, recent=recent)


@dataclasses.dataclass(frozen=True)
class Prediction:
    """The prediction for one future input with its error bounds.

    Attributes:
        g_hat: The coefficient vector H^+ b(u_f).
        y_f_hat: The predicted future output Y_f g_hat.
        C_uf: The factor bounding the coefficient error by C_uf * delta.
        g_ball_radius: The coefficient error radius C_uf * delta.
        y_f_error_bound: The bound on the distance between predicted and true outputs.
        delta: The noise bound used for the radii.
        certified: Whether the small-noise condition holds and the bounds are guaranteed.
    """

    g_hat: np.ndarray
    y_f_hat: np.ndarray
    C_uf: float
    g_ball_radius: float
    y_f_error_bound: float
    delta: float
    certified: bool


@dataclasses.dataclass(frozen=True)
class RankReport:
    """Rank of the noiseless stacked data matrix.

    Attributes:
        sigma_min_clean: The smallest singular value of the clean stacked matrix.
        full_row_rank: Whether the clean stacked matrix has numerically full row rank.
        rows: The number of rows of the stacked matrix.
    """

    sigma_min_clean: float
    full_row_rank: bool
    rows: int


def _check_recent(data: BehavioralData, recent: RecentTrajectory) -> None:
    """Check that the recent window matches the historical data.

    Args:
        data: The split historical data.
        recent: The recent window.

    Raises:
        DimensionError: If a stacked vector has the wrong size.
    """
    if recent.u_p.shape[0] != data.m * data.l_p:
        raise DimensionError(
            f"u_p must have {data.m * data.l_p} entries, got {recent.u_p.shape[0]}"
        )
    if recent.y_p.shape[0] != data.p * data.l_p:
        raise DimensionError(
            f"y_p must have {data.p * data.l_p} entries, got {recent.y_p.shape[0]}"
        )


def truncated_pinv(matrix: np.ndarray, tol: float = PINV_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Compute the SVD pseudoinverse, dropping singular values below tol * sigma_max.

    Args:
        matrix: The matrix to invert.
        tol: The relative truncation tolerance.

    Returns:
        The pseudoinverse and the singular values in decreasing order.
    """
    left, singular_values, right_t = scipy.linalg.svd(matrix, full_matrices=False)
    cutoff = tol * singular_values[0] if singular_values.size else 0.0
    inverse = np.zeros_like(singular_values)
    kept = singular_values > cutoff
    inverse[kept] = 1.0 / singular_values[kept]
    return (right_t.T * inverse) @ left.T, singular_values


def build_predictor(
    data: BehavioralData, recent: RecentTrajectory, pinv_tol: float = PINV_TOL
) -> PredictorState:
    """Factorize the stacked matrix H = [U_p; Y_p; U_f].

    Args:
        data: The split historical data.
        recent: The recent window.
        pinv_tol: The relative truncation tolerance of the pseudoinverse.

    Returns:
        The predictor state.
    """
    _check_recent(data, recent)
    H_pinv, singular_values = truncated_pinv(data.H, pinv_tol)
    sigma_max = float(singular_values[0]) if singular_values.size else 0.0
    sigma_min = float(singular_values[-1]) if singular_values.size else 0.0
    logger.debug(
        "Built predictor with H of shape %s, sigma_min=%.3e, sigma_max=%.3e",
        data.H.shape,
        sigma_min,
        sigma_max,
    )
    return PredictorState(
        data=data,
        recent=recent,
        H_pinv=H_pinv,
        sigma_min_H=sigma_min,
        sigma_max_H=sigma_max,
        pinv_tol=pinv_tol,
    )


def noise_threshold(state: PredictorState) -> float:
    """The largest noise bound (exclusive) for which the bounds are certified.

    Args:
        state: The predictor state.

    Returns:
        sigma_min(H) / (2 l_h).
    """
    return state.sigma_min_H / (2 * state.data.l_h)


def check_small_noise(state: PredictorState, delta: float) -> bool:
    """Check that the noise is small against the excitation of the data.

    Args:
        state: The predictor state.
        delta: The entrywise noise bound.

    Returns:
        Whether delta < sigma_min(H) / (2 l_h).
    """
    return bool(delta < noise_threshold(state))


def coefficient_factor(state: PredictorState, g_norm: float) -> float:
    """The factor C with ||g_hat - g_bar|| <= C * delta.

    Args:
        state: The predictor state.
        g_norm: The norm of the predicted coefficient vector.

    Returns:
        2 (sqrt(l_p) + l_h ||g||) / sigma_min(H), infinite when H is rank deficient,
        that is when sigma_min(H) is at or below the truncation of the pseudoinverse.
    """
    if state.sigma_min_H <= state.pinv_tol * state.sigma_max_H:
        return math.inf
    return 2.0 * (math.sqrt(state.data.l_p) + state.data.l_h * g_norm) / state.sigma_min_H


def predict(state: PredictorState, u_f: typing.Any, delta: float | None = None) -> Prediction:
    """Predict the future outputs for a candidate future input.

    Args:
        state: The predictor state.
        u_f: The (m * l_f) future input.
        delta: The noise bound for the radii; the data's bound when omitted.

    Raises:
        NoiseBoundError: If the noise bound is negative.

    Returns:
        The prediction with its error bounds.
    """
    noise_bound = state.data.delta if delta is None else delta
    if noise_bound < 0:
        raise NoiseBoundError(f"Noise bound must be >= 0, got {noise_bound}")
    g_hat = state.H_pinv @ state.b(u_f)
    y_f_hat = state.data.Y_f @ g_hat
    g_norm = float(np.linalg.norm(g_hat))
    factor = coefficient_factor(state, g_norm)
    if noise_bound == 0:
        radius, error_bound = 0.0, 0.0
    else:
        y_f_norm = float(np.linalg.norm(state.data.Y_f, 2))
        radius = factor * noise_bound
        error_bound = (
            factor * y_f_norm * noise_bound + state.data.l_h * (g_norm + factor) * noise_bound
        )
    return Prediction(
        g_hat=g_hat,
        y_f_hat=y_f_hat,
        C_uf=factor,
        g_ball_radius=radius,
        y_f_error_bound=error_bound,
        delta=noise_bound,
        certified=check_small_noise(state, noise_bound) and state.data.p == 1,
    )


def verify_rank_phenomena(
    sys: lti.StateSpace,
    L: int,
    l_p: int,
    seed: int | np.random.Generator | None = 0,
    n_blocks: int = 20,
    input_std: float = 2.0,
    tol: float = RANK_TOL,
) -> RankReport:
    """Report the rank of the noiseless stacked matrix built from fresh data.

    Args:
        sys: The true system.
        L: The block length.
        l_p: The past window length.
        seed: The seed of the historical inputs.
        n_blocks: The number of Page columns.
        input_std: The standard deviation of the historical inputs.
        tol: Singular values above tol * sigma_max count towards the rank.

    Returns:
        The rank report.
    """
    clean = lti.generate_historical(sys, L, n_blocks, input_std, seed)
    H = behavioral_data_from_trajectory(clean.inputs, clean.outputs, L, l_p).H
    singular_values = scipy.linalg.svdvals(H)
    sigma_min = float(singular_values[-1])
    full_rank = bool(
        H.shape[0] <= H.shape[1]
        and singular_values[0] > 0
        and sigma_min > tol * singular_values[0]
    )
    return RankReport(sigma_min_clean=sigma_min, full_row_rank=full_rank, rows=H.shape[0])
