# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for identifying the observability index from noisy Page matrix data."""

import dataclasses
import logging
import typing
from enum import Enum

import numpy as np
import scipy.linalg

import lti
from exceptions import HeuristicInputError
from page import behavioral_data_from_trajectory, page_matrix, split_historical

logger = logging.getLogger(__name__)

LINEARITY_TOL = 0.05
RANK_TOL = 1e-10
SCALING_ALPHAS = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


class IdentificationStatus(str, Enum):
    """Outcome of the observability index identification.

    Attributes:
        IDENTIFIED: The stopping rule triggered and the index was returned.
        INCONCLUSIVE: The stopping rule never triggered or triggered at k = 1.
    """

    def __str__(self) -> str:
        """Interpolate to string value.

        Returns:
            The enum string value.
        """
        return self.value

    IDENTIFIED = "identified"
    INCONCLUSIVE = "inconclusive"


@dataclasses.dataclass(frozen=True)
class ObsIndexReport:
    """Result of the observability index identification.

    Attributes:
        l_o: The identified index, None when inconclusive.
        status: Whether the index was identified.
        sigma_min_by_k: The pairs (k, sigma_min(H_k)) for every k tried.
        threshold_used: The noise threshold l_h * delta.
        overruled_at: The k whose stop was overruled by a full-rank check.
    """

    l_o: int | None
    status: IdentificationStatus
    sigma_min_by_k: tuple[tuple[int, float], ...]
    threshold_used: float
    overruled_at: tuple[int, ...] = ()

    @property
    def identified(self) -> bool:
        """Whether the index was identified."""
        return self.status == IdentificationStatus.IDENTIFIED

    def to_table(self) -> str:
        """Format the trace as a two-column table followed by the decision.

        Returns:
            The table text.
        """
        lines = ["k\tsigma_min"]
        lines.extend(f"{k}\t{sigma:.6e}" for k, sigma in self.sigma_min_by_k)
        lines.append(f"l_o\t{self.l_o if self.identified else self.status}")
        return "\n".join(lines)


def identify_observability_index(  # pylint: disable=too-many-locals
    U: typing.Any,
    Y_hat: typing.Any,
    delta: float,
    L: int,
    m: int = 1,
    p: int = 1,
    rank_tol: float = RANK_TOL,
    full_rank: typing.Callable[[int], bool] | None = None,
) -> ObsIndexReport:
    """Grow the past window until the stacked matrix loses rank against the noise level.

    For k = 1, ..., L - 1 the data are split with l_p = k; the first k with
    sigma_min(H_k) <= l_h * delta returns l_o = k - 1. A numerical floor of
    rank_tol * sigma_max applies so noiseless data stop at exact rank loss.
    When full_rank is given it is asked at every stop whether the clean H_k is
    full row rank after all; a positive answer overrules the stop and the
    search continues with k + 1.

    Args:
        U: The input Page matrix with m * L rows.
        Y_hat: The noisy output Page matrix with p * L rows.
        delta: The entrywise noise bound.
        L: The block length.
        m: The input dimension.
        p: The output dimension.
        rank_tol: The relative floor of the rank test.
        full_rank: Optional check of the clean H_k, called with k.

    Returns:
        The identification report.
    """
    inputs = np.asarray(U, dtype=float)
    outputs = np.asarray(Y_hat, dtype=float)
    l_h = inputs.shape[1]
    threshold = l_h * delta
    trace: list[tuple[int, float]] = []
    overruled: list[int] = []
    for k in range(1, L):
        H = split_historical(inputs, outputs, k, m=m, p=p, delta=delta).H
        singular_values = scipy.linalg.svdvals(H)
        sigma_min = float(singular_values[-1]) if H.shape[0] <= H.shape[1] else 0.0
        trace.append((k, sigma_min))
        logger.debug("k=%s sigma_min=%.3e", k, sigma_min)
        if sigma_min > max(threshold, rank_tol * float(singular_values[0])):
            continue
        if full_rank is not None and H.shape[0] <= H.shape[1] and full_rank(k):
            logger.info("Stop at k=%s overruled, sigma_min=%.3e is full rank", k, sigma_min)
            overruled.append(k)
            continue
        if k == 1:
            break
        logger.info("Identified observability index l_o=%s", k - 1)
        return ObsIndexReport(
            l_o=k - 1,
            status=IdentificationStatus.IDENTIFIED,
            sigma_min_by_k=tuple(trace),
            threshold_used=threshold,
            overruled_at=tuple(overruled),
        )
    logger.warning("Observability index identification is inconclusive for L=%s", L)
    return ObsIndexReport(
        l_o=None,
        status=IdentificationStatus.INCONCLUSIVE,
        sigma_min_by_k=tuple(trace),
        threshold_used=threshold,
        overruled_at=tuple(overruled),
    )


def scaling_heuristic(
    sigma_min_vs_alpha: typing.Iterable[tuple[float, float]],
    linearity_tol: float = LINEARITY_TOL,
) -> bool:
    """Decide whether sigma_min grows proportionally with the input scale.

    The fitted model is sigma_min = slope * alpha, a least-squares line through
    the origin with no intercept term: clean data collected from rest satisfy
    H(alpha) = alpha * H(1). An affine trace with a nonzero intercept therefore
    fails the check. Proportional growth means the clean matrix is full row
    rank, a flat trace means the smallest singular value is only noise.

    Args:
        sigma_min_vs_alpha: The (alpha, sigma_min(H(alpha))) points.
        linearity_tol: The largest accepted relative residual of the fit.

    Raises:
        HeuristicInputError: If fewer than three distinct scales are given.

    Returns:
        Whether the fit has positive slope and relative residual below linearity_tol.
    """
    points = np.asarray(list(sigma_min_vs_alpha), dtype=float).reshape(-1, 2)
    if np.unique(points[:, 0]).size < 3:
        raise HeuristicInputError("The scaling heuristic needs at least 3 distinct scales")
    alphas, sigmas = points[:, 0], points[:, 1]
    solution, *_ = scipy.linalg.lstsq(alphas.reshape(-1, 1), sigmas)
    slope = float(solution[0])
    scale = float(np.linalg.norm(sigmas))
    if scale == 0:
        return False
    residual = float(np.linalg.norm(sigmas - slope * alphas)) / scale
    logger.debug("Scaling fit slope=%.3e relative residual=%.3e", slope, residual)
    return slope > 0 and residual < linearity_tol


def collect_scaling_trace(
    sys: lti.StateSpace,
    u: typing.Any,
    alphas: typing.Iterable[float],
    noise: lti.NoiseModel,
    L: int,
    l_p: int,
) -> list[tuple[float, float]]:
    """Replay scaled copies of an input from rest and record sigma_min of the noisy data.

    Args:
        sys: The system used to collect the experiments.
        u: The base historical input.
        alphas: The input scales.
        noise: The measurement noise; its seed drives every experiment.
        L: The block length.
        l_p: The past window length under test.

    Returns:
        The (alpha, sigma_min(H(alpha))) points.
    """
    base = lti.as_samples(u, width=sys.m)
    generator = noise.generator()
    trace = []
    for alpha in alphas:
        clean = lti.simulate(sys, np.zeros(sys.n_x), alpha * base)
        noisy = lti.add_noise(clean, noise, rng=generator)
        H = behavioral_data_from_trajectory(alpha * base, noisy, L, l_p).H
        trace.append((float(alpha), float(scipy.linalg.svdvals(H)[-1])))
    return trace


def identify_with_scaling(
    sys: lti.StateSpace,
    u: typing.Any,
    noise: lti.NoiseModel,
    L: int,
    alphas: typing.Sequence[float] = SCALING_ALPHAS,
    rank_tol: float = RANK_TOL,
) -> ObsIndexReport:
    """Identify the observability index of a single-output system, confirming every stop.

    The noisy-rank stopping rule runs on data collected from rest with the
    input u. Each stop is checked by replaying scaled copies of u: when
    sigma_min(H_k) grows proportionally with the scale, the clean H_k is full
    row rank and the stop came from noise, so the search continues.

    Args:
        sys: The single-output system used to collect the experiments.
        u: The historical input.
        noise: The measurement noise of every experiment.
        L: The block length.
        alphas: The input scales of the confirmation.
        rank_tol: The relative floor of the rank test.

    Returns:
        The identification report.
    """
    base = lti.as_samples(u, width=sys.m)
    noisy = lti.add_noise(lti.simulate(sys, np.zeros(sys.n_x), base), noise)

    def full_rank(k: int) -> bool:
        """Check whether the clean H_k is full row rank with scaled inputs.

        Args:
            k: The past window length.

        Returns:
            Whether sigma_min(H_k) grows proportionally with the input scale.
        """
        return scaling_heuristic(collect_scaling_trace(sys, base, alphas, noise, L, k))

    return identify_observability_index(
        page_matrix(base, L),
        page_matrix(noisy, L),
        noise.delta,
        L,
        m=sys.m,
        rank_tol=rank_tol,
        full_rank=full_rank,
    )
