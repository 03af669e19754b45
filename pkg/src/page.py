# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for building Page matrices and splitting data into past and future windows."""

import dataclasses
import typing

import numpy as np
import scipy.linalg

from exceptions import DimensionError, HorizonError
from lti import as_samples

RANK_TOL = 1e-10


def page_matrix(seq: typing.Any, L: int) -> np.ndarray:
    """Build the L-Page matrix of a sequence.

    Column k stacks samples kL, ..., kL + L - 1 time-major; trailing samples beyond
    floor(T / L) * L are dropped.

    Args:
        seq: The sequence, T samples of one or more channels.
        L: The block length.

    Raises:
        HorizonError: If the sequence is shorter than one block.

    Returns:
        The (L * channels) by floor(T / L) Page matrix.
    """
    samples = as_samples(seq)
    T, width = samples.shape
    if L < 1 or T < L:
        raise HorizonError(f"Page matrix needs 1 <= L <= T, got {L=} and {T=}")
    l_h = T // L
    return samples[: l_h * L].reshape(l_h, L * width).T


def page_excitation_matrix(u: typing.Any, L: int, d: int) -> np.ndarray:
    """Stack the Page matrices of the d windows shifted by one block each.

    Args:
        u: The input sequence.
        L: The block length.
        d: The excitation order.

    Raises:
        HorizonError: If the sequence is shorter than d blocks.

    Returns:
        The stacked shifted Page matrix.
    """
    samples = as_samples(u)
    T = samples.shape[0]
    if d < 1 or T < d * L:
        raise HorizonError(f"Page excitation of order {d} needs T >= d*L = {d * L}, got {T=}")
    return np.vstack(
        [page_matrix(samples[k * L : T - (d - 1 - k) * L], L) for k in range(d)]
    )


def is_page_exciting(u: typing.Any, L: int, d: int, tol: float = RANK_TOL) -> bool:
    """Check whether an input sequence is L-Page exciting of order d.

    Args:
        u: The input sequence.
        L: The block length.
        d: The excitation order.
        tol: Singular values above tol * sigma_max count towards the rank.

    Returns:
        Whether the stacked shifted Page matrix has full row rank.
    """
    matrix = page_excitation_matrix(u, L, d)
    singular_values = scipy.linalg.svdvals(matrix)
    if singular_values.size < matrix.shape[0] or singular_values[0] == 0:
        return False
    return bool(np.count_nonzero(singular_values > tol * singular_values[0]) == matrix.shape[0])


@dataclasses.dataclass(frozen=True, eq=False)
class BehavioralData:
    """Historical data split into past and future Page matrix blocks.

    Attributes:
        U_p: The (m * l_p) by l_h past input block.
        U_f: The (m * l_f) by l_h future input block.
        Y_p: The (p * l_p) by l_h past output block (noisy).
        Y_f: The (p * l_f) by l_h future output block (noisy).
        l_p: The past window length.
        l_f: The future window length.
        m: The input dimension.
        p: The output dimension.
        delta: The entrywise noise bound of the outputs.
        L: The block length l_p + l_f.
        l_h: The number of columns.
        H: The stacked matrix [U_p; Y_p; U_f].
    """

    U_p: np.ndarray
    U_f: np.ndarray
    Y_p: np.ndarray
    Y_f: np.ndarray
    l_p: int
    l_f: int
    m: int
    p: int
    delta: float = 0.0

    @property
    def L(self) -> int:
        """The block length l_p + l_f."""
        return self.l_p + self.l_f

    @property
    def l_h(self) -> int:
        """The number of columns."""
        return self.U_p.shape[1]

    @property
    def H(self) -> np.ndarray:
        """The stacked matrix [U_p; Y_p; U_f]."""
        return np.vstack([self.U_p, self.Y_p, self.U_f])

    @property
    def u_f_rows(self) -> slice:
        """Rows of H holding the future inputs."""
        start = (self.m + self.p) * self.l_p
        return slice(start, start + self.m * self.l_f)

    @property
    def y_p_rows(self) -> slice:
        """Rows of H holding the past outputs."""
        return slice(self.m * self.l_p, (self.m + self.p) * self.l_p)

    def with_delta(self, delta: float) -> "BehavioralData":
        """Return the same data tagged with another noise bound.

        Args:
            delta: The entrywise noise bound.

        Returns:
            A copy carrying the new bound.
        """
        return dataclasses.replace(self, delta=delta)


def split_historical(
    U: np.ndarray, Y: np.ndarray, l_p: int, m: int = 1, p: int = 1, delta: float = 0.0
) -> BehavioralData:
    """Split input and output Page matrices into past and future blocks.

    Args:
        U: The input Page matrix with m * L rows.
        Y: The output Page matrix with p * L rows.
        l_p: The past window length.
        m: The input dimension.
        p: The output dimension.
        delta: The entrywise output noise bound.

    Raises:
        DimensionError: If the matrices do not describe the same blocks.
        HorizonError: If l_p is not in [1, L - 1].

    Returns:
        The split behavioral data.
    """
    U = np.asarray(U, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if U.shape[0] % m or Y.shape[0] % p:
        raise DimensionError(f"Page rows {U.shape[0]}, {Y.shape[0]} not divisible by {m=}, {p=}")
    L = U.shape[0] // m
    if Y.shape[0] // p != L or U.shape[1] != Y.shape[1]:
        raise DimensionError(f"Input Page {U.shape} and output Page {Y.shape} do not match")
    if not 1 <= l_p < L:
        raise HorizonError(f"Past window length must satisfy 1 <= l_p < L={L}, got {l_p=}")
    return BehavioralData(
        U_p=U[: m * l_p],
        U_f=U[m * l_p :],
        Y_p=Y[: p * l_p],
        Y_f=Y[p * l_p :],
        l_p=l_p,
        l_f=L - l_p,
        m=m,
        p=p,
        delta=delta,
    )


def behavioral_data_from_trajectory(
    inputs: typing.Any, outputs: typing.Any, L: int, l_p: int, delta: float = 0.0
) -> BehavioralData:
    """Build the L-Page matrices of a trajectory and split them.

    Args:
        inputs: The T by m input samples.
        outputs: The T by p output samples.
        L: The block length.
        l_p: The past window length.
        delta: The entrywise output noise bound.

    Returns:
        The split behavioral data.
    """
    input_samples = as_samples(inputs)
    output_samples = as_samples(outputs)
    return split_historical(
        page_matrix(input_samples, L),
        page_matrix(output_samples, L),
        l_p,
        m=input_samples.shape[1],
        p=output_samples.shape[1],
        delta=delta,
    )


def _check_weight(matrix: np.ndarray, name: str, positive_definite: bool) -> None:
    """Validate a symmetric weight matrix.

    Args:
        matrix: The weight.
        name: The weight name used in error messages.
        positive_definite: Require strictly positive eigenvalues instead of nonnegative ones.

    Raises:
        DimensionError: If the matrix is not square, not symmetric or not (semi)definite.
    """
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"Weight {name} must be square, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T):
        raise DimensionError(f"Weight {name} must be symmetric")
    smallest = scipy.linalg.eigvalsh(matrix)[0]
    scale = max(1.0, float(np.abs(matrix).max()))
    if positive_definite and smallest <= 0:
        raise DimensionError(f"Weight {name} must be positive definite")
    if not positive_definite and smallest < -1e-12 * scale:
        raise DimensionError(f"Weight {name} must be positive semidefinite")


@dataclasses.dataclass(frozen=True, eq=False)
class RecentTrajectory:
    """The recent window fixing the initial condition, with the regulation objective.

    Missing reference and weights default to zero and identity once the future
    window size is known.

    Attributes:
        u_p: The (m * l_p) stacked past inputs.
        y_p: The (p * l_p) stacked noisy past outputs.
        r_f: The (p * l_f) output reference, or None for zero.
        Q: The output weight, or None for identity.
        R: The input weight, or None for identity.
    """

    u_p: np.ndarray
    y_p: np.ndarray
    r_f: np.ndarray | None = None
    Q: np.ndarray | None = None
    R: np.ndarray | None = None

    def __post_init__(self) -> None:
        """Flatten the vectors and validate the weights."""
        object.__setattr__(self, "u_p", np.asarray(self.u_p, dtype=float).reshape(-1))
        object.__setattr__(self, "y_p", np.asarray(self.y_p, dtype=float).reshape(-1))
        if self.r_f is not None:
            object.__setattr__(self, "r_f", np.asarray(self.r_f, dtype=float).reshape(-1))
        if self.Q is not None:
            object.__setattr__(self, "Q", np.atleast_2d(np.asarray(self.Q, dtype=float)))
            _check_weight(self.Q, "Q", positive_definite=False)
        if self.R is not None:
            object.__setattr__(self, "R", np.atleast_2d(np.asarray(self.R, dtype=float)))
            _check_weight(self.R, "R", positive_definite=True)

    def reference(self, size: int) -> np.ndarray:
        """The output reference for a future window of the given size.

        Args:
            size: The number of stacked future outputs p * l_f.

        Raises:
            DimensionError: If a configured reference has another size.

        Returns:
            The reference vector.
        """
        if self.r_f is None:
            return np.zeros(size)
        if self.r_f.shape[0] != size:
            raise DimensionError(f"Reference has {self.r_f.shape[0]} entries, expected {size}")
        return self.r_f

    def output_weight(self, size: int) -> np.ndarray:
        """The output weight Q for a future window of the given size.

        Args:
            size: The number of stacked future outputs p * l_f.

        Raises:
            DimensionError: If a configured weight has another size.

        Returns:
            The weight matrix.
        """
        if self.Q is None:
            return np.eye(size)
        if self.Q.shape[0] != size:
            raise DimensionError(f"Weight Q is {self.Q.shape}, expected {size} square")
        return self.Q

    def input_weight(self, size: int) -> np.ndarray:
        """The input weight R for a future window of the given size.

        Args:
            size: The number of stacked future inputs m * l_f.

        Raises:
            DimensionError: If a configured weight has another size.

        Returns:
            The weight matrix.
        """
        if self.R is None:
            return np.eye(size)
        if self.R.shape[0] != size:
            raise DimensionError(f"Weight R is {self.R.shape}, expected {size} square")
        return self.R


def split_recent(
    u_r: typing.Any,
    y_r: typing.Any,
    l_p: int,
    r_f: typing.Any = None,
    Q: typing.Any = None,
    R: typing.Any = None,
) -> RecentTrajectory:
    """Stack the first l_p recent samples time-major into u_p and y_p.

    Args:
        u_r: The recent inputs, at least l_p samples.
        y_r: The recent noisy outputs, at least l_p samples.
        l_p: The past window length.
        r_f: The optional output reference.
        Q: The optional output weight.
        R: The optional input weight.

    Raises:
        HorizonError: If a sequence has fewer than l_p samples.

    Returns:
        The recent trajectory.
    """
    inputs = as_samples(u_r)
    outputs = as_samples(y_r)
    if inputs.shape[0] < l_p or outputs.shape[0] < l_p:
        raise HorizonError(
            f"Recent window needs {l_p} samples, got {inputs.shape[0]} inputs and "
            f"{outputs.shape[0]} outputs"
        )
    return RecentTrajectory(
        u_p=inputs[:l_p].reshape(-1), y_p=outputs[:l_p].reshape(-1), r_f=r_f, Q=Q, R=R
    )
