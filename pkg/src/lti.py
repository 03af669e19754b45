# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for simulating discrete-time LTI systems and collecting noisy experiment data."""

import csv
import dataclasses
import logging
import typing
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.signal

from exceptions import DimensionError, NoiseBoundError, OutputWriteError

logger = logging.getLogger(__name__)

OBSERVABILITY_RANK_TOL = 1e-10


def as_samples(seq: typing.Any, width: int | None = None) -> np.ndarray:
    """Convert a sequence of scalars or vectors into a (T, width) sample matrix.

    Args:
        seq: A 1-D sequence of scalars or a 2-D sequence of per-sample vectors.
        width: The expected number of channels, checked when given.

    Raises:
        DimensionError: If the sequence is not 1-D/2-D or has the wrong channel count.

    Returns:
        The samples as a float matrix with one row per time step.
    """
    samples = np.asarray(seq, dtype=float)
    if samples.ndim == 1:
        samples = samples.reshape(-1, 1) if width in (None, 1) else samples.reshape(-1, width)
    if samples.ndim != 2:
        raise DimensionError(f"Expected a sequence of samples, got array with {samples.ndim=}")
    if width is not None and samples.shape[1] != width:
        raise DimensionError(f"Expected {width} channels per sample, got {samples.shape[1]}")
    return samples


@dataclasses.dataclass(frozen=True, eq=False)
class StateSpace:
    """Discrete-time LTI realization x_{t+1} = A x_t + B u_t, y_t = C x_t + D u_t.

    Attributes:
        A: The n_x by n_x state matrix.
        B: The n_x by m input matrix.
        C: The p by n_x output matrix.
        D: The p by m feedthrough matrix.
        n_x: The state dimension.
        m: The input dimension.
        p: The output dimension.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self) -> None:
        """Coerce the matrices to 2-D float arrays and validate their shapes.

        Raises:
            DimensionError: If the matrix dimensions are inconsistent.
        """
        for name in ("A", "B", "C", "D"):
            matrix = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if matrix.ndim != 2:
                raise DimensionError(f"Matrix {name} must be 2-D, got {matrix.ndim=}")
            object.__setattr__(self, name, matrix)
        n_x = self.A.shape[0]
        if self.A.shape != (n_x, n_x) or n_x < 1:
            raise DimensionError(f"A must be square, got shape {self.A.shape}")
        if self.B.shape[0] != n_x:
            raise DimensionError(f"B must have {n_x} rows (n_x), got {self.B.shape[0]}")
        if self.C.shape[1] != n_x:
            raise DimensionError(f"C must have {n_x} columns (n_x), got {self.C.shape[1]}")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise DimensionError(
                f"D must be p x m = {(self.C.shape[0], self.B.shape[1])}, got {self.D.shape}"
            )

    @property
    def n_x(self) -> int:
        """The state dimension."""
        return self.A.shape[0]

    @property
    def m(self) -> int:
        """The input dimension."""
        return self.B.shape[1]

    @property
    def p(self) -> int:
        """The output dimension."""
        return self.C.shape[0]

    def output_subsystem(self, index: int) -> "StateSpace":
        """Return the MISO system seen through a single output channel.

        Args:
            index: Zero-based output channel.

        Returns:
            The system with C and D restricted to the given output row.
        """
        return StateSpace(
            A=self.A, B=self.B, C=self.C[index : index + 1], D=self.D[index : index + 1]
        )

    def to_dict(self) -> dict[str, list[list[float]]]:
        """Serialize the realization as row-major nested lists.

        Returns:
            The JSON-compatible mapping {"A": ..., "B": ..., "C": ..., "D": ...}.
        """
        return {name: getattr(self, name).tolist() for name in ("A", "B", "C", "D")}

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any]) -> "StateSpace":
        """Build a realization from row-major nested lists.

        Args:
            data: The mapping with keys A, B, C and optionally D (zero when absent).

        Raises:
            DimensionError: If a required matrix is missing.

        Returns:
            The realization.
        """
        try:
            A, B, C = (np.atleast_2d(np.asarray(data[name], dtype=float)) for name in "ABC")
        except KeyError as exc:
            raise DimensionError(f"Missing system matrix {exc}") from exc
        D = data.get("D")
        if D is None:
            D = np.zeros((C.shape[0], B.shape[1]))
        return cls(A=A, B=B, C=C, D=np.atleast_2d(np.asarray(D, dtype=float)))


@dataclasses.dataclass(frozen=True, eq=False)
class Trajectory:
    """An input/output trajectory of length T.

    Attributes:
        inputs: The T by m input samples.
        outputs: The T by p output samples, clean or noisy.
        length: The number of samples T.
    """

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self) -> None:
        """Validate that inputs and outputs cover the same time steps.

        Raises:
            DimensionError: If the trajectory is empty or the lengths differ.
        """
        object.__setattr__(self, "inputs", as_samples(self.inputs))
        object.__setattr__(self, "outputs", as_samples(self.outputs))
        if self.inputs.shape[0] != self.outputs.shape[0] or self.inputs.shape[0] < 1:
            raise DimensionError(
                f"Trajectory needs T >= 1 equal-length inputs and outputs, got "
                f"{self.inputs.shape[0]} and {self.outputs.shape[0]}"
            )

    @property
    def length(self) -> int:
        """The number of samples T."""
        return self.inputs.shape[0]

    def with_outputs(self, outputs: np.ndarray) -> "Trajectory":
        """Return the same input sequence paired with other outputs.

        Args:
            outputs: The replacement T by p output samples.

        Returns:
            A new trajectory.
        """
        return Trajectory(inputs=self.inputs, outputs=outputs)

    def to_csv(self, path: Path) -> None:
        """Write the trajectory as CSV with columns t, u_1..u_m, y_1..y_p.

        Args:
            path: The destination file.

        Raises:
            OutputWriteError: If the file could not be written.
        """
        m, p = self.inputs.shape[1], self.outputs.shape[1]
        header = ["t", *(f"u_{i + 1}" for i in range(m)), *(f"y_{i + 1}" for i in range(p))]
        try:
            with path.open("w", encoding="utf-8", newline="") as csv_file:
                writer = csv.writer(csv_file)
                writer.writerow(header)
                for t, (u, y) in enumerate(zip(self.inputs, self.outputs), start=1):
                    writer.writerow([t, *(repr(float(v)) for v in (*u, *y))])
        except OSError as exc:
            raise OutputWriteError(f"Failed to write trajectory to {path}") from exc

    @classmethod
    def from_csv(cls, path: Path) -> "Trajectory":
        """Read a trajectory written by to_csv.

        Args:
            path: The CSV file with columns t, u_1..u_m, y_1..y_p.

        Raises:
            DimensionError: If the header has no input or output columns.

        Returns:
            The trajectory.
        """
        with path.open(encoding="utf-8", newline="") as csv_file:
            rows = list(csv.DictReader(csv_file))
        if not rows:
            raise DimensionError(f"Trajectory file {path} has no samples")
        input_keys = [key for key in rows[0] if key.startswith("u_")]
        output_keys = [key for key in rows[0] if key.startswith("y_")]
        if not input_keys or not output_keys:
            raise DimensionError(f"Trajectory file {path} needs u_* and y_* columns")
        return cls(
            inputs=np.array([[float(row[key]) for key in input_keys] for row in rows]),
            outputs=np.array([[float(row[key]) for key in output_keys] for row in rows]),
        )


@dataclasses.dataclass(frozen=True)
class NoiseModel:
    """Entrywise bounded measurement noise, i.i.d. uniform on [-delta, delta].

    Attributes:
        delta: The entrywise noise bound.
        seed: The seed of the generator used when none is supplied.
    """

    delta: float
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the noise bound.

        Raises:
            NoiseBoundError: If the bound is negative or not finite.
        """
        if not np.isfinite(self.delta) or self.delta < 0:
            raise NoiseBoundError(f"Noise bound must be finite and >= 0, got {self.delta}")

    def generator(self) -> np.random.Generator:
        """Create a fresh generator from the model seed.

        Returns:
            The seeded generator.
        """
        return np.random.default_rng(self.seed)


def simulate(sys: StateSpace, x1: typing.Any, u: typing.Any) -> np.ndarray:
    """Simulate the clean outputs of the system from a given initial state.

    Args:
        sys: The system realization.
        x1: The state at the first time step.
        u: The input sequence, T samples of m entries.

    Raises:
        DimensionError: If the input sequence is empty or a dimension does not match.

    Returns:
        The T by p clean output samples.
    """
    inputs = as_samples(u, width=sys.m)
    if inputs.shape[0] < 1:
        raise DimensionError("Input sequence must not be empty")
    x_init = np.asarray(x1, dtype=float).reshape(-1)
    if x_init.shape[0] != sys.n_x:
        raise DimensionError(
            f"Initial state must have n_x={sys.n_x} entries, got {x_init.shape[0]}"
        )
    _, outputs, _ = scipy.signal.dlsim((sys.A, sys.B, sys.C, sys.D, 1), inputs, x0=x_init)
    return np.asarray(outputs, dtype=float).reshape(inputs.shape[0], sys.p)


def add_noise(
    y: typing.Any, noise: NoiseModel, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Add i.i.d. uniform measurement noise bounded by delta to an output sequence.

    Args:
        y: The clean outputs.
        noise: The noise model.
        rng: The generator to draw from; a fresh one seeded by the model when omitted.

    Returns:
        The noisy outputs, with the same shape as y.
    """
    clean = np.asarray(y, dtype=float)
    generator = rng if rng is not None else noise.generator()
    return clean + generator.uniform(-noise.delta, noise.delta, size=clean.shape)


def generate_historical(
    sys: StateSpace,
    L: int,
    n_blocks: int,
    input_std: float,
    rng: np.random.Generator | int | None = None,
) -> Trajectory:
    """Collect one clean historical trajectory from rest with i.i.d. normal inputs.

    Args:
        sys: The system realization.
        L: The block length.
        n_blocks: The number of blocks; T = n_blocks * L.
        input_std: The standard deviation of every input entry.
        rng: A generator or integer seed.

    Raises:
        DimensionError: If L, n_blocks or input_std is not positive.

    Returns:
        The clean trajectory started from x1 = 0.
    """
    if L < 1 or n_blocks < 1 or input_std <= 0:
        raise DimensionError(f"Need L >= 1, n_blocks >= 1, input_std > 0; got {L=}, {n_blocks=}")
    generator = np.random.default_rng(rng)
    inputs = generator.normal(0.0, input_std, size=(n_blocks * L, sys.m))
    outputs = simulate(sys, np.zeros(sys.n_x), inputs)
    logger.debug("Generated historical trajectory with T=%s", inputs.shape[0])
    return Trajectory(inputs=inputs, outputs=outputs)


def averaged_collection(sys: StateSpace, u: typing.Any, N: int, noise: NoiseModel) -> np.ndarray:
    """Replay an input N times from rest and average the noisy outputs.

    Args:
        sys: The system realization.
        u: The input sequence replayed in every experiment.
        N: The number of repeated experiments.
        noise: The noise model; its seed drives all N draws.

    Raises:
        DimensionError: If N is smaller than one.

    Returns:
        The entrywise mean of the N noisy output sequences.
    """
    if N < 1:
        raise DimensionError(f"Need at least one repeated experiment, got {N=}")
    clean = simulate(sys, np.zeros(sys.n_x), u)
    generator = noise.generator()
    total = np.zeros_like(clean)
    for _ in range(N):
        total += add_noise(clean, noise, rng=generator)
    return total / N


def observability_matrix(sys: StateSpace, horizon: int) -> np.ndarray:
    """Stack C, CA, ..., CA^(horizon-1).

    Args:
        sys: The system realization.
        horizon: The number of block rows.

    Returns:
        The observability matrix.
    """
    blocks = [sys.C]
    for _ in range(horizon - 1):
        blocks.append(blocks[-1] @ sys.A)
    return np.vstack(blocks)


def observability_index(sys: StateSpace, tol: float = OBSERVABILITY_RANK_TOL) -> int | None:
    """Smallest horizon whose observability matrix has full column rank.

    Args:
        sys: The system realization.
        tol: Relative singular value tolerance of the rank test.

    Returns:
        The observability index, or None when the pair (C, A) is unobservable.
    """
    for horizon in range(1, sys.n_x + 1):
        singular_values = scipy.linalg.svdvals(observability_matrix(sys, horizon))
        if singular_values[-1] > tol * singular_values[0] and len(singular_values) == sys.n_x:
            return horizon
    return None


def recover_initial_state(sys: StateSpace, u_p: typing.Any, y_p: typing.Any) -> np.ndarray:
    """Least-squares state at the start of a window that reproduces the window's outputs.

    Args:
        sys: The system realization.
        u_p: The window inputs, l samples of m entries.
        y_p: The window outputs, l samples of p entries.

    Raises:
        DimensionError: If the window lengths differ.

    Returns:
        The initial state.
    """
    inputs = as_samples(u_p, width=sys.m)
    outputs = as_samples(y_p, width=sys.p)
    if inputs.shape[0] != outputs.shape[0]:
        raise DimensionError("Window inputs and outputs must have the same length")
    forced = simulate(sys, np.zeros(sys.n_x), inputs)
    observability = observability_matrix(sys, inputs.shape[0])
    state, *_ = scipy.linalg.lstsq(observability, (outputs - forced).reshape(-1))
    return state
