# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for reading and validating problem and experiment configurations."""

import dataclasses
import logging
import math
import typing
from enum import Enum
from pathlib import Path

import numpy as np
import pydantic
import yaml

import lti
import presets
from exceptions import BehecoBaseError

logger = logging.getLogger(__name__)

DEFAULT_DELTAS = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
DEFAULT_TRIALS = 50


class ConfigInvalidError(Exception):
    """Raised when a configuration file is invalid.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str | None = None):
        """Initialize a new instance of the ConfigInvalidError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


class ConfigFileError(ConfigInvalidError):
    """Represents an error with an unreadable or malformed configuration file."""


class InvalidSystemError(ConfigInvalidError):
    """Represents an error with invalid system matrices."""


class InvalidHorizonError(ConfigInvalidError):
    """Represents an error with invalid window lengths or recent data."""


class InvalidWeightsError(ConfigInvalidError):
    """Represents an error with invalid cost weights or references."""


class InvalidConstraintError(ConfigInvalidError):
    """Represents an error with invalid input or output bounds."""


class InvalidDeltaGridError(ConfigInvalidError):
    """Represents an error with an invalid noise bound grid."""


class InvalidPresetError(ConfigInvalidError):
    """Represents an error with an unknown preset or scenario override."""


class InvalidSolverOptionsError(ConfigInvalidError):
    """Represents an error with invalid solver options."""


class Preset(str, Enum):
    """Experiment presets.

    Attributes:
        SISO: The single-output regulation benchmark.
        ROOM_TEMP: The constrained room temperature benchmark.
        CUSTOM: The single-output regulation benchmark on a system read from file.
    """

    def __str__(self) -> str:
        """Interpolate to string value.

        Returns:
            The enum string value.
        """
        return self.value

    SISO = "siso-eq18"
    ROOM_TEMP = "room-temp"
    CUSTOM = "custom"


@dataclasses.dataclass(frozen=True)
class SolverOptions:  # pylint: disable=too-many-instance-attributes
    """Options of the minmax solvers.

    Attributes:
        term_tol: Stop alternating once the input update is below this norm.
        max_iters: The largest number of alternations.
        n_starts: The number of starts of the worst-case noise search.
        max_ascent_iters: The largest number of ascent steps per start.
        grad_tol: Stop ascending once the projected step is below this norm.
        feas_tol: The tolerance of the noise constraints.
        pinv_tol: The relative truncation tolerance of pseudoinverses.
        rank_tol: The relative singular value floor of rank tests.
        seed: The seed of the random starts.
    """

    term_tol: float = 1e-4
    max_iters: int = 50
    n_starts: int = 8
    max_ascent_iters: int = 60
    grad_tol: float = 1e-8
    feas_tol: float = 1e-8
    pinv_tol: float = 1e-12
    rank_tol: float = 1e-10
    seed: int = 0

    @classmethod
    def from_mapping(cls, data: typing.Mapping[str, typing.Any] | None) -> "SolverOptions":
        """Build solver options from a configuration section.

        Args:
            data: The solver section; defaults when None.

        Raises:
            InvalidSolverOptionsError: If an option is unknown or out of range.

        Returns:
            The solver options.
        """
        if not data:
            return cls()
        known = {field.name: field.type for field in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise InvalidSolverOptionsError(f"Unknown solver options {unknown}")
        values: dict[str, typing.Any] = {}
        for name, value in data.items():
            try:
                values[name] = int(value) if known[name] in (int, "int") else float(value)
            except (TypeError, ValueError) as exc:
                raise InvalidSolverOptionsError(f"Invalid value for solver option {name}") from exc
        options = cls(**values)
        if min(options.max_iters, options.n_starts, options.max_ascent_iters) < 1:
            raise InvalidSolverOptionsError("Iteration counts and starts must be at least 1")
        if min(options.term_tol, options.grad_tol, options.feas_tol, options.pinv_tol) <= 0:
            raise InvalidSolverOptionsError("Solver tolerances must be positive")
        return options


class _FrozenModel(pydantic.BaseModel):
    """Base of the raw configuration file sections, immutable and rejecting unknown keys."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")


class SystemModel(_FrozenModel):
    """System matrices section.

    Attributes:
        A: The state matrix.
        B: The input matrix.
        C: The output matrix.
        D: The feedthrough matrix, zero when omitted.
    """

    A: list[list[float]]
    B: list[list[float]]
    C: list[list[float]]
    D: list[list[float]] | None = None


class GenerateModel(_FrozenModel):
    """Recipe for simulating historical data from the configured system.

    Attributes:
        n_blocks: The number of Page blocks.
        input_std: The standard deviation of the inputs.
        seed: The seed of the inputs.
        averaging: The number of repeated experiments averaged.
    """

    n_blocks: int = pydantic.Field(default=20, ge=1)
    input_std: float = pydantic.Field(default=2.0, gt=0)
    seed: int = 0
    averaging: int = pydantic.Field(default=1, ge=1)


class HistoricalModel(_FrozenModel):
    """Historical data section: a measured CSV file or a generation recipe.

    Attributes:
        csv: The CSV file with columns t, u_*, y_*.
        generate: The generation recipe.
    """

    csv: str | None = None
    generate: GenerateModel | None = None


class RecentModel(_FrozenModel):
    """Recent window section.

    Attributes:
        u: The recent inputs, one entry or row per time step.
        y: The recent noisy outputs, one entry or row per time step.
    """

    u: list[float] | list[list[float]]
    y: list[float] | list[list[float]]


class WeightsModel(_FrozenModel):
    """Cost weights section.

    Attributes:
        q: The output weight scale, scalar or one per output.
        r: The input weight scale.
        Q: A full output weight, single-output problems only.
        R: A full input weight.
    """

    q: float | list[float] = 1.0
    r: float = 1.0
    Q: list[list[float]] | None = None
    R: list[list[float]] | None = None


class BoundsModel(_FrozenModel):
    """Box bounds; null entries are unbounded.

    Attributes:
        lower: The lower bound, scalar or per time step.
        upper: The upper bound, scalar or per time step.
    """

    lower: float | list[float | None] | None = None
    upper: float | list[float | None] | None = None


class ConstraintsModel(_FrozenModel):
    """Constraints section.

    Attributes:
        u_box: The bounds on the future inputs.
        y_box: The bounds of every output; null entries are unconstrained.
    """

    u_box: BoundsModel | None = None
    y_box: list[BoundsModel | None] | None = None


class ProblemModel(_FrozenModel):  # pylint: disable=too-many-instance-attributes
    """Raw problem configuration file.

    Attributes:
        system: The system matrices, required for generated data.
        historical: The historical data section.
        L: The block length used for identification.
        l_p: The past window length, scalar or one per output; identified when omitted.
        l_f: The future window length.
        delta: The entrywise noise bound.
        noise_seed: The seed of the generated noise.
        recent: The recent window; zeros when omitted.
        weights: The cost weights.
        reference: The output reference, scalar, one per output or a full vector.
        u_f: The future input evaluated by predict.
        solver: The solver options.
        constraints: The constraints.
    """

    system: SystemModel | None = None
    historical: HistoricalModel
    L: int = pydantic.Field(ge=2)
    l_p: int | list[int] | None = None
    l_f: int = pydantic.Field(ge=1)
    delta: float = pydantic.Field(ge=0)
    noise_seed: int = 0
    recent: RecentModel | None = None
    weights: WeightsModel = WeightsModel()
    reference: float | list[float] = 0.0
    u_f: list[float] | None = None
    solver: dict[str, float] | None = None
    constraints: ConstraintsModel | None = None


class ExperimentModel(_FrozenModel):  # pylint: disable=too-many-instance-attributes
    """Raw experiment configuration file.

    Attributes:
        preset: The preset name.
        deltas: The noise bound grid.
        trials: The number of trials per noise bound.
        seed_base: The seed of the first trial.
        identification_delta: The noise bound of the identification data.
        processes: The number of worker processes.
        out: The CSV result file.
        trajectories_out: The per-trial trajectory file.
        scenario: Overrides of the preset scenario fields.
        system_file: The system matrices file of the custom preset.
    """

    preset: str
    deltas: list[float] = list(DEFAULT_DELTAS)
    trials: int = pydantic.Field(default=DEFAULT_TRIALS, ge=1)
    seed_base: int = 0
    identification_delta: float | None = None
    processes: int | None = pydantic.Field(default=None, ge=1)
    out: str | None = None
    trajectories_out: str | None = None
    scenario: dict[str, typing.Any] = {}
    system_file: str | None = None


def _load_document(path: Path) -> dict[str, typing.Any]:
    """Read a JSON or YAML document.

    Args:
        path: The configuration file.

    Raises:
        ConfigFileError: If the file cannot be read or is not a mapping.

    Returns:
        The parsed mapping.
    """
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigFileError(f"Failed to read configuration file {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigFileError(f"Configuration file {path} is not valid JSON or YAML") from exc
    if not isinstance(document, dict):
        raise ConfigFileError(f"Configuration file {path} must hold a mapping")
    return document


ModelT = typing.TypeVar("ModelT", bound=pydantic.BaseModel)


def _validate(
    model: type[ModelT], document: typing.Mapping[str, typing.Any], path: Path
) -> ModelT:
    """Validate a document against a raw configuration model.

    Args:
        model: The model class.
        document: The parsed document.
        path: The file the document came from.

    Raises:
        ConfigFileError: If validation fails.

    Returns:
        The validated model.
    """
    try:
        return model.model_validate(document)
    except pydantic.ValidationError as exc:
        raise ConfigFileError(f"Invalid configuration file {path}: {exc}") from exc


def _parse_system(system: SystemModel | None) -> lti.StateSpace | None:
    """Convert the system section.

    Args:
        system: The raw system section.

    Raises:
        InvalidSystemError: If the matrices are inconsistent.

    Returns:
        The system, None when the section is absent.
    """
    if system is None:
        return None
    try:
        return lti.StateSpace.from_dict(system.model_dump())
    except (BehecoBaseError, ValueError) as exc:
        raise InvalidSystemError(f"Invalid system matrices: {exc}") from exc


def _parse_l_p(l_p: int | list[int] | None, L: int, p: int) -> tuple[int, ...] | None:
    """Convert the past window length to one entry per output.

    Args:
        l_p: The raw past window length.
        L: The identification block length.
        p: The number of outputs.

    Raises:
        InvalidHorizonError: If a length is out of range or the count does not match.

    Returns:
        One past window length per output, None when it should be identified.
    """
    if l_p is None:
        return None
    lengths = (l_p,) * p if isinstance(l_p, int) else tuple(l_p)
    if len(lengths) != p:
        raise InvalidHorizonError(
            f"Need one past window length per output ({p}), got {len(lengths)}"
        )
    if any(length < 1 or length >= L for length in lengths):
        raise InvalidHorizonError(f"Past window lengths must lie in [1, {L - 1}], got {lengths}")
    return lengths


def _parse_q(q: float | list[float], p: int) -> tuple[float, ...]:
    """Convert the output weight scale to one entry per output.

    Args:
        q: The raw output weight scale.
        p: The number of outputs.

    Raises:
        InvalidWeightsError: If a scale is negative or the count does not match.

    Returns:
        One output weight scale per output.
    """
    scales = (float(q),) * p if isinstance(q, (int, float)) else tuple(float(v) for v in q)
    if len(scales) != p:
        raise InvalidWeightsError(f"Need one output weight per output ({p}), got {len(scales)}")
    if any(scale < 0 for scale in scales):
        raise InvalidWeightsError("Output weights must be nonnegative")
    return scales


def _parse_matrix_weight(
    matrix: list[list[float]] | None, size: int, name: str, positive_definite: bool
) -> np.ndarray | None:
    """Convert a full weight matrix.

    Args:
        matrix: The raw matrix.
        size: The expected dimension.
        name: The weight name used in error messages.
        positive_definite: Require strictly positive eigenvalues.

    Raises:
        InvalidWeightsError: If the matrix has the wrong size or is not (semi)definite.

    Returns:
        The matrix, None when absent.
    """
    if matrix is None:
        return None
    weight = np.asarray(matrix, dtype=float)
    if weight.shape != (size, size):
        raise InvalidWeightsError(f"Weight {name} must be {size} square, got {weight.shape}")
    if not np.allclose(weight, weight.T):
        raise InvalidWeightsError(f"Weight {name} must be symmetric")
    smallest = float(np.linalg.eigvalsh(weight)[0])
    floor = 0.0 if positive_definite else -1e-12
    if smallest <= floor:
        raise InvalidWeightsError(f"Weight {name} is not definite enough")
    return weight


def _parse_reference(reference: float | list[float], p: int, l_f: int) -> tuple[np.ndarray, ...]:
    """Convert the output reference to one l_f vector per output.

    Args:
        reference: A scalar, one constant per output, or for one output a full l_f vector.
        p: The number of outputs.
        l_f: The future window length.

    Raises:
        InvalidWeightsError: If the number of entries fits none of the forms.

    Returns:
        The reference of every output.
    """
    if isinstance(reference, (int, float)):
        return tuple(np.full(l_f, float(reference)) for _ in range(p))
    values = [float(v) for v in reference]
    if len(values) == p:
        return tuple(np.full(l_f, value) for value in values)
    if p == 1 and len(values) == l_f:
        return (np.array(values),)
    raise InvalidWeightsError(
        f"Reference needs 1, {p} (per output) or, for one output, {l_f} entries; got {len(values)}"
    )


def _parse_bounds(bounds: BoundsModel | None, size: int, name: str) -> BoundsModel | None:
    """Validate box bounds.

    Args:
        bounds: The raw bounds.
        size: The number of bounded entries.
        name: The box name used in error messages.

    Raises:
        InvalidConstraintError: If a bound list has the wrong length or bounds cross.

    Returns:
        The bounds, None when absent.
    """
    if bounds is None:
        return None
    expanded = []
    for bound, default in ((bounds.lower, -math.inf), (bounds.upper, math.inf)):
        if bound is None:
            expanded.append(np.full(size, default))
        elif isinstance(bound, (int, float)):
            expanded.append(np.full(size, float(bound)))
        elif len(bound) != size:
            raise InvalidConstraintError(f"Bounds of {name} need {size} entries, got {len(bound)}")
        else:
            expanded.append(np.array([default if v is None else float(v) for v in bound]))
    if np.any(expanded[0] > expanded[1]):
        raise InvalidConstraintError(f"Lower bounds of {name} exceed its upper bounds")
    return bounds


@dataclasses.dataclass(frozen=True, eq=False)
class ProblemConfig:  # pylint: disable=too-many-instance-attributes
    """Validated problem description shared by the single-problem subcommands.

    Attributes:
        system: The true system when configured.
        trajectory: The historical trajectory with noisy outputs.
        clean: The clean historical trajectory when it was generated.
        L: The identification block length.
        l_p: One past window length per output, None when it must be identified.
        l_f: The future window length.
        delta: The entrywise noise bound.
        recent_u: The recent inputs, None for zeros.
        recent_y: The recent noisy outputs, None for zeros.
        q: The output weight scale of every output.
        Q_full: A full output weight for single-output problems.
        R: The input weight.
        references: The reference of every output.
        u_f: The future input evaluated by predict.
        solver: The solver options.
        u_box: The bounds on the future inputs.
        y_boxes: The bounds of every output.
        m: The input dimension.
        p: The output dimension.
    """

    system: lti.StateSpace | None
    trajectory: lti.Trajectory
    clean: lti.Trajectory | None
    L: int
    l_p: tuple[int, ...] | None
    l_f: int
    delta: float
    recent_u: np.ndarray | None
    recent_y: np.ndarray | None
    q: tuple[float, ...]
    Q_full: np.ndarray | None
    R: np.ndarray
    references: tuple[np.ndarray, ...]
    u_f: np.ndarray | None
    solver: SolverOptions
    u_box: BoundsModel | None
    y_boxes: tuple[BoundsModel | None, ...]

    @property
    def m(self) -> int:
        """The input dimension."""
        return self.trajectory.inputs.shape[1]

    @property
    def p(self) -> int:
        """The output dimension."""
        return self.trajectory.outputs.shape[1]

    def joint_weights(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Weights and reference for the time-major stacked future outputs of all channels.

        Returns:
            The tuple (Q, R, r_f).
        """
        if self.Q_full is not None:
            Q = self.Q_full
        else:
            Q = np.kron(np.eye(self.l_f), np.diag(self.q))
        return Q, self.R, np.column_stack(self.references).reshape(-1)

    def output_weight(self, i: int) -> np.ndarray:
        """The output weight of output i on its own future window.

        Args:
            i: The zero-based output index.

        Returns:
            The weight matrix.
        """
        if self.Q_full is not None:
            return self.Q_full
        return self.q[i] * np.eye(self.l_f)

    def recent_window(self, length: int) -> tuple[np.ndarray, np.ndarray]:
        """The recent inputs and outputs, zeros when none were configured.

        Args:
            length: The number of samples needed.

        Raises:
            InvalidHorizonError: If the configured window is too short.

        Returns:
            The pair (inputs, outputs) of shapes (T_r, m) and (T_r, p).
        """
        if self.recent_u is None or self.recent_y is None:
            return np.zeros((length, self.m)), np.zeros((length, self.p))
        if min(self.recent_u.shape[0], self.recent_y.shape[0]) < length:
            raise InvalidHorizonError(f"Recent window needs at least {length} samples")
        return self.recent_u, self.recent_y

    @classmethod
    def from_file(cls, path: Path) -> "ProblemConfig":
        """Read and validate a problem configuration file.

        Args:
            path: The JSON or YAML file.

        Raises:
            ConfigFileError: If the file is unreadable or malformed.
            InvalidHorizonError: If the historical or recent data are inconsistent.
            InvalidWeightsError: If a weight does not match the problem.

        Returns:
            The problem configuration.
        """
        raw = _validate(ProblemModel, _load_document(path), path)
        system = _parse_system(raw.system)
        trajectory, clean = _parse_historical(raw, system, path.parent)
        m, p = trajectory.inputs.shape[1], trajectory.outputs.shape[1]
        recent_u, recent_y = _parse_recent(raw.recent, m, p)
        Q_full = _parse_matrix_weight(raw.weights.Q, raw.l_f, "Q", positive_definite=False)
        if Q_full is not None and p != 1:
            raise InvalidWeightsError("A full output weight Q is only supported for one output")
        R = _parse_matrix_weight(raw.weights.R, m * raw.l_f, "R", positive_definite=True)
        if raw.weights.r <= 0 and R is None:
            raise InvalidWeightsError("Input weight r must be positive")
        u_f = None if raw.u_f is None else np.asarray(raw.u_f, dtype=float)
        if u_f is not None and u_f.shape[0] != m * raw.l_f:
            raise InvalidHorizonError(f"u_f needs {m * raw.l_f} entries, got {u_f.shape[0]}")
        constraints = raw.constraints or ConstraintsModel()
        y_boxes = tuple(constraints.y_box) if constraints.y_box is not None else (None,) * p
        if len(y_boxes) != p:
            raise InvalidConstraintError(
                f"Need one y_box entry per output ({p}), got {len(y_boxes)}"
            )
        return cls(
            system=system,
            trajectory=trajectory,
            clean=clean,
            L=raw.L,
            l_p=_parse_l_p(raw.l_p, raw.L, p),
            l_f=raw.l_f,
            delta=raw.delta,
            recent_u=recent_u,
            recent_y=recent_y,
            q=_parse_q(raw.weights.q, p),
            Q_full=Q_full,
            R=R if R is not None else raw.weights.r * np.eye(m * raw.l_f),
            references=_parse_reference(raw.reference, p, raw.l_f),
            u_f=u_f,
            solver=SolverOptions.from_mapping(raw.solver),
            u_box=_parse_bounds(constraints.u_box, m * raw.l_f, "u_box"),
            y_boxes=tuple(
                _parse_bounds(box, raw.l_f, f"y_box[{i}]") for i, box in enumerate(y_boxes)
            ),
        )


def _parse_historical(
    raw: ProblemModel, system: lti.StateSpace | None, base: Path
) -> tuple[lti.Trajectory, lti.Trajectory | None]:
    """Read or generate the historical trajectory.

    Args:
        raw: The raw problem configuration.
        system: The configured system.
        base: The directory relative paths are resolved against.

    Raises:
        ConfigFileError: If neither or both sources are given or the CSV is unreadable.
        InvalidSystemError: If data should be generated without a system.

    Returns:
        The noisy trajectory and, when generated, the clean one.
    """
    historical = raw.historical
    if (historical.csv is None) == (historical.generate is None):
        raise ConfigFileError("Historical data need exactly one of csv or generate")
    if historical.csv is not None:
        csv_path = base / historical.csv
        try:
            return lti.Trajectory.from_csv(csv_path), None
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigFileError(f"Failed to read historical data from {csv_path}") from exc
    if system is None:
        raise InvalidSystemError("Generating historical data requires the system section")
    recipe = typing.cast(GenerateModel, historical.generate)
    clean = lti.generate_historical(system, raw.L, recipe.n_blocks, recipe.input_std, recipe.seed)
    noise = lti.NoiseModel(delta=raw.delta, seed=raw.noise_seed)
    noisy = lti.averaged_collection(system, clean.inputs, recipe.averaging, noise)
    return clean.with_outputs(noisy), clean


def _parse_recent(
    recent: RecentModel | None, m: int, p: int
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Convert the recent window section.

    Args:
        recent: The raw recent window.
        m: The input dimension.
        p: The output dimension.

    Raises:
        InvalidHorizonError: If the inputs and outputs do not cover the same steps.

    Returns:
        The recent inputs and outputs, None when absent.
    """
    if recent is None:
        return None, None
    try:
        inputs = lti.as_samples(recent.u, width=m)
        outputs = lti.as_samples(recent.y, width=p)
    except (BehecoBaseError, ValueError) as exc:
        raise InvalidHorizonError(f"Invalid recent window: {exc}") from exc
    if inputs.shape[0] != outputs.shape[0]:
        raise InvalidHorizonError("Recent inputs and outputs must have the same length")
    return inputs, outputs


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:  # pylint: disable=too-many-instance-attributes
    """Validated sweep description.

    Attributes:
        preset: The experiment preset.
        deltas: The noise bound grid.
        trials: The number of trials per noise bound.
        seed_base: The seed of the first trial.
        processes: The number of worker processes, None for one per spare core.
        out: The CSV result file.
        trajectories_out: The per-trial trajectory file.
        scenario: The preset scenario with overrides applied.
        system: The system of the experiment.
    """

    preset: Preset
    deltas: tuple[float, ...]
    trials: int
    seed_base: int
    processes: int | None
    out: Path | None
    trajectories_out: Path | None
    scenario: presets.RegulationScenario | presets.SafetyScenario
    system: lti.StateSpace

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentConfig":
        """Read and validate an experiment configuration file.

        Args:
            path: The JSON or YAML file.

        Raises:
            ConfigFileError: If the file is unreadable or malformed.

        Returns:
            The experiment configuration.
        """
        raw = _validate(ExperimentModel, _load_document(path), path)
        preset = _parse_preset(raw.preset)
        scenario = _parse_scenario(preset, raw.scenario, raw.identification_delta)
        return cls(
            preset=preset,
            deltas=_parse_deltas(raw.deltas),
            trials=raw.trials,
            seed_base=raw.seed_base,
            processes=raw.processes,
            out=None if raw.out is None else Path(raw.out),
            trajectories_out=None if raw.trajectories_out is None else Path(raw.trajectories_out),
            scenario=scenario,
            system=_parse_preset_system(preset, raw.system_file, path.parent),
        )


def _parse_preset(name: str) -> Preset:
    """Convert the preset name.

    Args:
        name: The raw preset name.

    Raises:
        InvalidPresetError: If the preset is unknown.

    Returns:
        The preset.
    """
    try:
        return Preset(name.strip().lower())
    except ValueError as exc:
        raise InvalidPresetError(
            f"Unknown preset {name!r}, expected one of {[str(p) for p in Preset]}"
        ) from exc


def _parse_deltas(deltas: list[float]) -> tuple[float, ...]:
    """Validate the noise bound grid.

    Args:
        deltas: The raw grid.

    Raises:
        InvalidDeltaGridError: If the grid is empty or holds a nonpositive bound.

    Returns:
        The grid.
    """
    if not deltas:
        raise InvalidDeltaGridError("The noise bound grid must not be empty")
    if any(not math.isfinite(delta) or delta <= 0 for delta in deltas):
        raise InvalidDeltaGridError(f"Noise bounds must be positive and finite, got {deltas}")
    return tuple(float(delta) for delta in deltas)


def _parse_scenario(
    preset: Preset, overrides: typing.Mapping[str, typing.Any], identification_delta: float | None
) -> presets.RegulationScenario | presets.SafetyScenario:
    """Apply overrides to the scenario of a preset.

    Args:
        preset: The preset.
        overrides: The scenario fields to replace.
        identification_delta: The noise bound of the identification data, if overridden.

    Raises:
        InvalidPresetError: If an override names an unknown field.

    Returns:
        The scenario.
    """
    base: presets.RegulationScenario | presets.SafetyScenario = (
        presets.SafetyScenario() if preset == Preset.ROOM_TEMP else presets.RegulationScenario()
    )
    values = dict(overrides)
    if identification_delta is not None:
        values["identification_delta"] = identification_delta
    known = {field.name for field in dataclasses.fields(base)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise InvalidPresetError(f"Unknown scenario fields {unknown} for preset {preset}")
    try:
        for name, value in values.items():
            if name == "output_lower":
                values[name] = tuple(-math.inf if v is None else float(v) for v in value)
            elif name in ("recent_u", "recent_y"):
                values[name] = tuple(float(v) for v in value)
            else:
                values[name] = type(getattr(base, name))(value)
    except (TypeError, ValueError) as exc:
        raise InvalidPresetError(f"Invalid scenario override for preset {preset}") from exc
    return dataclasses.replace(base, **values)


def _parse_preset_system(preset: Preset, system_file: str | None, base: Path) -> lti.StateSpace:
    """Select the system of a preset.

    Args:
        preset: The preset.
        system_file: The system matrices file of the custom preset.
        base: The directory relative paths are resolved against.

    Raises:
        InvalidSystemError: If the custom system is missing or has more than one output.

    Returns:
        The system.
    """
    if preset == Preset.SISO:
        return presets.EQ18_SYSTEM
    if preset == Preset.ROOM_TEMP:
        return presets.ROOM_TEMP_SYSTEM
    if system_file is None:
        raise InvalidSystemError("The custom preset requires system_file")
    system_path = base / system_file
    try:
        raw = _validate(SystemModel, _load_document(system_path), system_path)
    except ConfigFileError as exc:
        raise InvalidSystemError(f"Invalid system file {system_path}") from exc
    system = typing.cast(lti.StateSpace, _parse_system(raw))
    if system.p != 1:
        raise InvalidSystemError("The custom preset supports single-output systems only")
    return system
