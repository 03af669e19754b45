# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for running seeded experiment sweeps over noise bounds."""

import csv
import dataclasses
import logging
import math
import multiprocessing
import typing
from pathlib import Path

import numpy as np

import lti
import robust
import sddmc
from exceptions import (
    CertificateError,
    ExperimentRunError,
    InfeasibilityError,
    OutputWriteError,
    RankCollapseError,
)
from obs_index import identify_with_scaling
from page import RecentTrajectory, behavioral_data_from_trajectory, split_recent
from predictor import build_predictor
from presets import RegulationScenario, SafetyScenario
from state import ExperimentConfig, Preset, SolverOptions

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "delta",
    "seed",
    "c_check",
    "c_star",
    "c_worst",
    "rel_subopt",
    "iterations",
    "assumption4_ok",
)
REGULATION_COLUMNS = ("c3", "converged")
SAFETY_COLUMNS = ("min_margin", "comparator_min_margin")
TRAJECTORY_HEADER = ("delta", "seed", "controller", "t", "y_1", "y_2", "u")

CellValue = float | int | bool | str | None


def _format(value: CellValue) -> str:
    """Format a CSV cell reproducibly.

    Args:
        value: The cell value.

    Returns:
        The cell text.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def relative_suboptimality(c_check: float, c_star: float) -> float:
    """Relative gap of the achieved true cost to the clean optimum.

    Args:
        c_check: The true cost of the applied input.
        c_star: The true cost of the clean optimal input.

    Returns:
        (c_check - c_star) / c_check, zero when c_check is not positive.
    """
    if not c_check > 0:
        return 0.0
    return (c_check - c_star) / c_check


@dataclasses.dataclass(frozen=True)
class TrialRecord:  # pylint: disable=too-many-instance-attributes
    """One row of a sweep.

    Attributes:
        delta: The noise bound.
        seed: The trial seed.
        c_check: The true cost of the returned input.
        c_star: The true cost of the clean optimal input.
        c_worst: The worst-case cost of the returned input.
        rel_subopt: The relative suboptimality.
        iterations: The number of alternations.
        assumption4_ok: Whether the small-noise condition held.
        extras: The preset-specific trailing columns.
    """

    delta: float
    seed: int
    c_check: float
    c_star: float
    c_worst: float
    rel_subopt: float
    iterations: int
    assumption4_ok: bool
    extras: tuple[tuple[str, CellValue], ...] = ()

    def extra(self, name: str) -> CellValue:
        """Look up a trailing column.

        Args:
            name: The column name.

        Returns:
            The value, None when the column is absent.
        """
        return dict(self.extras).get(name)

    def row(self) -> list[str]:
        """Format the record in header order.

        Returns:
            The CSV cells.
        """
        values: list[CellValue] = [
            self.delta,
            self.seed,
            self.c_check,
            self.c_star,
            self.c_worst,
            self.rel_subopt,
            self.iterations,
            self.assumption4_ok,
        ]
        values.extend(value for _, value in self.extras)
        return [_format(value) for value in values]


@dataclasses.dataclass(frozen=True)
class TrialOutcome:
    """Result of one trial.

    Attributes:
        record: The sweep row.
        trajectory_rows: The closed trajectory rows, empty when not recorded.
    """

    record: TrialRecord
    trajectory_rows: tuple[tuple[CellValue, ...], ...] = ()


@dataclasses.dataclass(frozen=True)
class SweepResult:
    """Result of an experiment sweep.

    Attributes:
        header: The CSV header.
        records: The rows in delta-major, seed-minor order.
        trajectory_rows: The closed trajectory rows.
        l_p: The past window length of every output used for control.
    """

    header: tuple[str, ...]
    records: tuple[TrialRecord, ...]
    trajectory_rows: tuple[tuple[CellValue, ...], ...]
    l_p: tuple[int, ...]

    def to_csv(self, path: Path) -> None:
        """Write the sweep rows.

        Args:
            path: The destination file.
        """
        write_csv(path, self.header, [record.row() for record in self.records])

    def trajectories_to_csv(self, path: Path) -> None:
        """Write the closed trajectory rows.

        Args:
            path: The destination file.
        """
        write_csv(
            path,
            TRAJECTORY_HEADER,
            [[_format(value) for value in row] for row in self.trajectory_rows],
        )


def write_csv(path: Path, header: typing.Sequence[str], rows: typing.Iterable[list[str]]) -> None:
    """Write a CSV file.

    Args:
        path: The destination file.
        header: The column names.
        rows: The formatted rows.

    Raises:
        OutputWriteError: If the file could not be written.
    """
    try:
        with path.open("w", encoding="utf-8", newline="") as csv_file:
            writer = csv.writer(csv_file, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OutputWriteError(f"Failed to write results to {path}") from exc


@dataclasses.dataclass(frozen=True, eq=False)
class RegulationTrial:  # pylint: disable=too-many-instance-attributes
    """Inputs of one regulation trial; shared arrays are read-only.

    Attributes:
        system: The true system.
        scenario: The regulation scenario.
        clean: The clean historical trajectory.
        l_p: The past window length.
        delta: The noise bound.
        seed: The trial seed.
        x_start: The state at the start of the recent window.
        c_star: The true cost of the clean optimal input.
        opts: The solver options.
    """

    system: lti.StateSpace
    scenario: RegulationScenario
    clean: lti.Trajectory
    l_p: int
    delta: float
    seed: int
    x_start: np.ndarray
    c_star: float
    opts: SolverOptions


@dataclasses.dataclass(frozen=True, eq=False)
class SafetyTrial:  # pylint: disable=too-many-instance-attributes
    """Inputs of one constrained trial; shared arrays are read-only.

    Attributes:
        system: The true system.
        scenario: The constrained scenario.
        clean: The clean historical trajectory.
        l_p: The past window length of every output.
        delta: The noise bound.
        seed: The trial seed.
        c_star: The true cost of the clean constrained optimal input.
        opts: The solver options.
        record_trajectory: Whether to return the closed trajectories.
    """

    system: lti.StateSpace
    scenario: SafetyScenario
    clean: lti.Trajectory
    l_p: tuple[int, ...]
    delta: float
    seed: int
    c_star: float
    opts: SolverOptions
    record_trajectory: bool = False


def _noisy_historical(
    system: lti.StateSpace, clean: lti.Trajectory, delta: float, seed: int, averaging: int
) -> lti.Trajectory:
    """Measure the historical outputs with fresh noise.

    Args:
        system: The true system.
        clean: The clean historical trajectory.
        delta: The noise bound.
        seed: The noise seed.
        averaging: The number of repeated experiments averaged.

    Returns:
        The trajectory with noisy outputs.
    """
    noise = lti.NoiseModel(delta=delta, seed=seed)
    return clean.with_outputs(lti.averaged_collection(system, clean.inputs, averaging, noise))


def identify_l_p(
    system: lti.StateSpace,
    clean: lti.Trajectory,
    L: int,
    delta: float,
    seed: int,
    fallback: int,
) -> tuple[int, ...]:
    """Identify the past window length of every output, confirming stops by input scaling.

    Args:
        system: The true system.
        clean: The clean historical trajectory.
        L: The identification block length.
        delta: The noise bound of the identification data.
        seed: The noise seed.
        fallback: The length used when the identification is inconclusive.

    Returns:
        One past window length per output.
    """
    noise = lti.NoiseModel(delta=delta, seed=seed)
    lengths = []
    for i in range(system.p):
        report = identify_with_scaling(system.output_subsystem(i), clean.inputs, noise, L)
        if report.identified and report.l_o:
            lengths.append(report.l_o)
        else:
            logger.warning("Using fallback l_p=%s for output %s", fallback, i + 1)
            lengths.append(fallback)
    logger.info(
        "Past window lengths %s, true observability index %s",
        lengths,
        lti.observability_index(system),
    )
    return tuple(lengths)


def _regulation_objective(
    scenario: RegulationScenario | SafetyScenario, p: int, m: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weights and reference for the time-major stacked outputs.

    Args:
        scenario: The scenario.
        p: The number of outputs.
        m: The number of inputs.

    Returns:
        The tuple (Q, R, r_f).
    """
    return (
        scenario.q * np.eye(p * scenario.l_f),
        scenario.r * np.eye(m * scenario.l_f),
        np.full(p * scenario.l_f, scenario.reference),
    )


def regulation_window(
    system: lti.StateSpace, scenario: RegulationScenario
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Recover a clean recent window reproducing the configured outputs.

    Args:
        system: The true system.
        scenario: The regulation scenario.

    Returns:
        The recent inputs, their clean outputs and the state at the window start.
    """
    window_u = lti.as_samples(scenario.recent_u, width=system.m)
    x_start = lti.recover_initial_state(system, window_u, scenario.recent_y)
    return window_u, lti.simulate(system, x_start, window_u), x_start


def _clean_regulation_optimum(
    system: lti.StateSpace, scenario: RegulationScenario, clean: lti.Trajectory, l_p: int
) -> tuple[np.ndarray, float]:
    """The clean optimal input and its true cost.

    Args:
        system: The true system.
        scenario: The regulation scenario.
        clean: The clean historical trajectory.
        l_p: The past window length.

    Returns:
        The clean optimal input and its true cost.
    """
    window_u, window_y, x_start = regulation_window(system, scenario)
    Q, R, r_f = _regulation_objective(scenario, system.p, system.m)
    data = behavioral_data_from_trajectory(
        clean.inputs, clean.outputs, l_p + scenario.l_f, l_p
    )
    recent = split_recent(window_u[-l_p:], window_y[-l_p:], l_p, r_f=r_f, Q=Q, R=R)
    u_star = robust.nominal_input(build_predictor(data, recent))
    return u_star, robust.true_cost(system, x_start, window_u, u_star, Q, R, r_f)


def run_regulation_trial(trial: RegulationTrial) -> TrialOutcome:
    """Solve one noisy regulation instance and score it on the true system.

    Args:
        trial: The trial inputs.

    Returns:
        The trial outcome.
    """
    scenario, system = trial.scenario, trial.system
    noisy = _noisy_historical(system, trial.clean, trial.delta, trial.seed, scenario.averaging)
    window_u = lti.as_samples(scenario.recent_u, width=system.m)
    window_y = lti.simulate(system, trial.x_start, window_u)
    generator = np.random.default_rng([trial.seed, 1])
    recent_y = lti.add_noise(window_y, lti.NoiseModel(trial.delta), rng=generator)
    Q, R, r_f = _regulation_objective(scenario, system.p, system.m)
    data = behavioral_data_from_trajectory(
        noisy.inputs, noisy.outputs, trial.l_p + scenario.l_f, trial.l_p, trial.delta
    )
    recent = split_recent(
        window_u[-trial.l_p :], recent_y[-trial.l_p :], trial.l_p, r_f=r_f, Q=Q, R=R
    )
    state = build_predictor(data, recent, trial.opts.pinv_tol)
    try:
        result = robust.alternate_solve(state, trial.opts)
    except RankCollapseError:
        logger.warning("Trial delta=%s seed=%s lost rank", trial.delta, trial.seed)
        return TrialOutcome(
            _failed_record(trial.delta, trial.seed, trial.c_star, REGULATION_COLUMNS)
        )
    try:
        c3: float | None = robust.suboptimality_certificate(state).C3
    except CertificateError:
        c3 = None
    c_check = robust.true_cost(system, trial.x_start, window_u, result.u_check, Q, R, r_f)
    return TrialOutcome(
        TrialRecord(
            delta=trial.delta,
            seed=trial.seed,
            c_check=c_check,
            c_star=trial.c_star,
            c_worst=result.c_worst,
            rel_subopt=relative_suboptimality(c_check, trial.c_star),
            iterations=result.iterations,
            assumption4_ok=result.assumption4_ok,
            extras=(("c3", c3), ("converged", result.converged)),
        )
    )


def _failed_record(
    delta: float, seed: int, c_star: float, columns: typing.Sequence[str]
) -> TrialRecord:
    """Row of a trial whose solve failed.

    Args:
        delta: The noise bound.
        seed: The trial seed.
        c_star: The clean optimal cost.
        columns: The trailing column names.

    Returns:
        The record with NaN costs.
    """
    return TrialRecord(
        delta=delta,
        seed=seed,
        c_check=math.nan,
        c_star=c_star,
        c_worst=math.nan,
        rel_subopt=math.nan,
        iterations=0,
        assumption4_ok=False,
        extras=tuple((name, None) for name in columns),
    )


def _safety_problem(
    scenario: SafetyScenario,
    trajectory: lti.Trajectory,
    l_p: tuple[int, ...],
    delta: float,
    recent_y: np.ndarray,
) -> tuple[
    sddmc.SubsystemBundle, tuple[RecentTrajectory, ...], list[sddmc.BoxConstraint | None]
]:
    """Decompose the data and build the per-output objective and boxes.

    Args:
        scenario: The constrained scenario.
        trajectory: The historical trajectory.
        l_p: The past window length of every output.
        delta: The noise bound.
        recent_y: The recent outputs of all channels.

    Returns:
        The bundle, the recent window of every output and the output boxes.
    """
    bundle = sddmc.decompose(trajectory, l_p, scenario.l_f, delta)
    p, m = bundle.p, bundle.m
    recents = sddmc.recent_per_output(
        bundle,
        np.zeros((recent_y.shape[0], m)),
        recent_y,
        r_per_output=[np.full(scenario.l_f, scenario.reference)] * p,
        Q_per_output=[scenario.q * np.eye(scenario.l_f)] * p,
        R=scenario.r * np.eye(m * scenario.l_f),
    )
    boxes: list[sddmc.BoxConstraint | None] = [
        sddmc.BoxConstraint.from_bounds(scenario.output_lower, None, scenario.l_f)
    ]
    boxes.extend([None] * (p - 1))
    return bundle, recents, boxes


def _closed_outputs(system: lti.StateSpace, window: int, u_f: np.ndarray) -> np.ndarray:
    """True future outputs from equilibrium.

    Args:
        system: The true system.
        window: The number of zero recent samples.
        u_f: The future inputs.

    Returns:
        The l_f by p clean future outputs.
    """
    future = lti.as_samples(u_f, width=system.m)
    inputs = np.vstack([np.zeros((window, system.m)), future])
    return lti.simulate(system, np.zeros(system.n_x), inputs)[window:]


def _true_margin(scenario: SafetyScenario, outputs: np.ndarray) -> float:
    """Smallest distance of the first true output to its lower bound.

    Args:
        scenario: The constrained scenario.
        outputs: The clean future outputs.

    Returns:
        The margin, negative on violation.
    """
    lower = np.asarray(scenario.output_lower, dtype=float)
    bounded = np.isfinite(lower)
    if not bounded.any():
        return math.inf
    return float(np.min(outputs[bounded, 0] - lower[bounded]))


def _safety_cost(
    system: lti.StateSpace, scenario: SafetyScenario, window: int, u_f: np.ndarray
) -> float:
    """True cost of a future input from equilibrium.

    Args:
        system: The true system.
        scenario: The constrained scenario.
        window: The number of zero recent samples.
        u_f: The future inputs.

    Returns:
        The true cost.
    """
    Q, R, r_f = _regulation_objective(scenario, system.p, system.m)
    return robust.true_cost(
        system, np.zeros(system.n_x), np.zeros(window * system.m), u_f, Q, R, r_f
    )


def _clean_safety_optimum(
    system: lti.StateSpace, scenario: SafetyScenario, clean: lti.Trajectory, l_p: tuple[int, ...]
) -> float:
    """True cost of the clean constrained optimal input.

    Args:
        system: The true system.
        scenario: The constrained scenario.
        clean: The clean historical trajectory.
        l_p: The past window length of every output.

    Returns:
        The clean optimal cost.
    """
    window = max(l_p)
    bundle, recents, boxes = _safety_problem(
        scenario, clean, l_p, 0.0, np.zeros((window, system.p))
    )
    optimum = sddmc.certainty_equivalent_solve(bundle, recents, boxes)
    return _safety_cost(system, scenario, window, optimum.u_f)


def run_safety_trial(trial: SafetyTrial) -> TrialOutcome:  # pylint: disable=too-many-locals
    """Solve one noisy constrained instance with the safe and the certainty-equivalent controller.

    Args:
        trial: The trial inputs.

    Returns:
        The trial outcome.
    """
    scenario, system = trial.scenario, trial.system
    noisy = _noisy_historical(system, trial.clean, trial.delta, trial.seed, scenario.averaging)
    window = max(trial.l_p)
    generator = np.random.default_rng([trial.seed, 1])
    recent_y = lti.add_noise(
        np.zeros((window, system.p)), lti.NoiseModel(trial.delta), rng=generator
    )
    bundle, recents, boxes = _safety_problem(scenario, noisy, trial.l_p, trial.delta, recent_y)
    try:
        comparator = sddmc.certainty_equivalent_solve(bundle, recents, boxes, opts=trial.opts)
        comparator_outputs: np.ndarray | None = _closed_outputs(system, window, comparator.u_f)
        comparator_margin: float | None = _true_margin(scenario, comparator_outputs)
    except InfeasibilityError:
        comparator, comparator_outputs, comparator_margin = None, None, None
    if comparator_margin is not None and comparator_margin < 0:
        logger.warning(
            "Certainty-equivalent input violates the output bound by %.3e (delta=%s seed=%s)",
            -comparator_margin,
            trial.delta,
            trial.seed,
        )
    try:
        result = sddmc.sddmc_solve(bundle, recents, boxes, opts=trial.opts)
    except (InfeasibilityError, RankCollapseError) as exc:
        logger.warning(
            "Trial delta=%s seed=%s has no safe input: %s", trial.delta, trial.seed, exc
        )
        record = _failed_record(trial.delta, trial.seed, trial.c_star, SAFETY_COLUMNS)
        return TrialOutcome(
            dataclasses.replace(
                record, extras=(("min_margin", None), ("comparator_min_margin", comparator_margin))
            )
        )
    outputs = _closed_outputs(system, window, result.u_check)
    c_check = _safety_cost(system, scenario, window, result.u_check)
    rows: list[tuple[CellValue, ...]] = []
    if trial.record_trajectory:
        rows.extend(_trajectory_rows(trial, "sddmc", outputs, result.u_check))
        if comparator is not None and comparator_outputs is not None:
            rows.extend(
                _trajectory_rows(trial, "certainty-equivalent", comparator_outputs, comparator.u_f)
            )
    return TrialOutcome(
        TrialRecord(
            delta=trial.delta,
            seed=trial.seed,
            c_check=c_check,
            c_star=trial.c_star,
            c_worst=result.c_worst,
            rel_subopt=relative_suboptimality(c_check, trial.c_star),
            iterations=result.iterations,
            assumption4_ok=all(result.assumption4_ok),
            extras=(
                ("min_margin", _true_margin(scenario, outputs)),
                ("comparator_min_margin", comparator_margin),
            ),
        ),
        tuple(rows),
    )


def _trajectory_rows(
    trial: SafetyTrial, controller: str, outputs: np.ndarray, u_f: np.ndarray
) -> list[tuple[CellValue, ...]]:
    """Rows of one closed trajectory.

    Args:
        trial: The trial inputs.
        controller: The controller name.
        outputs: The l_f by p clean future outputs.
        u_f: The applied inputs.

    Returns:
        One row per future time step.
    """
    inputs = np.asarray(u_f, dtype=float).reshape(outputs.shape[0], -1)
    return [
        (
            trial.delta,
            trial.seed,
            controller,
            t,
            float(outputs[t, 0]),
            float(outputs[t, 1]) if outputs.shape[1] > 1 else None,
            float(inputs[t, 0]),
        )
        for t in range(outputs.shape[0])
    ]


TrialT = typing.TypeVar("TrialT", RegulationTrial, SafetyTrial)


def _map_trials(
    function: typing.Callable[[TrialT], TrialOutcome],
    trials: typing.Sequence[TrialT],
    processes: int | None,
) -> list[TrialOutcome]:
    """Run trials in a worker pool, keeping their order.

    Args:
        function: The module-level trial function.
        trials: The trial inputs.
        processes: The number of workers, one per spare core when None.

    Raises:
        ExperimentRunError: If the worker pool failed.

    Returns:
        The outcomes in trial order.
    """
    if not trials:
        return []
    num_workers = processes or max(multiprocessing.cpu_count() - 1, 1)
    num_workers = min(len(trials), num_workers)
    if num_workers == 1:
        return [function(trial) for trial in trials]
    try:
        with multiprocessing.Pool(num_workers) as pool:
            return pool.map(function, trials)
    except multiprocessing.ProcessError as exc:
        raise ExperimentRunError("Failed to run experiment trials in parallel") from exc


def _seeds(cfg: ExperimentConfig) -> range:
    """The trial seeds of every noise bound.

    Args:
        cfg: The experiment configuration.

    Returns:
        seed_base, ..., seed_base + trials - 1.
    """
    return range(cfg.seed_base, cfg.seed_base + cfg.trials)


def run_siso_experiment(cfg: ExperimentConfig, opts: SolverOptions | None = None) -> SweepResult:
    """Sweep the single-output regulation benchmark over the noise bound grid.

    Args:
        cfg: The experiment configuration.
        opts: The solver options.

    Returns:
        The sweep result.
    """
    scenario = typing.cast(RegulationScenario, cfg.scenario)
    system = cfg.system
    clean = lti.generate_historical(
        system, scenario.L_id, scenario.n_blocks, scenario.input_std, cfg.seed_base
    )
    (l_p,) = identify_l_p(
        system,
        clean,
        scenario.L_id,
        scenario.identification_delta,
        cfg.seed_base,
        scenario.fallback_l_p,
    )
    _, c_star = _clean_regulation_optimum(system, scenario, clean, l_p)
    _, _, x_start = regulation_window(system, scenario)
    trials = [
        RegulationTrial(
            system=system,
            scenario=scenario,
            clean=clean,
            l_p=l_p,
            delta=delta,
            seed=seed,
            x_start=x_start,
            c_star=c_star,
            opts=opts or SolverOptions(),
        )
        for delta in cfg.deltas
        for seed in _seeds(cfg)
    ]
    logger.info("Running %s regulation trials with l_p=%s", len(trials), l_p)
    outcomes = _map_trials(run_regulation_trial, trials, cfg.processes)
    return SweepResult(
        header=CSV_HEADER + REGULATION_COLUMNS,
        records=tuple(outcome.record for outcome in outcomes),
        trajectory_rows=(),
        l_p=(l_p,),
    )


def run_room_temp_experiment(
    cfg: ExperimentConfig, opts: SolverOptions | None = None
) -> SweepResult:
    """Sweep the constrained room temperature benchmark over the noise bound grid.

    Args:
        cfg: The experiment configuration.
        opts: The solver options.

    Returns:
        The sweep result.
    """
    scenario = typing.cast(SafetyScenario, cfg.scenario)
    system = cfg.system
    clean = lti.generate_historical(
        system, scenario.L_id, scenario.n_blocks, scenario.input_std, cfg.seed_base
    )
    l_p = identify_l_p(
        system,
        clean,
        scenario.L_id,
        scenario.identification_delta,
        cfg.seed_base,
        scenario.fallback_l_p,
    )
    c_star = _clean_safety_optimum(system, scenario, clean, l_p)
    trials = [
        SafetyTrial(
            system=system,
            scenario=scenario,
            clean=clean,
            l_p=l_p,
            delta=delta,
            seed=seed,
            c_star=c_star,
            opts=opts or SolverOptions(),
            record_trajectory=cfg.trajectories_out is not None,
        )
        for delta in cfg.deltas
        for seed in _seeds(cfg)
    ]
    logger.info("Running %s constrained trials with l_p=%s", len(trials), l_p)
    outcomes = _map_trials(run_safety_trial, trials, cfg.processes)
    violations = sum(
        1
        for outcome in outcomes
        if (margin := outcome.record.extra("comparator_min_margin")) is not None
        and typing.cast(float, margin) < 0
    )
    if violations:
        logger.warning("Certainty-equivalent inputs violated the bound in %s trials", violations)
    return SweepResult(
        header=CSV_HEADER + SAFETY_COLUMNS,
        records=tuple(outcome.record for outcome in outcomes),
        trajectory_rows=tuple(row for outcome in outcomes for row in outcome.trajectory_rows),
        l_p=l_p,
    )


def sweep(cfg: ExperimentConfig, opts: SolverOptions | None = None) -> SweepResult:
    """Run the preset sweep and write the configured outputs.

    Args:
        cfg: The experiment configuration.
        opts: The solver options.

    Returns:
        The sweep result.
    """
    logger.info("Starting %s sweep over deltas %s", cfg.preset, cfg.deltas)
    if cfg.preset == Preset.ROOM_TEMP:
        result = run_room_temp_experiment(cfg, opts)
    else:
        result = run_siso_experiment(cfg, opts)
    if cfg.out is not None:
        result.to_csv(cfg.out)
    if cfg.trajectories_out is not None:
        result.trajectories_to_csv(cfg.trajectories_out)
    logger.info("Finished sweep with %s rows", len(result.records))
    return result
