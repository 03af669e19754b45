# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Unit tests for experiment module."""

# Need access to protected functions for testing
# pylint:disable=protected-access

import csv
import dataclasses
import math
import multiprocessing
from pathlib import Path
from unittest.mock import MagicMock

import numpy as np
import pytest

import experiment
import lti
import presets
import state
from exceptions import ExperimentRunError, OutputWriteError
from tests.unit import factories


@pytest.mark.parametrize(
    "c_check, c_star, expected",
    [
        pytest.param(2.0, 1.0, 0.5, id="suboptimal"),
        pytest.param(1.0, 1.0, 0.0, id="optimal"),
        pytest.param(0.0, 0.0, 0.0, id="zero cost"),
    ],
)
def test_relative_suboptimality(c_check: float, c_star: float, expected: float):
    """
    arrange: given the achieved and the optimal true costs.
    act: when the relative suboptimality is computed.
    assert: the expected ratio is returned.
    """
    assert experiment.relative_suboptimality(c_check, c_star) == expected


def test_trial_record_row():
    """
    arrange: given a trial record with boolean, missing and float cells.
    act: when it is formatted.
    assert: booleans are lower case, missing values empty and floats round-trip.
    """
    record = experiment.TrialRecord(
        delta=0.001,
        seed=3,
        c_check=0.1 + 0.2,
        c_star=0.25,
        c_worst=1.5,
        rel_subopt=0.1,
        iterations=2,
        assumption4_ok=True,
        extras=(("c3", None), ("converged", False)),
    )

    row = record.row()

    assert row == ["0.001", "3", repr(0.1 + 0.2), "0.25", "1.5", "0.1", "2", "true", "", "false"]
    assert float(row[2]) == 0.1 + 0.2
    assert record.extra("converged") is False
    assert record.extra("missing") is None


def test_failed_record():
    """
    arrange: given a trial whose solve failed.
    act: when its record is built.
    assert: the costs are NaN and the trailing columns empty.
    """
    record = experiment._failed_record(0.01, 4, 2.0, experiment.SAFETY_COLUMNS)

    assert math.isnan(record.c_check)
    assert math.isnan(record.rel_subopt)
    assert record.c_star == 2.0
    assert record.row()[-2:] == ["", ""]


def test_write_csv_unwritable(tmp_path: Path):
    """
    arrange: given a destination inside a missing directory.
    act: when the CSV is written.
    assert: OutputWriteError is raised.
    """
    with pytest.raises(OutputWriteError):
        experiment.write_csv(tmp_path / "missing" / "out.csv", ("a",), [["1"]])


def test_identify_l_p(clean_historical: lti.Trajectory):
    """
    arrange: given clean historical data of the benchmark system.
    act: when the past window length is identified from noisy data.
    assert: the observability index 3 is found.
    """
    assert experiment.identify_l_p(presets.EQ18_SYSTEM, clean_historical, 8, 1e-3, 0, 5) == (3,)


def test_identify_l_p_fallback(eq18_system: lti.StateSpace):
    """
    arrange: given identically zero historical inputs.
    act: when the past window length is identified.
    assert: the fallback is used.
    """
    silent = lti.Trajectory(inputs=np.zeros((160, 1)), outputs=np.zeros((160, 1)))

    assert experiment.identify_l_p(eq18_system, silent, 8, 1e-3, 0, 5) == (5,)


def test_regulation_window():
    """
    arrange: given the benchmark recent window.
    act: when a consistent clean window is recovered.
    assert: its outputs reproduce the configured outputs.
    """
    scenario = presets.RegulationScenario()

    window_u, window_y, _ = experiment.regulation_window(presets.EQ18_SYSTEM, scenario)

    np.testing.assert_allclose(window_u[:, 0], scenario.recent_u)
    np.testing.assert_allclose(window_y[:, 0], scenario.recent_y, atol=1e-8)


def test_run_siso_experiment():
    """
    arrange: given a two-delta sweep with two trials each.
    act: when the regulation sweep runs.
    assert: rows are delta-major and the true cost never beats the clean optimum.
    """
    cfg = factories.ExperimentConfigFactory(deltas=(1e-4, 1e-3), trials=2)

    result = experiment.run_siso_experiment(cfg, factories.SolverOptionsFactory())

    assert result.header == experiment.CSV_HEADER + experiment.REGULATION_COLUMNS
    assert result.l_p == (3,)
    assert [(r.delta, r.seed) for r in result.records] == [
        (1e-4, 0),
        (1e-4, 1),
        (1e-3, 0),
        (1e-3, 1),
    ]
    for record in result.records:
        assert record.c_check >= record.c_star * (1 - 1e-6)
        assert record.rel_subopt >= -1e-6
        assert record.iterations >= 1


def test_run_siso_experiment_reproducible():
    """
    arrange: given the same sweep configuration twice.
    act: when the sweep runs twice.
    assert: the rows are identical.
    """
    cfg = factories.ExperimentConfigFactory(trials=2)
    opts = factories.SolverOptionsFactory()

    first = experiment.run_siso_experiment(cfg, opts)
    second = experiment.run_siso_experiment(cfg, opts)

    assert [r.row() for r in first.records] == [r.row() for r in second.records]


def test_run_siso_experiment_parallel_matches_serial():
    """
    arrange: given the same sweep with one and with two worker processes.
    act: when both sweeps run.
    assert: the rows are identical.
    """
    cfg = factories.ExperimentConfigFactory(trials=2)
    opts = factories.SolverOptionsFactory()

    serial = experiment.run_siso_experiment(cfg, opts)
    parallel = experiment.run_siso_experiment(dataclasses.replace(cfg, processes=2), opts)

    assert [r.row() for r in serial.records] == [r.row() for r in parallel.records]


def test_map_trials_pool_error(monkeypatch: pytest.MonkeyPatch):
    """
    arrange: given a worker pool that fails.
    act: when trials are mapped over two workers.
    assert: ExperimentRunError is raised.
    """
    monkeypatch.setattr(
        multiprocessing, "Pool", MagicMock(side_effect=multiprocessing.ProcessError("boom"))
    )

    with pytest.raises(ExperimentRunError):
        experiment._map_trials(experiment.run_regulation_trial, [MagicMock(), MagicMock()], 2)


def test_map_trials_empty():
    """
    arrange: given no trials.
    act: when they are mapped.
    assert: no outcomes are returned.
    """
    assert not experiment._map_trials(experiment.run_regulation_trial, [], None)


def test_run_room_temp_experiment(tmp_path: Path):
    """
    arrange: given one constrained trial with trajectory recording.
    act: when the constrained sweep runs.
    assert: the safe input keeps the true output above its bound and trajectories are recorded.
    """
    cfg = factories.ExperimentConfigFactory(
        preset=state.Preset.ROOM_TEMP,
        deltas=(0.01,),
        scenario=presets.SafetyScenario(),
        system=presets.ROOM_TEMP_SYSTEM,
        trajectories_out=tmp_path / "trajectories.csv",
    )

    result = experiment.run_room_temp_experiment(cfg, factories.SolverOptionsFactory())

    (record,) = result.records
    assert result.header[-2:] == experiment.SAFETY_COLUMNS
    assert len(result.l_p) == 2
    margin = record.extra("min_margin")
    assert isinstance(margin, float)
    assert margin >= -1e-9
    controllers = {row[2] for row in result.trajectory_rows}
    assert "sddmc" in controllers
    assert len([row for row in result.trajectory_rows if row[2] == "sddmc"]) == 5


def test_sweep_writes_outputs(tmp_path: Path):
    """
    arrange: given a sweep configured with a result file.
    act: when the sweep runs.
    assert: the CSV holds the header and one row per trial.
    """
    cfg = factories.ExperimentConfigFactory(trials=2, out=tmp_path / "results.csv")

    result = experiment.sweep(cfg, factories.SolverOptionsFactory())

    with (tmp_path / "results.csv").open(encoding="utf-8") as csv_file:
        rows = list(csv.reader(csv_file))
    assert rows[0] == list(result.header)
    assert rows[1:] == [record.row() for record in result.records]
