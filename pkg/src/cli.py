#!/usr/bin/env python3

# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Entrypoint for the beheco command line."""

import argparse
import dataclasses
import json
import logging
import math
import sys
import typing
from pathlib import Path

import numpy as np

import cli_utils
import experiment
import lti
import predictor
import robust
import sddmc
import state
from exceptions import CertificateError, HorizonError, OutputWriteError
from obs_index import (
    ObsIndexReport,
    collect_scaling_trace,
    identify_observability_index,
    scaling_heuristic,
)
from page import behavioral_data_from_trajectory, page_matrix, split_recent

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _finite_or_none(value: float) -> float | None:
    """Replace infinities and NaN for JSON output.

    Args:
        value: The number.

    Returns:
        The number, None when it is not finite.
    """
    return float(value) if math.isfinite(value) else None


def _write_output(text: str, out: Path | None) -> None:
    """Write command output to a file or stdout.

    Args:
        text: The output text.
        out: The destination file, stdout when None.

    Raises:
        OutputWriteError: If the file could not be written.
    """
    if out is None:
        print(text)
        return
    try:
        out.write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputWriteError(f"Failed to write output to {out}") from exc


def _write_json(payload: typing.Mapping[str, typing.Any], out: Path | None) -> None:
    """Write a JSON document to a file or stdout.

    Args:
        payload: The document.
        out: The destination file, stdout when None.
    """
    _write_output(json.dumps(payload, indent=2, sort_keys=True), out)


def _identify(cfg: state.ProblemConfig) -> list[ObsIndexReport]:
    """Run the identification on every output.

    Args:
        cfg: The problem configuration.

    Returns:
        The report of every output.
    """
    U = page_matrix(cfg.trajectory.inputs, cfg.L)
    return [
        identify_observability_index(
            U,
            page_matrix(cfg.trajectory.outputs[:, i], cfg.L),
            cfg.delta,
            cfg.L,
            m=cfg.m,
            p=1,
            rank_tol=cfg.solver.rank_tol,
        )
        for i in range(cfg.p)
    ]


def _resolve_l_p(cfg: state.ProblemConfig) -> tuple[int, ...]:
    """The configured past window lengths, identified when absent.

    Args:
        cfg: The problem configuration.

    Raises:
        HorizonError: If a length is neither configured nor identifiable.

    Returns:
        One past window length per output.
    """
    if cfg.l_p is not None:
        return cfg.l_p
    lengths = []
    for i, report in enumerate(_identify(cfg)):
        if not report.identified or not report.l_o:
            raise HorizonError(f"Identification of output {i + 1} is inconclusive, set l_p")
        lengths.append(report.l_o)
    logger.info("Identified past window lengths %s", lengths)
    return tuple(lengths)


def _joint_predictor(cfg: state.ProblemConfig) -> predictor.PredictorState:
    """Build the predictor over all outputs with the largest past window length.

    Args:
        cfg: The problem configuration.

    Returns:
        The predictor state.
    """
    l_p = max(_resolve_l_p(cfg))
    data = behavioral_data_from_trajectory(
        cfg.trajectory.inputs, cfg.trajectory.outputs, l_p + cfg.l_f, l_p, cfg.delta
    )
    u_r, y_r = cfg.recent_window(l_p)
    Q, R, r_f = cfg.joint_weights()
    recent = split_recent(u_r[-l_p:], y_r[-l_p:], l_p, r_f=r_f, Q=Q, R=R)
    return predictor.build_predictor(data, recent, cfg.solver.pinv_tol)


@cli_utils.exit_code_on_error
def identify_command(args: argparse.Namespace) -> None:
    """Identify the observability index of every output.

    Args:
        args: The parsed arguments.

    Raises:
        HorizonError: If a scaling check is requested without generated data.
    """
    cfg = state.ProblemConfig.from_file(args.config)
    reports = _identify(cfg)
    payload: dict[str, typing.Any] = {
        f"output_{i + 1}": {
            "l_o": report.l_o,
            "status": str(report.status),
            "threshold": report.threshold_used,
            "sigma_min_by_k": [[k, sigma] for k, sigma in report.sigma_min_by_k],
        }
        for i, report in enumerate(reports)
    }
    if args.alphas:
        if cfg.system is None or cfg.clean is None:
            raise HorizonError("The scaling check needs generated historical data")
        noise = lti.NoiseModel(delta=cfg.delta, seed=cfg.solver.seed)
        for i, report in enumerate(reports):
            l_p = report.l_o or cfg.L - 1
            trace = collect_scaling_trace(
                cfg.system.output_subsystem(i), cfg.clean.inputs, args.alphas, noise, cfg.L, l_p
            )
            payload[f"output_{i + 1}"]["scaling"] = {
                "l_p": l_p,
                "trace": [list(point) for point in trace],
                "full_rank": scaling_heuristic(trace),
            }
    if args.out is not None:
        _write_json(payload, args.out)
        return
    for i, report in enumerate(reports):
        _write_output(f"# output {i + 1}\n{report.to_table()}", None)


@cli_utils.exit_code_on_error
def predict_command(args: argparse.Namespace) -> None:
    """Predict the future outputs of a candidate input with certified error bounds.

    Args:
        args: The parsed arguments.
    """
    cfg = state.ProblemConfig.from_file(args.config)
    predictor_state = _joint_predictor(cfg)
    u_f = cfg.u_f if cfg.u_f is not None else np.zeros(predictor_state.u_f_size)
    prediction = predictor.predict(predictor_state, u_f)
    _write_json(
        {
            "u_f": np.asarray(u_f).tolist(),
            "y_f_hat": prediction.y_f_hat.tolist(),
            "C_uf": _finite_or_none(prediction.C_uf),
            "g_ball_radius": _finite_or_none(prediction.g_ball_radius),
            "y_f_error_bound": _finite_or_none(prediction.y_f_error_bound),
            "delta": prediction.delta,
            "certified": prediction.certified,
            "noise_threshold": predictor.noise_threshold(predictor_state),
            "l_p": predictor_state.data.l_p,
        },
        args.out,
    )


@cli_utils.exit_code_on_error
def regulate_command(args: argparse.Namespace) -> None:
    """Solve the minmax regulation problem and report the certificate.

    Args:
        args: The parsed arguments.
    """
    cfg = state.ProblemConfig.from_file(args.config)
    predictor_state = _joint_predictor(cfg)
    result = robust.alternate_solve(predictor_state, cfg.solver)
    certificate: dict[str, typing.Any] | None = None
    if cfg.p == 1:
        try:
            certificate = robust.suboptimality_certificate(predictor_state).to_dict()
        except CertificateError:
            logger.warning("No certificate for this problem", exc_info=True)
    _write_json(
        {
            "u_check": result.u_check.tolist(),
            "u_nominal": result.u_nominal.tolist(),
            "c_worst": result.c_worst,
            "iterations": result.iterations,
            "converged": result.converged,
            "assumption4_ok": result.assumption4_ok,
            "trace": [record.to_dict() for record in result.trace],
            "certificate": certificate,
            "l_p": predictor_state.data.l_p,
        },
        args.out,
    )


def _boxes(
    cfg: state.ProblemConfig,
) -> tuple[list[sddmc.BoxConstraint | None], sddmc.BoxConstraint | None]:
    """Convert the configured bounds to boxes.

    Args:
        cfg: The problem configuration.

    Returns:
        The output boxes and the input box.
    """
    y_boxes = [
        None if box is None else sddmc.BoxConstraint.from_bounds(box.lower, box.upper, cfg.l_f)
        for box in cfg.y_boxes
    ]
    u_box = (
        None
        if cfg.u_box is None
        else sddmc.BoxConstraint.from_bounds(cfg.u_box.lower, cfg.u_box.upper, cfg.m * cfg.l_f)
    )
    return y_boxes, u_box


@cli_utils.exit_code_on_error
def sddmc_command(args: argparse.Namespace) -> None:
    """Solve the safe minmax problem with box constraints.

    Args:
        args: The parsed arguments.
    """
    cfg = state.ProblemConfig.from_file(args.config)
    l_p = _resolve_l_p(cfg)
    bundle = sddmc.decompose(cfg.trajectory, l_p, cfg.l_f, cfg.delta)
    u_r, y_r = cfg.recent_window(max(l_p))
    recents = sddmc.recent_per_output(
        bundle,
        u_r,
        y_r,
        r_per_output=cfg.references,
        Q_per_output=[cfg.output_weight(i) for i in range(cfg.p)],
        R=cfg.R,
    )
    y_boxes, u_box = _boxes(cfg)
    payload: dict[str, typing.Any] = {"l_p": list(l_p)}
    if args.comparator:
        comparator = sddmc.certainty_equivalent_solve(bundle, recents, y_boxes, u_box, cfg.solver)
        payload["comparator"] = {
            "u_f": comparator.u_f.tolist(),
            "y_f_hat": [y.tolist() for y in comparator.y_f_hat],
            "cost": comparator.cost,
        }
    result = sddmc.sddmc_solve(bundle, recents, y_boxes, u_box, cfg.solver)
    payload.update(
        {
            "u_check": result.u_check.tolist(),
            "c_worst": result.c_worst,
            "iterations": result.iterations,
            "converged": result.converged,
            "feasible": result.feasible,
            "min_margin": _finite_or_none(result.min_margin),
            "margins": [[_finite_or_none(v) for v in margin] for margin in result.margins],
            "radii": [_finite_or_none(radius) for radius in result.radii],
            "assumption4_ok": list(result.assumption4_ok),
            "trace": [record.to_dict() for record in result.trace],
        }
    )
    _write_json(payload, args.out)


@cli_utils.exit_code_on_error
def sweep_command(args: argparse.Namespace) -> None:
    """Run an experiment sweep.

    Args:
        args: The parsed arguments.
    """
    cfg = state.ExperimentConfig.from_file(args.config)
    overrides: dict[str, typing.Any] = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.processes is not None:
        overrides["processes"] = args.processes
    cfg = dataclasses.replace(cfg, **overrides)
    result = experiment.sweep(cfg)
    if cfg.out is None:
        _write_output("\n".join(",".join(row) for row in _rows(result)), None)


def _rows(result: experiment.SweepResult) -> list[list[str]]:
    """The header and rows of a sweep.

    Args:
        result: The sweep result.

    Returns:
        The CSV rows.
    """
    return [list(result.header), *(record.row() for record in result.records)]


def _positive_int(value: str) -> int:
    """Parse a positive integer argument.

    Args:
        value: The raw argument.

    Raises:
        ArgumentTypeError: If the value is not a positive integer.

    Returns:
        The integer.
    """
    try:
        number = int(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer") from exc
    if number < 1:
        raise argparse.ArgumentTypeError(f"{value!r} must be at least 1")
    return number


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser.

    Returns:
        The parser with one subcommand per operation.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="JSON or YAML config file")
    common.add_argument("--out", type=Path, default=None, help="Output file, stdout if omitted")
    common.add_argument("--verbose", action="store_true", help="Log debug messages")
    parser = argparse.ArgumentParser(
        prog="beheco", description="Behavioral robust regulation under bounded output noise"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    identify = subparsers.add_parser(
        "identify", parents=[common], help="Identify the observability index"
    )
    identify.add_argument(
        "--alphas", type=float, nargs="+", default=None, help="Input scales of the scaling check"
    )
    identify.set_defaults(func=identify_command)
    subparsers.add_parser(
        "predict", parents=[common], help="Predict outputs with error bounds"
    ).set_defaults(func=predict_command)
    subparsers.add_parser(
        "regulate", parents=[common], help="Solve the minmax regulation problem"
    ).set_defaults(func=regulate_command)
    safe = subparsers.add_parser("sddmc", parents=[common], help="Solve the safe minmax problem")
    safe.add_argument(
        "--comparator", action="store_true", help="Also solve the certainty-equivalent problem"
    )
    safe.set_defaults(func=sddmc_command)
    sweep = subparsers.add_parser("sweep", parents=[common], help="Run an experiment sweep")
    sweep.add_argument("--trials", type=_positive_int, default=None, help="Trials per delta")
    sweep.add_argument("--processes", type=_positive_int, default=None, help="Worker processes")
    sweep.set_defaults(func=sweep_command)
    return parser


def main(argv: typing.Sequence[str] | None = None) -> int:
    """Run the command line.

    Args:
        argv: The arguments, sys.argv when None.

    Returns:
        The exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    return args.func(args)


if __name__ == "__main__":  # pragma: nocover
    sys.exit(main())
