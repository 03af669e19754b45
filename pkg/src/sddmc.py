# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for safe minmax control of multi-output systems through per-output decomposition."""

import dataclasses
import logging
import math
import typing

import cvxpy as cp
import numpy as np
import scipy.linalg

import lti
import robust
from exceptions import (
    ConstraintError,
    DimensionError,
    InfeasibleProblemError,
    InfeasibleTighteningError,
    SolverError,
)
from page import BehavioralData, RecentTrajectory, behavioral_data_from_trajectory, split_recent
from predictor import PredictorState, build_predictor, check_small_noise, predict
from state import SolverOptions

logger = logging.getLogger(__name__)

QP_OK_STATUSES = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
MARGIN_TOL = 1e-6

Gain = tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclasses.dataclass(frozen=True)
class BoxConstraint:
    """Elementwise bounds lower <= v <= upper; infinite entries are unbounded.

    Attributes:
        lower: The lower bounds.
        upper: The upper bounds.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        """Coerce the bounds and validate their order.

        Raises:
            ConstraintError: If the bounds differ in size or cross.
        """
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ConstraintError(f"Bounds have sizes {lower.size} and {upper.size}")
        if np.any(lower > upper):
            raise ConstraintError("Lower bounds must not exceed upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def size(self) -> int:
        """The number of bounded entries."""
        return self.lower.shape[0]

    @property
    def is_bounded(self) -> bool:
        """Whether any bound is finite."""
        return bool(np.isfinite(self.lower).any() or np.isfinite(self.upper).any())

    @classmethod
    def from_bounds(
        cls, lower: typing.Any, upper: typing.Any, size: int
    ) -> "BoxConstraint":
        """Build a box from scalars, sequences or None, where None means unbounded.

        Args:
            lower: The lower bound, a scalar, a sequence with None entries, or None.
            upper: The upper bound, a scalar, a sequence with None entries, or None.
            size: The number of entries.

        Raises:
            ConstraintError: If a sequence has the wrong length.

        Returns:
            The box.
        """
        return cls(lower=_expand(lower, size, -math.inf), upper=_expand(upper, size, math.inf))

    def margins(self, values: np.ndarray) -> np.ndarray:
        """Per-entry distance to the nearest violated side, negative when outside.

        Args:
            values: The constrained values.

        Returns:
            min(values - lower, upper - values), infinite for unbounded entries.
        """
        return np.minimum(values - self.lower, self.upper - values)

    def to_dict(self) -> dict[str, list[float | None]]:
        """Serialize the bounds with None for unbounded entries.

        Returns:
            The JSON-compatible mapping.
        """
        return {
            "lower": [float(v) if math.isfinite(v) else None for v in self.lower],
            "upper": [float(v) if math.isfinite(v) else None for v in self.upper],
        }


def _expand(bound: typing.Any, size: int, default: float) -> np.ndarray:
    """Expand a bound specification to a vector.

    Args:
        bound: A scalar, a sequence with None entries, or None.
        size: The number of entries.
        default: The value of missing entries.

    Raises:
        ConstraintError: If a sequence has the wrong length.

    Returns:
        The bound vector.
    """
    if bound is None:
        return np.full(size, default)
    if np.isscalar(bound):
        return np.full(size, float(typing.cast(float, bound)))
    values = [default if value is None else float(value) for value in bound]
    if len(values) != size:
        raise ConstraintError(f"Bound has {len(values)} entries, expected {size}")
    return np.array(values)


@dataclasses.dataclass(frozen=True)
class SubsystemBundle:
    """Per-output behavioral data sharing the same inputs.

    Attributes:
        subsystems: The single-output data of every output.
        l_f: The shared future window length.
        m: The input dimension.
        delta: The entrywise noise bound.
        p: The number of outputs.
        l_p: The past window length of every output.
    """

    subsystems: tuple[BehavioralData, ...]
    l_f: int
    m: int
    delta: float

    @property
    def p(self) -> int:
        """The number of outputs."""
        return len(self.subsystems)

    @property
    def l_p(self) -> tuple[int, ...]:
        """The past window length of every output."""
        return tuple(data.l_p for data in self.subsystems)


@dataclasses.dataclass(frozen=True)
class SDDMCResult:  # pylint: disable=too-many-instance-attributes
    """Result of the safe minmax solve.

    Attributes:
        u_check: The returned future input.
        c_worst: The summed worst-case cost at u_check.
        iterations: The number of alternations performed.
        converged: Whether the input settled with nonnegative margins.
        feasible: Whether every tightened output box holds at u_check.
        margins: The per-output, per-time-step margins to the tightened boxes.
        radii: The per-output error radii at u_check.
        assumption4_ok: The small-noise condition of every output.
        trace: The per-iteration records.
    """

    u_check: np.ndarray
    c_worst: float
    iterations: int
    converged: bool
    feasible: bool
    margins: tuple[np.ndarray, ...]
    radii: tuple[float, ...]
    assumption4_ok: tuple[bool, ...]
    trace: tuple[robust.IterationRecord, ...]

    @property
    def min_margin(self) -> float:
        """The smallest margin over all outputs and time steps."""
        values = [float(margin.min()) for margin in self.margins if margin.size]
        return min(values) if values else math.inf


@dataclasses.dataclass(frozen=True)
class ComparatorResult:
    """Result of the certainty-equivalent constrained solve.

    Attributes:
        u_f: The returned future input.
        y_f_hat: The nominal prediction of every output.
        cost: The nominal cost.
    """

    u_f: np.ndarray
    y_f_hat: tuple[np.ndarray, ...]
    cost: float


def decompose(
    trajectory: lti.Trajectory,
    l_p_per_output: typing.Sequence[int],
    l_f: int,
    delta: float = 0.0,
) -> SubsystemBundle:
    """Build separate Page matrices for every output with block length l_p^i + l_f.

    Args:
        trajectory: The historical trajectory with noisy outputs.
        l_p_per_output: The past window length of every output.
        l_f: The shared future window length.
        delta: The entrywise noise bound.

    Raises:
        DimensionError: If the number of window lengths does not match the outputs.

    Returns:
        The bundle of single-output data.
    """
    p = trajectory.outputs.shape[1]
    if len(l_p_per_output) != p:
        raise DimensionError(
            f"Need one past window length per output ({p}), got {len(l_p_per_output)}"
        )
    subsystems = tuple(
        behavioral_data_from_trajectory(
            trajectory.inputs, trajectory.outputs[:, i], l_p + l_f, l_p, delta
        )
        for i, l_p in enumerate(l_p_per_output)
    )
    return SubsystemBundle(
        subsystems=subsystems, l_f=l_f, m=trajectory.inputs.shape[1], delta=delta
    )


def recent_per_output(
    bundle: SubsystemBundle,
    u_r: typing.Any,
    y_r: typing.Any,
    r_per_output: typing.Sequence[typing.Any] | None = None,
    Q_per_output: typing.Sequence[typing.Any] | None = None,
    R: typing.Any = None,
) -> tuple[RecentTrajectory, ...]:
    """Split a shared recent history into the last l_p^i samples of every output.

    Args:
        bundle: The subsystem bundle.
        u_r: The recent inputs, at least max(l_p^i) samples.
        y_r: The recent noisy outputs of all channels.
        r_per_output: The reference of every output.
        Q_per_output: The output weight of every output.
        R: The shared input weight.

    Returns:
        The recent window of every output.
    """
    inputs = lti.as_samples(u_r, width=bundle.m)
    outputs = lti.as_samples(y_r, width=bundle.p)
    recents = []
    for i, l_p in enumerate(bundle.l_p):
        start = inputs.shape[0] - l_p
        recents.append(
            split_recent(
                inputs[start:],
                outputs[start:, i],
                l_p,
                r_f=None if r_per_output is None else r_per_output[i],
                Q=None if Q_per_output is None else Q_per_output[i],
                R=R,
            )
        )
    return tuple(recents)


def build_predictors(
    bundle: SubsystemBundle,
    recents: typing.Sequence[RecentTrajectory],
    pinv_tol: float = SolverOptions.pinv_tol,
) -> tuple[PredictorState, ...]:
    """Factorize every subsystem.

    Args:
        bundle: The subsystem bundle.
        recents: The recent window of every output.
        pinv_tol: The relative truncation tolerance of the pseudoinverses.

    Raises:
        DimensionError: If the number of windows does not match the outputs.

    Returns:
        The predictor state of every output.
    """
    if len(recents) != bundle.p:
        raise DimensionError(f"Need one recent window per output ({bundle.p}), got {len(recents)}")
    return tuple(
        build_predictor(data, recent, pinv_tol) for data, recent in zip(bundle.subsystems, recents)
    )


def output_error_radius(
    states: typing.Sequence[PredictorState], i: int, u_f: typing.Any, delta: float | None = None
) -> float:
    """The certified prediction error radius of output i.

    Args:
        states: The predictor state of every output.
        i: The zero-based output index.
        u_f: The future input.
        delta: The noise bound; the data's bound when omitted.

    Returns:
        The radius E^i(u_f, delta).
    """
    return predict(states[i], u_f, delta).y_f_error_bound


def tighten_box(box: BoxConstraint, radius: float) -> BoxConstraint:
    """Shrink an output box by the prediction error radius on both sides.

    Args:
        box: The output box.
        radius: The error radius, nonnegative.

    Raises:
        ConstraintError: If the radius is negative.
        InfeasibleTighteningError: If the tightened bounds cross.

    Returns:
        The box lower + radius <= y_hat <= upper - radius.
    """
    if radius < 0:
        raise ConstraintError(f"Error radius must be nonnegative, got {radius}")
    lower = box.lower + radius
    upper = box.upper - radius
    crossed = np.flatnonzero(lower > upper)
    if crossed.size:
        raise InfeasibleTighteningError(
            f"Error radius {radius:.3e} empties the output box at steps {crossed.tolist()}"
        )
    return BoxConstraint(lower=lower, upper=upper)


def _weights(
    states: typing.Sequence[PredictorState],
) -> tuple[list[np.ndarray], np.ndarray, list[np.ndarray]]:
    """Collect the per-output weights and the shared input weight.

    Args:
        states: The predictor state of every output.

    Returns:
        The output weights, the input weight and the references.
    """
    output_weights, references = [], []
    for state in states:
        Q, _, r_f = robust.objective_weights(state)
        output_weights.append(Q)
        references.append(r_f)
    return output_weights, robust.objective_weights(states[0])[1], references


def _nominal_gains(states: typing.Sequence[PredictorState]) -> list[Gain]:
    """The nominal prediction gain of every output.

    Args:
        states: The predictor state of every output.

    Returns:
        The tuples (K1, K2, b0).
    """
    return [(*state.gain(), state.b_zero) for state in states]


def _combined_regulator(
    gains: typing.Sequence[Gain],
    output_weights: typing.Sequence[np.ndarray],
    R: np.ndarray,
    references: typing.Sequence[np.ndarray],
) -> np.ndarray:
    """The unconstrained minimizer of the summed objective.

    Args:
        gains: The tuples (K1, K2, b0) of every output.
        output_weights: The output weights.
        R: The input weight.
        references: The references.

    Returns:
        The minimizing future input.
    """
    offsets = np.concatenate([K1 @ b0 for K1, _, b0 in gains])
    return robust.solve_regulator(
        np.eye(offsets.shape[0]),
        np.vstack([K2 for _, K2, _ in gains]),
        offsets,
        scipy.linalg.block_diag(*output_weights),
        R,
        np.concatenate(references),
    )


def _tightened_boxes(
    states: typing.Sequence[PredictorState],
    y_boxes: typing.Sequence[BoxConstraint | None],
    u_f: np.ndarray,
) -> tuple[list[BoxConstraint | None], list[float]]:
    """Tighten every output box by its radius at a future input.

    Args:
        states: The predictor state of every output.
        y_boxes: The output boxes, None for unconstrained outputs.
        u_f: The future input the radii are evaluated at.

    Returns:
        The tightened boxes and the radii.
    """
    radii = [output_error_radius(states, i, u_f) for i in range(len(states))]
    boxes = [
        None if box is None or not box.is_bounded else tighten_box(box, radius)
        for box, radius in zip(y_boxes, radii)
    ]
    return boxes, radii


def _infeasibility_report(
    boxes: typing.Sequence[BoxConstraint | None],
    radii: typing.Sequence[float],
    u_box: BoxConstraint | None,
) -> dict[str, typing.Any]:
    """Describe the constraint set of a failed solve.

    Args:
        boxes: The tightened output boxes.
        radii: The error radii used for tightening.
        u_box: The input box.

    Returns:
        The JSON-compatible report.
    """
    report: dict[str, typing.Any] = {
        f"output_{i + 1}": {
            "radius": radius,
            "tightened": None if box is None else box.to_dict(),
        }
        for i, (box, radius) in enumerate(zip(boxes, radii))
    }
    report["u_box"] = None if u_box is None else u_box.to_dict()
    return report


def _solve_qp(  # pylint: disable=too-many-locals
    objective_gains: typing.Sequence[Gain],
    constraint_gains: typing.Sequence[Gain],
    boxes: typing.Sequence[BoxConstraint | None],
    u_box: BoxConstraint | None,
    weights: tuple[list[np.ndarray], np.ndarray, list[np.ndarray]],
    radii: typing.Sequence[float],
) -> np.ndarray:
    """Minimize the summed objective subject to the nominal predictions staying in the boxes.

    Args:
        objective_gains: The gains of the objective, possibly perturbed.
        constraint_gains: The nominal gains the output boxes apply to.
        boxes: The (tightened) output boxes.
        u_box: The input box.
        weights: The output weights, input weight and references.
        radii: The radii used for tightening, for the infeasibility report.

    Raises:
        InfeasibleProblemError: If the constraints admit no input.
        SolverError: If the QP solver failed.

    Returns:
        The minimizing future input.
    """
    output_weights, R, references = weights
    active_boxes = [box for box in boxes if box is not None and box.is_bounded]
    if not active_boxes and (u_box is None or not u_box.is_bounded):
        return _combined_regulator(objective_gains, output_weights, R, references)
    u_f = cp.Variable(R.shape[0])
    cost = cp.sum_squares(robust.symmetric_power(R, 0.5) @ u_f)
    for (K1, K2, b0), Q, r_f in zip(objective_gains, output_weights, references):
        cost += cp.sum_squares(robust.symmetric_power(Q, 0.5) @ (K2 @ u_f + (K1 @ b0 - r_f)))
    constraints = []
    for (K1, K2, b0), box in zip(constraint_gains, boxes):
        if box is None:
            continue
        offset = K1 @ b0
        lower = np.flatnonzero(np.isfinite(box.lower))
        upper = np.flatnonzero(np.isfinite(box.upper))
        if lower.size:
            constraints.append(K2[lower] @ u_f + offset[lower] >= box.lower[lower])
        if upper.size:
            constraints.append(K2[upper] @ u_f + offset[upper] <= box.upper[upper])
    if u_box is not None:
        lower = np.flatnonzero(np.isfinite(u_box.lower))
        upper = np.flatnonzero(np.isfinite(u_box.upper))
        if lower.size:
            constraints.append(u_f[lower] >= u_box.lower[lower])
        if upper.size:
            constraints.append(u_f[upper] <= u_box.upper[upper])
    problem = cp.Problem(cp.Minimize(cost), constraints)
    try:
        problem.solve(solver=cp.CLARABEL)
    except cp.error.SolverError as exc:
        raise SolverError("Constrained input problem could not be solved") from exc
    if problem.status not in QP_OK_STATUSES or u_f.value is None:
        raise InfeasibleProblemError(
            f"Constrained input problem is {problem.status}",
            report=_infeasibility_report(boxes, radii, u_box),
        )
    return np.asarray(u_f.value, dtype=float).reshape(-1)


def _margins(
    states: typing.Sequence[PredictorState],
    y_boxes: typing.Sequence[BoxConstraint | None],
    u_f: np.ndarray,
) -> tuple[tuple[np.ndarray, ...], list[float], bool]:
    """Margins of the nominal predictions to the tightened boxes at a future input.

    Args:
        states: The predictor state of every output.
        y_boxes: The output boxes.
        u_f: The future input.

    Returns:
        The per-output margins, the radii and whether every tightening succeeded.
    """
    radii = [output_error_radius(states, i, u_f) for i in range(len(states))]
    margins = []
    tightenable = True
    for state, box, radius in zip(states, y_boxes, radii):
        if box is None or not box.is_bounded:
            margins.append(np.full(state.y_f_size, math.inf))
            continue
        y_f_hat = predict(state, u_f).y_f_hat
        margins.append(box.margins(y_f_hat) - radius)
        tightenable = tightenable and bool(np.all(box.lower + radius <= box.upper - radius))
    return tuple(margins), radii, tightenable


def _worst_case(
    states: typing.Sequence[PredictorState], u_f: np.ndarray, R: np.ndarray, opts: SolverOptions
) -> tuple[float, list[robust.InnerSolution]]:
    """The summed worst-case cost over all outputs.

    Args:
        states: The predictor state of every output.
        u_f: The future input.
        R: The input weight.
        opts: The solver options.

    Returns:
        The worst-case cost and the inner solution of every output.
    """
    inners = [robust.inner_worst_case(state, u_f, opts=opts) for state in states]
    return sum(inner.output_cost for inner in inners) + float(u_f @ R @ u_f), inners


def sddmc_solve(  # pylint: disable=too-many-locals
    bundle: SubsystemBundle,
    recents: typing.Sequence[RecentTrajectory],
    y_boxes: typing.Sequence[BoxConstraint | None] | None = None,
    u_box: BoxConstraint | None = None,
    opts: SolverOptions | None = None,
) -> SDDMCResult:
    """Alternate per-output worst-case search and a constrained input step.

    The output boxes are tightened by the error radii evaluated at the previous
    iterate and apply to the nominal predictions.

    Args:
        bundle: The subsystem bundle.
        recents: The recent window of every output.
        y_boxes: The output box of every output, None for unconstrained outputs.
        u_box: The input box.
        opts: The solver options.

    Raises:
        DimensionError: If the number of boxes does not match the outputs.

    Returns:
        The solve result.
    """
    opts = opts or SolverOptions()
    states = build_predictors(bundle, recents, opts.pinv_tol)
    y_boxes = list(y_boxes) if y_boxes is not None else [None] * bundle.p
    if len(y_boxes) != bundle.p:
        raise DimensionError(f"Need one output box per output ({bundle.p}), got {len(y_boxes)}")
    assumption4_ok = tuple(check_small_noise(state, bundle.delta) for state in states)
    if not all(assumption4_ok):
        logger.warning("Small-noise condition fails for outputs %s", assumption4_ok)
    weights = _weights(states)
    nominal = _nominal_gains(states)
    u_free = _combined_regulator(nominal, *weights)
    boxes, radii = _tightened_boxes(states, y_boxes, u_free)
    u_f = _solve_qp(nominal, nominal, boxes, u_box, weights, radii)
    trace: list[robust.IterationRecord] = []
    best_u, best_cost = u_f, math.inf
    converged = False
    for iteration in range(1, opts.max_iters + 1):
        c_worst, inners = _worst_case(states, u_f, weights[1], opts)
        if c_worst < best_cost:
            best_u, best_cost = u_f, c_worst
        boxes, radii = _tightened_boxes(states, y_boxes, u_f)
        perturbed = [
            robust.perturbed_gain(state, inner.perturbation, opts.rank_tol)
            for state, inner in zip(states, inners)
        ]
        u_next = _solve_qp(perturbed, nominal, boxes, u_box, weights, radii)
        step_norm = float(np.linalg.norm(u_next - u_f))
        trace.append(robust.IterationRecord(iteration, u_f, c_worst, step_norm))
        logger.debug("iteration=%s c_worst=%.6e step=%.3e", iteration, c_worst, step_norm)
        u_f = u_next
        if step_norm < opts.term_tol:
            margins, _, _ = _margins(states, y_boxes, u_f)
            if all(float(margin.min(initial=math.inf)) >= -MARGIN_TOL for margin in margins):
                converged = True
                break
    if converged:
        c_worst, _ = _worst_case(states, u_f, weights[1], opts)
    else:
        logger.warning("Safe minmax alternation did not converge in %s iterations", opts.max_iters)
        u_f, c_worst = best_u, best_cost
    margins, radii, tightenable = _margins(states, y_boxes, u_f)
    feasible = tightenable and all(
        float(margin.min(initial=math.inf)) >= -MARGIN_TOL for margin in margins
    )
    logger.info(
        "Safe minmax solve finished after %s iterations, feasible=%s", len(trace), feasible
    )
    return SDDMCResult(
        u_check=u_f,
        c_worst=c_worst,
        iterations=len(trace),
        converged=converged,
        feasible=feasible,
        margins=margins,
        radii=tuple(radii),
        assumption4_ok=assumption4_ok,
        trace=tuple(trace),
    )


def certainty_equivalent_solve(
    bundle: SubsystemBundle,
    recents: typing.Sequence[RecentTrajectory],
    y_boxes: typing.Sequence[BoxConstraint | None] | None = None,
    u_box: BoxConstraint | None = None,
    opts: SolverOptions | None = None,
) -> ComparatorResult:
    """Solve the constrained problem treating the nominal prediction as exact.

    Args:
        bundle: The subsystem bundle.
        recents: The recent window of every output.
        y_boxes: The output box of every output, None for unconstrained outputs.
        u_box: The input box.
        opts: The solver options.

    Returns:
        The comparator result.
    """
    opts = opts or SolverOptions()
    states = build_predictors(bundle, recents, opts.pinv_tol)
    boxes = list(y_boxes) if y_boxes is not None else [None] * bundle.p
    weights = _weights(states)
    nominal = _nominal_gains(states)
    u_f = _solve_qp(nominal, nominal, boxes, u_box, weights, [0.0] * bundle.p)
    predictions = tuple(predict(state, u_f).y_f_hat for state in states)
    output_weights, R, references = weights
    cost = sum(
        robust.regulation_cost(y_f, np.zeros(0), Q, np.zeros((0, 0)), r_f)
        for y_f, Q, r_f in zip(predictions, output_weights, references)
    ) + float(u_f @ R @ u_f)
    return ComparatorResult(u_f=u_f, y_f_hat=predictions, cost=cost)
