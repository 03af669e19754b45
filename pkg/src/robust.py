# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for the minmax regulator under bounded output noise and its suboptimality certificate."""

import dataclasses
import logging
import math
import typing

import numpy as np
import scipy.linalg

import lti
from exceptions import (
    CertificateError,
    DimensionError,
    InnerProblemInfeasibleError,
    RankCollapseError,
    SolverError,
)
from page import RecentTrajectory
from predictor import Prediction, PredictorState, check_small_noise, predict, truncated_pinv
from state import SolverOptions

logger = logging.getLogger(__name__)

MIN_STEP = 1e-10
RETRACTION_ROUNDS = 25
SIGN_ITERATIONS = 50


@dataclasses.dataclass(frozen=True)
class Perturbation:
    """A noise realization of the historical and recent outputs.

    Attributes:
        D_Yp: The (p * l_p) by l_h perturbation of Y_p.
        D_Yf: The (p * l_f) by l_h perturbation of Y_f.
        D_yp: The (p * l_p) perturbation of y_p.
    """

    D_Yp: np.ndarray
    D_Yf: np.ndarray
    D_yp: np.ndarray

    def max_abs(self) -> float:
        """The largest absolute entry over the three perturbations.

        Returns:
            The max norm.
        """
        return float(
            max(np.abs(self.D_Yp).max(), np.abs(self.D_Yf).max(), np.abs(self.D_yp).max())
        )


@dataclasses.dataclass(frozen=True)
class InnerSolution:
    """The worst-case noise realization found for one future input.

    Attributes:
        perturbation: The noise realization.
        g_tilde: The coefficient vector consistent with the realization.
        y_f_tilde: The worst-case future output (Y_f + D_Yf) g_tilde.
        c_worst: The objective at the returned point.
        output_cost: The output part of c_worst.
        starts_tried: The number of ascent starts.
        starts_feasible: The number of starts that reached a feasible point.
    """

    perturbation: Perturbation
    g_tilde: np.ndarray
    y_f_tilde: np.ndarray
    c_worst: float
    output_cost: float
    starts_tried: int
    starts_feasible: int


@dataclasses.dataclass(frozen=True)
class IterationRecord:
    """One alternation of the minmax solver.

    Attributes:
        iteration: The one-based iteration number.
        u_f: The future input the inner problem was solved at.
        c_worst: The worst-case cost at u_f.
        step_norm: The norm of the input update of the following outer step.
    """

    iteration: int
    u_f: np.ndarray
    c_worst: float
    step_norm: float

    def to_dict(self) -> dict[str, typing.Any]:
        """Serialize the record.

        Returns:
            The JSON-compatible mapping.
        """
        return {
            "iteration": self.iteration,
            "u_f": self.u_f.tolist(),
            "c_worst": self.c_worst,
            "step_norm": self.step_norm,
        }


@dataclasses.dataclass(frozen=True)
class RegulationResult:
    """Result of the alternating minmax solve.

    Attributes:
        u_check: The returned future input.
        c_worst: The worst-case cost at u_check.
        iterations: The number of alternations performed.
        converged: Whether the input update fell below the termination tolerance.
        trace: The per-iteration records.
        assumption4_ok: Whether the small-noise condition held.
        u_nominal: The nominal input the alternation started from.
    """

    u_check: np.ndarray
    c_worst: float
    iterations: int
    converged: bool
    trace: tuple[IterationRecord, ...]
    assumption4_ok: bool
    u_nominal: np.ndarray


@dataclasses.dataclass(frozen=True)
class Certificate:  # pylint: disable=too-many-instance-attributes
    """Data-computable bounds on the suboptimality of the minmax input.

    Attributes:
        F1: Bound on the perturbation of the prediction gain.
        F2: Bound on the perturbation of the gain products.
        F3: Bound on the perturbation of the normal equation right-hand side.
        F: Bound on the distance between the noisy and clean nominal inputs.
        eta: Inflation of the coefficient norm at the clean optimum.
        C1: Bound on the coefficient error at the clean optimum.
        C2: Bound on the output prediction error at the clean optimum.
        C3: Bound on the true cost gap of the minmax input.
        K1: The prediction gain Y_f H^+.
        K2: The future input columns of K1.
        u_hat_star: The nominal input.
        g_hat_norm: The norm of the coefficient vector at the nominal input.
        certified: Whether the small-noise condition held.
    """

    F1: float
    F2: float
    F3: float
    F: float
    eta: float
    C1: float
    C2: float
    C3: float
    K1: np.ndarray
    K2: np.ndarray
    u_hat_star: np.ndarray
    g_hat_norm: float
    certified: bool

    def to_dict(self) -> dict[str, typing.Any]:
        """Serialize the scalar fields.

        Returns:
            The JSON-compatible mapping.
        """
        scalars = ("F1", "F2", "F3", "F", "eta", "C1", "C2", "C3", "g_hat_norm", "certified")
        result: dict[str, typing.Any] = {name: getattr(self, name) for name in scalars}
        result["u_hat_star"] = self.u_hat_star.tolist()
        return result


def objective_weights(
    state: PredictorState,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The output weight, input weight and reference of the regulation objective.

    Args:
        state: The predictor state.

    Returns:
        The tuple (Q, R, r_f).
    """
    recent = state.recent
    return (
        recent.output_weight(state.y_f_size),
        recent.input_weight(state.u_f_size),
        recent.reference(state.y_f_size),
    )


def regulation_cost(
    y_f: np.ndarray, u_f: np.ndarray, Q: np.ndarray, R: np.ndarray, r_f: np.ndarray
) -> float:
    """Evaluate ||y_f - r_f||_Q^2 + ||u_f||_R^2.

    Args:
        y_f: The future output.
        u_f: The future input.
        Q: The output weight.
        R: The input weight.
        r_f: The output reference.

    Returns:
        The cost.
    """
    error = np.asarray(y_f, dtype=float) - r_f
    inputs = np.asarray(u_f, dtype=float)
    return float(error @ Q @ error + inputs @ R @ inputs)


def solve_regulator(
    K1: np.ndarray,
    K2: np.ndarray,
    b0: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    r_f: np.ndarray,
) -> np.ndarray:
    """Minimize ||K1 b0 + K2 u - r_f||_Q^2 + ||u||_R^2 in closed form.

    Args:
        K1: The gain applied to the zero-input right-hand side.
        K2: The gain of the future input.
        b0: The zero-input right-hand side.
        Q: The output weight.
        R: The input weight.
        r_f: The output reference.

    Raises:
        SolverError: If the normal matrix is not positive definite.

    Returns:
        The minimizer -(K2' Q K2 + R)^-1 K2' Q (K1 b0 - r_f).
    """
    normal = K2.T @ Q @ K2 + R
    rhs = -K2.T @ Q @ (K1 @ b0 - r_f)
    try:
        return scipy.linalg.solve(normal, rhs, assume_a="pos")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError("Normal matrix of the regulator is not positive definite") from exc


def _resolve(state: PredictorState, recent: RecentTrajectory | None) -> PredictorState:
    """Swap in a recent window when one is given.

    Args:
        state: The predictor state.
        recent: The optional replacement window.

    Returns:
        The predictor state to use.
    """
    return state if recent is None else state.with_recent(recent)


def nominal_input(state: PredictorState, recent: RecentTrajectory | None = None) -> np.ndarray:
    """The certainty-equivalent optimal future input for the noisy predictor.

    Args:
        state: The predictor state.
        recent: A recent window replacing the one of the state.

    Returns:
        The nominal input.
    """
    state = _resolve(state, recent)
    K1, K2 = state.gain()
    Q, R, r_f = objective_weights(state)
    return solve_regulator(K1, K2, state.b_zero, Q, R, r_f)


class _InnerProblem:  # pylint: disable=too-many-instance-attributes
    """Worst-case noise search reduced to the coefficient vector g = g0 + N z.

    The worst output perturbation for fixed g is closed form and the recent-output
    equality only constrains |Y_p g - y_p| <= delta (1 + ||g||_1) row-wise.
    """

    def __init__(
        self, state: PredictorState, u_f: np.ndarray, prediction: Prediction, opts: SolverOptions
    ):
        """Precompute the reduced parametrization.

        Args:
            state: The predictor state.
            u_f: The future input.
            prediction: The prediction at u_f.
            opts: The solver options.

        Raises:
            InnerProblemInfeasibleError: If no coefficient vector matches the inputs.
            RankCollapseError: If the stacked data matrix is rank deficient under noise.
        """
        data = state.data
        self.delta = prediction.delta
        self.feas_tol = opts.feas_tol
        self.Q, R, self.r_f = objective_weights(state)
        self.input_cost = float(u_f @ R @ u_f)
        self.diagonal_q = not np.count_nonzero(self.Q - np.diag(np.diag(self.Q)))
        self.Y_p, self.Y_f = data.Y_p, data.Y_f
        self.y_p = state.recent.y_p
        inputs = np.vstack([data.U_p, data.U_f])
        b_inputs = np.concatenate([state.recent.u_p, u_f])
        correction, *_ = scipy.linalg.lstsq(inputs, b_inputs - inputs @ prediction.g_hat)
        self.g0 = prediction.g_hat + correction
        scale = max(1.0, float(np.linalg.norm(b_inputs)))
        if np.linalg.norm(inputs @ self.g0 - b_inputs) > math.sqrt(self.feas_tol) * scale:
            raise InnerProblemInfeasibleError(
                "Historical inputs cannot reproduce the input window"
            )
        offset = float(np.linalg.norm(correction))
        ball = prediction.g_ball_radius
        if not math.isfinite(ball):
            raise RankCollapseError(
                f"Stacked data matrix is rank deficient (sigma_min={state.sigma_min_H:.3e}), "
                f"the coefficient ball is unbounded for delta={self.delta}"
            )
        if offset > ball + self.feas_tol * max(1.0, float(np.linalg.norm(prediction.g_hat))):
            raise InnerProblemInfeasibleError(
                f"Input-consistent coefficients lie {offset:.3e} from the prediction, "
                f"outside the radius {ball:.3e}"
            )
        self.radius = math.sqrt(max(ball**2 - offset**2, 0.0))
        self.basis = scipy.linalg.null_space(inputs)
        self.slab_rows = self.Y_p @ self.basis

    @property
    def dim(self) -> int:
        """The number of free directions."""
        return self.basis.shape[1]

    def g(self, z: np.ndarray) -> np.ndarray:
        """The coefficient vector of a reduced point.

        Args:
            z: The reduced point.

        Returns:
            g0 + N z.
        """
        return self.g0 + self.basis @ z

    def worst_signs(self, c: np.ndarray, rho: float) -> np.ndarray:
        """The sign pattern of the worst output perturbation.

        Args:
            c: The nominal output error Y_f g - r_f.
            rho: The reach delta * ||g||_1 of each perturbed output.

        Returns:
            Signs s maximizing (c + rho s)' Q (c + rho s).
        """
        signs = np.where(c >= 0, 1.0, -1.0)
        if self.diagonal_q or rho == 0:
            return signs
        for _ in range(SIGN_ITERATIONS):
            updated = np.where(self.Q @ (c + rho * signs) >= 0, 1.0, -1.0)
            if np.array_equal(updated, signs):
                break
            signs = updated
        return signs

    def evaluate(self, z: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """The worst objective at a reduced point.

        Args:
            z: The reduced point.

        Returns:
            The objective, its gradient in z and the worst sign pattern.
        """
        g = self.g(z)
        c = self.Y_f @ g - self.r_f
        rho = self.delta * float(np.abs(g).sum())
        signs = self.worst_signs(c, rho)
        error = c + rho * signs
        weighted = self.Q @ error
        value = float(error @ weighted) + self.input_cost
        grad_g = 2.0 * (self.Y_f.T @ weighted + self.delta * np.sign(g) * float(signs @ weighted))
        return value, self.basis.T @ grad_g, signs

    def feasible(self, z: np.ndarray) -> bool:
        """Check the ball and the recent-output constraints.

        Args:
            z: The reduced point.

        Returns:
            Whether the point is feasible within the tolerance.
        """
        if np.linalg.norm(z) > self.radius * (1 + 1e-12) + self.feas_tol:
            return False
        g = self.g(z)
        bound = self.delta * (1.0 + float(np.abs(g).sum()))
        return bool(np.all(np.abs(self.Y_p @ g - self.y_p) <= bound + self.feas_tol))

    def _project_ball(self, z: np.ndarray) -> np.ndarray:
        """Scale a point into the ball.

        Args:
            z: The reduced point.

        Returns:
            The projection onto the ball of radius self.radius.
        """
        norm = float(np.linalg.norm(z))
        return z if norm <= self.radius else z * (self.radius / norm)

    def retract(self, z: np.ndarray) -> np.ndarray:
        """Alternate projections onto the ball and the violated recent-output slabs.

        Args:
            z: The reduced point.

        Returns:
            A point close to z, feasible when the alternation settles.
        """
        for _ in range(RETRACTION_ROUNDS):
            z = self._project_ball(z)
            g = self.g(z)
            bound = self.delta * (1.0 + float(np.abs(g).sum()))
            residual = self.Y_p @ g - self.y_p
            excess = np.abs(residual) - bound
            if np.all(excess <= self.feas_tol):
                return z
            for row in np.flatnonzero(excess > self.feas_tol):
                direction = self.slab_rows[row]
                norm_sq = float(direction @ direction)
                if norm_sq > 0:
                    z = z - (residual[row] - np.sign(residual[row]) * bound) * direction / norm_sq
        return self._project_ball(z)

    def ascend(self, z: np.ndarray, opts: SolverOptions) -> tuple[np.ndarray, float]:
        """Projected gradient ascent with backtracking from a feasible point.

        Args:
            z: The feasible start.
            opts: The solver options.

        Returns:
            The final point and its objective.
        """
        value, grad, _ = self.evaluate(z)
        if self.dim == 0 or self.radius == 0:
            return z, value
        for _ in range(opts.max_ascent_iters):
            grad_norm = float(np.linalg.norm(grad))
            if grad_norm < opts.grad_tol:
                break
            direction = grad / grad_norm
            step = 1.0
            while step > MIN_STEP:
                candidate = self.retract(z + step * self.radius * direction)
                if self.feasible(candidate):
                    candidate_value, candidate_grad, _ = self.evaluate(candidate)
                    if candidate_value > value + 1e-12 * max(1.0, abs(value)):
                        z, value, grad = candidate, candidate_value, candidate_grad
                        break
                step /= 2
            else:
                break
        return z, value

    def starts(self, opts: SolverOptions) -> list[np.ndarray]:
        """The ascent starts: the unperturbed point then random ball samples.

        Args:
            opts: The solver options.

        Raises:
            InnerProblemInfeasibleError: If no feasible start could be found.

        Returns:
            The feasible starts.
        """
        origin = np.zeros(self.dim)
        if not self.feasible(origin):
            if self.dim == 0:
                raise InnerProblemInfeasibleError(
                    "Recent outputs are inconsistent with the data and the noise bound"
                )
            target = self.y_p - self.Y_p @ self.g0
            repair, *_ = scipy.linalg.lstsq(self.slab_rows, target)
            origin = self.retract(repair)
            if not self.feasible(origin):
                raise InnerProblemInfeasibleError(
                    "No noise realization within the bound reproduces the recent outputs"
                )
            logger.debug(
                "Unperturbed start infeasible, repaired to |z|=%.3e", np.linalg.norm(origin)
            )
        starts = [origin]
        if self.dim == 0 or self.radius == 0:
            return starts
        rng = np.random.default_rng(opts.seed)
        for _ in range(opts.n_starts - 1):
            direction = rng.normal(size=self.dim)
            candidate = self.retract(
                direction * (self.radius * rng.uniform(0.5, 1.0) / np.linalg.norm(direction))
            )
            for _ in range(20):
                if self.feasible(candidate):
                    starts.append(candidate)
                    break
                candidate = origin + (candidate - origin) / 2
        return starts

    def recover(self, z: np.ndarray, signs: np.ndarray) -> tuple[Perturbation, np.ndarray]:
        """Build the noise realization attaining the objective at a reduced point.

        Args:
            z: The reduced point.
            signs: The worst output sign pattern.

        Returns:
            The perturbation and the coefficient vector.
        """
        g = self.g(z)
        g_sign = np.sign(g)
        g_l1 = float(np.abs(g).sum())
        D_Yf = self.delta * np.outer(signs, g_sign)
        residual = self.Y_p @ g - self.y_p
        reach = -np.sign(residual) * np.maximum(np.abs(residual) - self.delta, 0.0)
        D_Yp = np.outer(reach / g_l1, g_sign) if g_l1 > 0 else np.zeros_like(self.Y_p)
        D_Yp = np.clip(D_Yp, -self.delta, self.delta)
        D_yp = np.clip((self.Y_p + D_Yp) @ g - self.y_p, -self.delta, self.delta)
        return Perturbation(D_Yp=D_Yp, D_Yf=D_Yf, D_yp=D_yp), g


def inner_worst_case(
    state: PredictorState,
    u_f: typing.Any,
    prediction: Prediction | None = None,
    opts: SolverOptions | None = None,
    recent: RecentTrajectory | None = None,
) -> InnerSolution:
    """Search the noise realization maximizing the cost of a fixed future input.

    Args:
        state: The predictor state.
        u_f: The future input.
        prediction: The prediction at u_f; computed when omitted.
        opts: The solver options.
        recent: A recent window replacing the one of the state.

    Returns:
        The best feasible realization over all starts.
    """
    state = _resolve(state, recent)
    opts = opts or SolverOptions()
    inputs = np.asarray(u_f, dtype=float).reshape(-1)
    if prediction is None:
        prediction = predict(state, inputs)
    problem = _InnerProblem(state, inputs, prediction, opts)
    starts = problem.starts(opts)
    best_z, best_value = starts[0], -math.inf
    for start in starts:
        z, value = problem.ascend(start, opts)
        if value > best_value:
            best_z, best_value = z, value
    _, _, signs = problem.evaluate(best_z)
    perturbation, g = problem.recover(best_z, signs)
    y_f_tilde = (problem.Y_f + perturbation.D_Yf) @ g
    error = y_f_tilde - problem.r_f
    output_cost = float(error @ problem.Q @ error)
    return InnerSolution(
        perturbation=perturbation,
        g_tilde=g,
        y_f_tilde=y_f_tilde,
        c_worst=output_cost + problem.input_cost,
        output_cost=output_cost,
        starts_tried=opts.n_starts if problem.dim and problem.radius else 1,
        starts_feasible=len(starts),
    )


def perturbed_gain(
    state: PredictorState, perturbation: Perturbation, rank_tol: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The prediction gain of the data with a noise realization removed.

    Args:
        state: The predictor state.
        perturbation: The noise realization.
        rank_tol: Relative singular value floor of the perturbed stacked matrix.

    Raises:
        RankCollapseError: If the perturbed stacked matrix lost row rank.

    Returns:
        The tuple (K1, K2, b0) of the perturbed data.
    """
    data = state.data
    H = np.vstack([data.U_p, data.Y_p + perturbation.D_Yp, data.U_f])
    H_pinv, singular_values = truncated_pinv(H, state.pinv_tol)
    if H.shape[0] > H.shape[1] or singular_values[-1] <= rank_tol * singular_values[0]:
        raise RankCollapseError(
            "Perturbed data matrix lost row rank; use a smaller noise bound delta"
        )
    K1 = (data.Y_f + perturbation.D_Yf) @ H_pinv
    b0 = np.concatenate(
        [state.recent.u_p, state.recent.y_p + perturbation.D_yp, np.zeros(state.u_f_size)]
    )
    return K1, K1[:, data.u_f_rows], b0


def outer_step(
    state: PredictorState,
    inner: InnerSolution,
    recent: RecentTrajectory | None = None,
    rank_tol: float = SolverOptions.rank_tol,
) -> np.ndarray:
    """Minimize the cost for the fixed worst-case noise realization.

    Args:
        state: The predictor state.
        inner: The inner solution providing the noise realization.
        recent: A recent window replacing the one of the state.
        rank_tol: Relative singular value floor of the perturbed stacked matrix.

    Returns:
        The minimizing future input.
    """
    state = _resolve(state, recent)
    K1, K2, b0 = perturbed_gain(state, inner.perturbation, rank_tol)
    Q, R, r_f = objective_weights(state)
    return solve_regulator(K1, K2, b0, Q, R, r_f)


def alternate_solve(
    state: PredictorState,
    opts: SolverOptions | None = None,
    recent: RecentTrajectory | None = None,
) -> RegulationResult:
    """Alternate worst-case noise search and input minimization from the nominal input.

    Args:
        state: The predictor state.
        opts: The solver options.
        recent: A recent window replacing the one of the state.

    Returns:
        The regulation result; the best iterate when the alternation did not converge.
    """
    state = _resolve(state, recent)
    opts = opts or SolverOptions()
    delta = state.data.delta
    assumption4_ok = check_small_noise(state, delta)
    if not assumption4_ok:
        logger.warning(
            "delta=%.3e violates the small-noise condition sigma_min/(2 l_h)=%.3e, "
            "results are not certified",
            delta,
            state.sigma_min_H / (2 * state.data.l_h),
        )
    u_nominal = nominal_input(state)
    u_f = u_nominal
    trace: list[IterationRecord] = []
    best_u, best_cost = u_f, math.inf
    converged = False
    for iteration in range(1, opts.max_iters + 1):
        inner = inner_worst_case(state, u_f, opts=opts)
        if inner.c_worst < best_cost:
            best_u, best_cost = u_f, inner.c_worst
        u_next = outer_step(state, inner, rank_tol=opts.rank_tol)
        step_norm = float(np.linalg.norm(u_next - u_f))
        trace.append(IterationRecord(iteration, u_f, inner.c_worst, step_norm))
        logger.debug("iteration=%s c_worst=%.6e step=%.3e", iteration, inner.c_worst, step_norm)
        u_f = u_next
        if step_norm < opts.term_tol:
            converged = True
            break
    if converged:
        final_cost = inner_worst_case(state, u_f, opts=opts).c_worst
        logger.info("Alternation converged after %s iterations", len(trace))
        return RegulationResult(
            u_check=u_f,
            c_worst=final_cost,
            iterations=len(trace),
            converged=True,
            trace=tuple(trace),
            assumption4_ok=assumption4_ok,
            u_nominal=u_nominal,
        )
    logger.warning("Alternation did not converge in %s iterations", opts.max_iters)
    return RegulationResult(
        u_check=best_u,
        c_worst=best_cost,
        iterations=len(trace),
        converged=False,
        trace=tuple(trace),
        assumption4_ok=assumption4_ok,
        u_nominal=u_nominal,
    )


def symmetric_power(matrix: np.ndarray, power: float) -> np.ndarray:
    """A power of a symmetric positive semidefinite matrix.

    Args:
        matrix: The symmetric matrix.
        power: The exponent.

    Returns:
        The matrix power through the eigendecomposition.
    """
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    return (eigenvectors * np.clip(eigenvalues, 0.0, None) ** power) @ eigenvectors.T


def suboptimality_certificate(
    state: PredictorState,
    delta: float | None = None,
    recent: RecentTrajectory | None = None,
) -> Certificate:
    """Compute the bound on the true cost gap of the minmax input from noisy data only.

    With identity weights and zero reference the quantities reduce to the
    unweighted bounds; general weights enter through Q^(1/2) and R^(-1/2).

    Args:
        state: The predictor state.
        delta: The noise bound; the data's bound when omitted.
        recent: A recent window replacing the one of the state.

    Raises:
        CertificateError: If the coefficient vector at the nominal input vanishes.

    Returns:
        The certificate.
    """
    state = _resolve(state, recent)
    data = state.data
    noise = data.delta if delta is None else delta
    l_h, sqrt_lp = data.l_h, math.sqrt(data.l_p)
    Q, R, r_f = objective_weights(state)
    K1, K2 = state.gain()
    b0 = state.b_zero
    u_hat = solve_regulator(K1, K2, b0, Q, R, r_f)
    g_hat_norm = float(np.linalg.norm(state.H_pinv @ state.b(u_hat)))
    if g_hat_norm == 0:
        raise CertificateError("Coefficient vector at the nominal input is zero")
    if state.sigma_min_H <= 0:
        raise CertificateError("Stacked data matrix is rank deficient")
    sqrt_q = symmetric_power(Q, 0.5)
    inv_sqrt_r = symmetric_power(R, -0.5)
    q_norm = float(np.linalg.norm(Q, 2))
    w_norm = float(np.linalg.norm(inv_sqrt_r, 2))
    pinv_norm = float(np.linalg.norm(state.H_pinv, 2))
    data_norm = max(float(np.linalg.norm(data.Y_p, 2)), float(np.linalg.norm(data.Y_f, 2)))
    y_f_norm = float(np.linalg.norm(data.Y_f, 2))
    F1 = 2 * l_h * pinv_norm * (1 + 4 * data_norm * pinv_norm) * noise
    F2 = (2 * float(np.linalg.norm(K1, 2)) + F1) * F1
    F3 = w_norm * (
        sqrt_lp * float(np.linalg.norm(K2.T @ Q @ K1, 2)) * noise
        + q_norm * F2 * (float(np.linalg.norm(b0)) + sqrt_lp * noise)
        + F1 * float(np.linalg.norm(Q @ r_f))
    )
    K2_w = sqrt_q @ K2 @ inv_sqrt_r
    a_w = sqrt_q @ (K1 @ b0 - r_f)
    F2_w = w_norm**2 * q_norm * F2
    normal_inv = scipy.linalg.inv(K2_w.T @ K2_w + np.eye(K2_w.shape[1]))
    F_w = float(np.linalg.norm(normal_inv, 2)) * F3 + (
        float(np.linalg.norm(K2_w.T @ a_w)) + F3
    ) * F2_w
    F = w_norm * F_w
    eta = 1 + pinv_norm * F / g_hat_norm
    C1 = 2 / state.sigma_min_H * (sqrt_lp + eta * l_h * g_hat_norm) * noise
    C2 = (y_f_norm + l_h * noise) * C1 + eta * l_h * g_hat_norm * noise
    C3 = q_norm * (
        8 * C2**2 + 4 * (y_f_norm * g_hat_norm * eta + float(np.linalg.norm(r_f))) * C2
    )
    certified = check_small_noise(state, noise)
    if not certified:
        logger.warning("Certificate computed outside the small-noise regime, delta=%.3e", noise)
    return Certificate(
        F1=F1,
        F2=F2,
        F3=F3,
        F=F,
        eta=eta,
        C1=C1,
        C2=C2,
        C3=C3,
        K1=K1,
        K2=K2,
        u_hat_star=u_hat,
        g_hat_norm=g_hat_norm,
        certified=certified,
    )


def true_cost(
    sys: lti.StateSpace,
    x_start: typing.Any,
    u_p: typing.Any,
    u_f: typing.Any,
    Q: np.ndarray | None = None,
    R: np.ndarray | None = None,
    r_f: np.ndarray | None = None,
) -> float:
    """The cost of a future input on the true system from the recent window's state.

    Args:
        sys: The true system.
        x_start: The state at the first sample of the recent window.
        u_p: The stacked recent inputs.
        u_f: The stacked future inputs.
        Q: The output weight, identity when omitted.
        R: The input weight, identity when omitted.
        r_f: The output reference, zero when omitted.

    Raises:
        DimensionError: If a weight does not match the horizon.

    Returns:
        ||y_bar_f - r_f||_Q^2 + ||u_f||_R^2 for the clean future outputs.
    """
    past = lti.as_samples(u_p, width=sys.m)
    future = lti.as_samples(u_f, width=sys.m)
    outputs = lti.simulate(sys, x_start, np.vstack([past, future]))
    y_f = outputs[past.shape[0] :].reshape(-1)
    inputs = future.reshape(-1)
    Q = np.eye(y_f.shape[0]) if Q is None else np.atleast_2d(Q)
    R = np.eye(inputs.shape[0]) if R is None else np.atleast_2d(R)
    r_f = np.zeros(y_f.shape[0]) if r_f is None else np.asarray(r_f, dtype=float).reshape(-1)
    if Q.shape[0] != y_f.shape[0] or R.shape[0] != inputs.shape[0] or r_f.shape != y_f.shape:
        raise DimensionError("Weights and reference do not match the future horizon")
    return regulation_cost(y_f, inputs, Q, R, r_f)
