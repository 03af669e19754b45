# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Unit tests for robust module."""

import itertools
import math

import numpy as np
import pytest
import scipy.linalg
import scipy.optimize

import lti
import robust
from exceptions import CertificateError, RankCollapseError
from page import RecentTrajectory, behavioral_data_from_trajectory, split_recent
from predictor import PredictorState, build_predictor, predict
from state import SolverOptions
from tests.unit import factories

R_SCALE = 10.0


@pytest.fixture(name="toy_state")
def toy_state_fixture(eq18_system: lti.StateSpace) -> PredictorState:
    """A toy instance with four Page columns and l_p = l_f = 1."""
    clean = lti.generate_historical(eq18_system, 2, 4, 2.0, 3)
    noisy = lti.add_noise(clean.outputs, lti.NoiseModel(delta=1e-4, seed=3))
    data = behavioral_data_from_trajectory(clean.inputs, noisy, 2, 1, delta=1e-4)
    recent = split_recent([1.5], [2.0], 1, Q=np.eye(1), R=R_SCALE * np.eye(1))
    return build_predictor(data, recent)


def _brute_force_worst_case(state: PredictorState, u_f: np.ndarray, points: int = 601) -> float:
    """Maximize the cost over a dense grid of coefficients and every output sign pattern.

    Args:
        state: The toy predictor state.
        u_f: The future input.
        points: The grid points per reduced coordinate.

    Returns:
        The largest feasible cost found.
    """
    data = state.data
    delta = data.delta
    prediction = predict(state, u_f)
    basis = scipy.linalg.null_space(np.vstack([data.U_p, data.U_f]))
    radius = prediction.g_ball_radius
    axis = np.linspace(-radius, radius, points)
    grid = np.array(list(itertools.product(axis, repeat=basis.shape[1])))
    grid = grid[np.linalg.norm(grid, axis=1) <= radius]
    coefficients = prediction.g_hat + grid @ basis.T
    l1 = np.abs(coefficients).sum(axis=1)
    slab = np.abs(coefficients @ data.Y_p.T - state.recent.y_p).max(axis=1)
    coefficients = coefficients[slab <= delta * (1 + l1)]
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=data.l_h)))
    outputs = (coefficients @ data.Y_f.T)[:, :1] + delta * coefficients @ signs.T
    costs = outputs**2 + R_SCALE * float(u_f @ u_f)
    return float(costs.max())


def test_regulation_cost():
    """
    arrange: given outputs, inputs, weights and a reference.
    act: when the regulation cost is evaluated.
    assert: the weighted squared norms are summed.
    """
    cost = robust.regulation_cost(
        np.array([1.0, 2.0]), np.array([3.0]), np.diag([1.0, 2.0]), np.eye(1) * 10, np.ones(2)
    )

    assert cost == pytest.approx(0 + 2 * 1 + 10 * 9)


def test_solve_regulator_first_order_condition():
    """
    arrange: given random gains and weights.
    act: when the regulator is solved.
    assert: the gradient of the objective vanishes at the returned input.
    """
    generator = np.random.default_rng(0)
    K1, K2 = generator.normal(size=(3, 9)), generator.normal(size=(3, 3))
    b0, r_f = generator.normal(size=9), generator.normal(size=3)
    Q, R = np.diag([1.0, 2.0, 3.0]), 10 * np.eye(3)

    u = robust.solve_regulator(K1, K2, b0, Q, R, r_f)

    gradient = 2 * K2.T @ Q @ (K1 @ b0 + K2 @ u - r_f) + 2 * R @ u
    assert np.linalg.norm(gradient) < 1e-8


def test_nominal_input_zero_window(clean_state: PredictorState):
    """
    arrange: given a zero recent window and a zero reference.
    act: when the nominal input is computed.
    assert: it is zero.
    """
    recent = RecentTrajectory(u_p=np.zeros(3), y_p=np.zeros(3), R=R_SCALE * np.eye(3))

    np.testing.assert_allclose(robust.nominal_input(clean_state, recent), np.zeros(3))


def test_nominal_input_minimizes_predicted_cost(noisy_state: PredictorState):
    """
    arrange: given the noisy benchmark predictor.
    act: when the nominal input is computed.
    assert: a generic minimizer of the predicted cost finds no better input.
    """
    Q, R, r_f = robust.objective_weights(noisy_state)

    def cost(u_f: np.ndarray) -> float:
        """Predicted cost of a future input.

        Args:
            u_f: The future input.

        Returns:
            The cost.
        """
        return robust.regulation_cost(predict(noisy_state, u_f).y_f_hat, u_f, Q, R, r_f)

    u_hat = robust.nominal_input(noisy_state)
    reference = scipy.optimize.minimize(cost, np.zeros(3), method="BFGS", tol=1e-12)

    assert cost(u_hat) <= reference.fun + 1e-6


def test_inner_worst_case_noiseless(clean_state: PredictorState):
    """
    arrange: given noiseless data.
    act: when the worst case of the nominal input is searched.
    assert: the perturbation is zero and c_worst is the predicted cost.
    """
    u_f = robust.nominal_input(clean_state)
    prediction = predict(clean_state, u_f)
    Q, R, r_f = robust.objective_weights(clean_state)

    inner = robust.inner_worst_case(clean_state, u_f)

    assert inner.perturbation.max_abs() == 0
    np.testing.assert_allclose(inner.g_tilde, prediction.g_hat, atol=1e-10)
    assert inner.c_worst == pytest.approx(
        robust.regulation_cost(prediction.y_f_hat, u_f, Q, R, r_f), rel=1e-9
    )


def test_inner_worst_case_feasible(noisy_state: PredictorState):
    """
    arrange: given noisy data and an arbitrary future input.
    act: when the worst case is searched.
    assert: the returned point satisfies every noise constraint and beats the start.
    """
    data = noisy_state.data
    u_f = np.array([1.0, -3.0, 2.0])
    prediction = predict(noisy_state, u_f)
    Q, R, r_f = robust.objective_weights(noisy_state)
    opts = factories.SolverOptionsFactory()

    inner = robust.inner_worst_case(noisy_state, u_f, prediction, opts)

    perturbation = inner.perturbation
    g = inner.g_tilde
    tol = 1e-7
    assert perturbation.max_abs() <= data.delta + tol
    assert np.linalg.norm(g - prediction.g_hat) <= prediction.g_ball_radius + tol
    np.testing.assert_allclose(data.U_p @ g, noisy_state.recent.u_p, atol=tol)
    np.testing.assert_allclose(data.U_f @ g, u_f, atol=tol)
    np.testing.assert_allclose(
        (data.Y_p + perturbation.D_Yp) @ g, noisy_state.recent.y_p + perturbation.D_yp, atol=tol
    )
    np.testing.assert_allclose(inner.y_f_tilde, (data.Y_f + perturbation.D_Yf) @ g)
    assert inner.c_worst >= robust.regulation_cost(prediction.y_f_hat, u_f, Q, R, r_f)
    assert inner.starts_feasible >= 1


def test_inner_worst_case_matches_brute_force(toy_state: PredictorState):
    """
    arrange: given a toy instance with a two-dimensional reduced search space.
    act: when the worst case is searched.
    assert: c_worst matches a dense grid search within 1e-3.
    """
    u_f = np.array([-0.8])

    inner = robust.inner_worst_case(toy_state, u_f)

    expected = _brute_force_worst_case(toy_state, u_f)
    assert inner.c_worst == pytest.approx(expected, abs=1e-3 * max(1.0, expected))


def test_outer_step_zero_perturbation(noisy_state: PredictorState):
    """
    arrange: given a zero noise realization.
    act: when the outer step is taken.
    assert: it returns the nominal input.
    """
    data = noisy_state.data
    zero = robust.Perturbation(
        D_Yp=np.zeros_like(data.Y_p), D_Yf=np.zeros_like(data.Y_f), D_yp=np.zeros(3)
    )
    inner = robust.InnerSolution(
        perturbation=zero,
        g_tilde=np.zeros(data.l_h),
        y_f_tilde=np.zeros(3),
        c_worst=0.0,
        output_cost=0.0,
        starts_tried=1,
        starts_feasible=1,
    )

    u_f = robust.outer_step(noisy_state, inner)

    np.testing.assert_allclose(u_f, robust.nominal_input(noisy_state), rtol=1e-10, atol=1e-10)


def test_outer_step_matches_brute_force(toy_state: PredictorState):
    """
    arrange: given the worst-case realization of a toy instance.
    act: when the outer step is taken.
    assert: the returned input minimizes the perturbed cost on a dense grid within 1e-3.
    """
    data = toy_state.data
    inner = robust.inner_worst_case(toy_state, np.array([-0.8]))
    perturbation = inner.perturbation
    H = np.vstack([data.U_p, data.Y_p + perturbation.D_Yp, data.U_f])
    gain = (data.Y_f + perturbation.D_Yf) @ np.linalg.pinv(H)
    grid = np.linspace(-30, 30, 600_001)
    rhs = np.vstack(
        [
            np.full_like(grid, toy_state.recent.u_p[0]),
            np.full_like(grid, toy_state.recent.y_p[0] + perturbation.D_yp[0]),
            grid,
        ]
    )
    costs = (gain @ rhs)[0] ** 2 + R_SCALE * grid**2

    u_f = robust.outer_step(toy_state, inner)

    b = np.array([rhs[0, 0], rhs[1, 0], u_f[0]])
    cost = float((gain @ b)[0] ** 2 + R_SCALE * u_f[0] ** 2)
    assert cost == pytest.approx(float(costs.min()), abs=1e-3)


def test_perturbed_gain_rank_collapse(noisy_state: PredictorState):
    """
    arrange: given a realization that makes the past outputs repeat the past inputs.
    act: when the perturbed gain is computed.
    assert: RankCollapseError is raised.
    """
    data = noisy_state.data
    collapse = robust.Perturbation(
        D_Yp=data.U_p - data.Y_p, D_Yf=np.zeros_like(data.Y_f), D_yp=np.zeros(3)
    )

    with pytest.raises(RankCollapseError):
        robust.perturbed_gain(noisy_state, collapse, 1e-10)


@pytest.fixture(name="rank_deficient_state")
def rank_deficient_state_fixture(clean_historical: lti.Trajectory) -> PredictorState:
    """Clean data split with l_p = 4 above the observability index, declared noisy."""
    l_p = 4
    data = behavioral_data_from_trajectory(
        clean_historical.inputs, clean_historical.outputs, l_p + 3, l_p, delta=1e-3
    )
    recent = split_recent(clean_historical.inputs[:l_p], clean_historical.outputs[:l_p], l_p)
    return build_predictor(data, recent)


def test_inner_worst_case_rank_deficient(rank_deficient_state: PredictorState):
    """
    arrange: given a stacked data matrix without full row rank and a positive noise bound.
    act: when the worst-case noise is searched.
    assert: RankCollapseError is raised instead of a worst case at the nominal point.
    """
    prediction = predict(rank_deficient_state, np.zeros(3))
    assert math.isinf(prediction.g_ball_radius)

    with pytest.raises(RankCollapseError):
        robust.inner_worst_case(
            rank_deficient_state, np.zeros(3), opts=factories.SolverOptionsFactory()
        )


def test_alternate_solve_rank_deficient(rank_deficient_state: PredictorState):
    """
    arrange: given a stacked data matrix without full row rank and a positive noise bound.
    act: when the minmax problem is solved.
    assert: RankCollapseError is raised.
    """
    with pytest.raises(RankCollapseError):
        robust.alternate_solve(rank_deficient_state, factories.SolverOptionsFactory())


def test_alternate_solve_noiseless(clean_state: PredictorState):
    """
    arrange: given noiseless data.
    act: when the minmax problem is solved.
    assert: it converges in one iteration to the nominal input.
    """
    result = robust.alternate_solve(clean_state, factories.SolverOptionsFactory())

    assert result.converged
    assert result.iterations == 1
    np.testing.assert_allclose(result.u_check, robust.nominal_input(clean_state), atol=1e-8)
    assert result.trace[0].to_dict()["iteration"] == 1


def test_alternate_solve_noisy(
    eq18_system: lti.StateSpace,
    noisy_state: PredictorState,
    recent_window: tuple[np.ndarray, np.ndarray, np.ndarray],
):
    """
    arrange: given noisy benchmark data with noise bound 1e-3.
    act: when the minmax problem is solved.
    assert: it converges within three alternations and c_worst bounds the true cost.
    """
    window_u, _, x_start = recent_window
    Q, R, r_f = robust.objective_weights(noisy_state)

    result = robust.alternate_solve(noisy_state, factories.SolverOptionsFactory())

    assert result.converged
    assert result.iterations <= 3
    assert result.assumption4_ok
    assert result.c_worst >= robust.true_cost(
        eq18_system, x_start, window_u, result.u_check, Q, R, r_f
    )


def test_alternate_solve_not_converged(noisy_state: PredictorState):
    """
    arrange: given a zero termination tolerance and a single allowed iteration.
    act: when the minmax problem is solved.
    assert: the best iterate is returned with the non-converged flag.
    """
    opts = SolverOptions(term_tol=0.0, max_iters=1, n_starts=2, max_ascent_iters=10)

    result = robust.alternate_solve(noisy_state, opts)

    assert not result.converged
    assert result.iterations == 1
    np.testing.assert_array_equal(result.u_check, result.u_nominal)
    assert result.c_worst == result.trace[0].c_worst


def test_certificate_noiseless(noisy_state: PredictorState):
    """
    arrange: given the benchmark predictor.
    act: when the certificate is computed at zero noise.
    assert: every bound vanishes and eta is one.
    """
    certificate = robust.suboptimality_certificate(noisy_state, delta=0.0)

    for name in ("F1", "F2", "F3", "F", "C1", "C2", "C3"):
        assert getattr(certificate, name) == 0
    assert certificate.eta == 1
    assert certificate.certified
    assert set(certificate.to_dict()) >= {"C3", "eta", "u_hat_star"}


def test_certificate_monotone_in_delta(noisy_state: PredictorState):
    """
    arrange: given the benchmark predictor and a grid of noise bounds.
    act: when the certificate is computed on the grid.
    assert: every bound is nondecreasing in delta.
    """
    deltas = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)

    certificates = [robust.suboptimality_certificate(noisy_state, delta) for delta in deltas]

    for name in ("F1", "F2", "F3", "F", "eta", "C1", "C2", "C3"):
        values = [getattr(certificate, name) for certificate in certificates]
        assert values == sorted(values), name


def test_certificate_bounds_true_gap(
    eq18_system: lti.StateSpace,
    clean_state: PredictorState,
    noisy_state: PredictorState,
    recent_window: tuple[np.ndarray, np.ndarray, np.ndarray],
):
    """
    arrange: given noisy and clean benchmark predictors.
    act: when the minmax input and the clean optimum are evaluated on the true system.
    assert: the true cost gap is below C3 and the coefficient inflation bound holds.
    """
    window_u, _, x_start = recent_window
    Q, R, r_f = robust.objective_weights(noisy_state)
    certificate = robust.suboptimality_certificate(noisy_state)
    u_star = robust.nominal_input(clean_state)
    u_check = robust.alternate_solve(noisy_state, factories.SolverOptionsFactory()).u_check

    gap = robust.true_cost(eq18_system, x_start, window_u, u_check, Q, R, r_f) - robust.true_cost(
        eq18_system, x_start, window_u, u_star, Q, R, r_f
    )

    assert gap <= certificate.C3
    g_star = predict(noisy_state, u_star).g_hat
    assert np.linalg.norm(g_star) <= certificate.eta * certificate.g_hat_norm


def test_certificate_zero_data(clean_state: PredictorState):
    """
    arrange: given a zero recent window and zero reference.
    act: when the certificate is computed.
    assert: CertificateError is raised.
    """
    recent = RecentTrajectory(u_p=np.zeros(3), y_p=np.zeros(3))

    with pytest.raises(CertificateError):
        robust.suboptimality_certificate(clean_state, recent=recent)


def test_true_cost_at_rest(eq18_system: lti.StateSpace):
    """
    arrange: given the system at rest and zero inputs.
    act: when the true cost is evaluated.
    assert: it is zero.
    """
    assert robust.true_cost(eq18_system, np.zeros(3), np.zeros(3), np.zeros(3)) == 0


def test_true_cost_matches_noiseless_prediction(
    eq18_system: lti.StateSpace,
    clean_state: PredictorState,
    recent_window: tuple[np.ndarray, np.ndarray, np.ndarray],
):
    """
    arrange: given noiseless data and a future input.
    act: when the true and predicted costs are evaluated.
    assert: they agree within 1e-8 relative.
    """
    window_u, _, x_start = recent_window
    Q, R, r_f = robust.objective_weights(clean_state)
    u_f = np.array([4.0, -2.0, 1.0])

    predicted = robust.regulation_cost(predict(clean_state, u_f).y_f_hat, u_f, Q, R, r_f)

    assert robust.true_cost(eq18_system, x_start, window_u, u_f, Q, R, r_f) == pytest.approx(
        predicted, rel=1e-8
    )
