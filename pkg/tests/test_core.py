import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isqp.core import (
    CONVERGED,
    DIVERGED,
    EXPLICIT,
    MAX_ITERATIONS,
    NUMERICAL_FAILURE,
    SADDLE,
    SolverConfig,
    convergence_rate_estimate,
    feasible_direction,
    interpolated_step,
    solve,
    sqp_direction,
)
from isqp.exceptions import InsufficientData, MissingHook
from isqp.hessian import CbarPolicy, HessianStrategy, regularize
from isqp.linalg import factorize_spd, moore_penrose_right_inverse, weighted_right_inverse
from isqp.model import EvalBundle, NlpProblem, evaluate
from isqp.problems import REGISTRY, get_problem, hs77, p_circle, p_lin

from .conftest import random_instance


def bundle_of(j1, j2, f2):
    j1 = np.asarray(j1, dtype=float)
    return EvalBundle(x=np.zeros(j1.size), f1=0.0, f2=np.asarray(f2, float), j1=j1, j2=np.asarray(j2, float))


def rel(a, b):
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


class TestSqpDirection:
    @pytest.mark.parametrize("path", [EXPLICIT, SADDLE])
    def test_p_lin_origin(self, path):
        problem, _ = p_lin()
        bundle = evaluate(problem, [0.0, 0.0])
        dx, lam = sqp_direction(bundle, regularize(np.eye(2), bundle.j2), path)
        np.testing.assert_allclose(dx, [1.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(lam, [-1.0], atol=1e-14)

    @pytest.mark.parametrize("path", [EXPLICIT, SADDLE])
    def test_p_lin_feasible_point(self, path):
        # (I - T J2) projects -J1^T = (-2, 0) onto null(J2): (-1, 1)
        problem, _ = p_lin()
        bundle = evaluate(problem, [2.0, 0.0])
        dx, lam = sqp_direction(bundle, regularize(np.eye(2), bundle.j2), path)
        np.testing.assert_allclose(dx, [-1.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(lam, [-1.0], atol=1e-14)

    @pytest.mark.parametrize("name", sorted(REGISTRY))
    @pytest.mark.parametrize("kind", ["exact", "ggn", "identity"])
    def test_zero_at_kkt_pair(self, name, kind):
        problem, ref = get_problem(name)
        bundle = evaluate(problem, ref.x_star)
        from isqp.hessian import build_hessian

        b = build_hessian(HessianStrategy(kind), problem, ref.x_star, ref.lambda_star)
        for path in (EXPLICIT, SADDLE):
            dx, lam = sqp_direction(bundle, regularize(b, bundle.j2), path)
            assert np.linalg.norm(dx) <= 1e-9
            np.testing.assert_allclose(lam, ref.lambda_star, atol=1e-9)

    def test_multiplier_satisfies_first_row(self, rng):
        for _ in range(50):
            b, j2, g, h = random_instance(rng)
            reg = regularize(b, j2)
            dx, lam = sqp_direction(bundle_of(g, j2, h), reg, EXPLICIT)
            assert rel(b @ dx + j2.T @ lam, -g) <= 1e-8

    def test_path_equivalence_with_shift(self, rng):
        # indefinite B, positive definite on null(J2): cbar > 0 exercises the mu shift
        for _ in range(50):
            n = int(rng.integers(2, 8))
            m = int(rng.integers(1, n))
            j2 = rng.standard_normal((m, n))
            z = np.linalg.svd(j2)[2][m:].T
            b = z @ z.T + 0.2 * np.eye(n) - rng.uniform(0.5, 2.0) * (j2.T @ j2)
            reg = regularize(b, j2)
            assert reg.cbar > 0
            bundle = bundle_of(rng.standard_normal(n), j2, rng.standard_normal(m))
            dx_e, lam_e = sqp_direction(bundle, reg, EXPLICIT)
            dx_s, lam_s = sqp_direction(bundle, reg, SADDLE)
            assert rel(dx_e, dx_s) <= 1e-8
            assert rel(lam_e, lam_s) <= 1e-8

    def test_descent_at_feasible_points(self, rng):
        for _ in range(100):
            b, j2, g, _ = random_instance(rng)
            reg = regularize(b, j2)
            dx, _ = sqp_direction(bundle_of(g, j2, np.zeros(j2.shape[0])), reg, EXPLICIT)
            slope = g @ dx
            assert slope <= 1e-10
            if np.linalg.norm(dx) > 1e-8:
                assert slope < 0

    def test_unknown_path(self):
        problem, _ = p_lin()
        bundle = evaluate(problem, [0.0, 0.0])
        with pytest.raises(ValueError):
            sqp_direction(bundle, regularize(np.eye(2), bundle.j2), "qr")


class TestFeasibleDirection:
    def test_feasible_point(self):
        bundle = bundle_of([1.0, 2.0], [[1.0, 1.0]], [0.0])
        t = moore_penrose_right_inverse(bundle.j2)
        np.testing.assert_array_equal(feasible_direction(bundle, t, t, 0.4), [0.0, 0.0])

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9, 1.0])
    def test_equal_inverses(self, alpha):
        bundle = bundle_of([0.0, 0.0], [[1.0, 1.0]], [-2.0])
        t = moore_penrose_right_inverse(bundle.j2)
        tc = weighted_right_inverse(factorize_spd(np.eye(2)), bundle.j2)
        np.testing.assert_allclose(feasible_direction(bundle, tc, t, alpha), [1.0, 1.0], atol=1e-14)

    def test_weighted_example(self):
        # -(2 T - T_C) F2 with T = (0.5, 0.5), T_C = (0.8, 0.2), F2 = -2
        bundle = bundle_of([0.0, 0.0], [[1.0, 1.0]], [-2.0])
        t = moore_penrose_right_inverse(bundle.j2)
        tc = weighted_right_inverse(factorize_spd(np.diag([1.0, 4.0])), bundle.j2)
        dx = feasible_direction(bundle, tc, t, 0.5)
        np.testing.assert_allclose(dx, [0.4, 1.6], atol=1e-14)
        assert bundle.j2 @ dx == pytest.approx([2.0])

    def test_bad_alpha(self):
        bundle = bundle_of([0.0, 0.0], [[1.0, 1.0]], [-2.0])
        t = moore_penrose_right_inverse(bundle.j2)
        with pytest.raises(ValueError):
            feasible_direction(bundle, t, t, 0.0)


class TestInterpolatedStep:
    def test_alpha_one_is_sqp(self, rng):
        b, j2, g, h = random_instance(rng)
        bundle, reg = bundle_of(g, j2, h), regularize(b, j2)
        step = interpolated_step(bundle, reg, SolverConfig(alpha=1.0))
        np.testing.assert_array_equal(step.dx, step.dx_sqp)

    @pytest.mark.parametrize("path", [EXPLICIT, SADDLE])
    def test_p_lin_half_step(self, path):
        problem, _ = p_lin()
        bundle = evaluate(problem, [2.0, 0.0])
        step = interpolated_step(bundle, regularize(np.eye(2), bundle.j2), SolverConfig(alpha=0.5, direction_path=path))
        np.testing.assert_allclose(step.dx, [-0.5, 0.5], atol=1e-14)
        np.testing.assert_allclose(bundle.x + step.dx, [1.5, 0.5], atol=1e-14)

    @pytest.mark.parametrize("name", sorted(REGISTRY))
    def test_zero_at_kkt_pair(self, name):
        problem, ref = get_problem(name)
        bundle = evaluate(problem, ref.x_star)
        step = interpolated_step(bundle, regularize(np.eye(problem.n), bundle.j2), SolverConfig(alpha=0.3))
        assert np.linalg.norm(step.dx) <= 1e-9

    @settings(max_examples=100, deadline=None)
    # dx_feasible divides by (1 - alpha); within ~1e-3 of 1 cancellation swamps the 1e-10 bound
    @given(
        seed=st.integers(0, 2**32 - 1),
        alpha=st.one_of(st.floats(0.01, 0.99), st.just(1.0)),
        saddle=st.booleans(),
    )
    def test_identity_and_feasibility(self, seed, alpha, saddle):
        rng = np.random.default_rng(seed)
        b, j2, g, h = random_instance(rng)
        bundle = bundle_of(g, j2, h)
        cfg = SolverConfig(alpha=alpha, direction_path=SADDLE if saddle else EXPLICIT)
        step = interpolated_step(bundle, regularize(b, j2), cfg)
        combo = alpha * step.dx_sqp + (1 - alpha) * step.dx_feasible
        assert np.linalg.norm(step.dx - combo) <= 1e-10 * (1 + np.linalg.norm(step.dx))
        assert np.linalg.norm(j2 @ step.dx + h) <= 1e-9 * (1 + np.linalg.norm(h))
        assert np.linalg.norm(j2 @ step.dx_feasible + h) <= 1e-9 * (1 + np.linalg.norm(h))


class TestSolve:
    def test_hs77_exact(self):
        problem, ref = hs77()
        report = solve(problem, HessianStrategy.exact())
        assert report.status == CONVERGED
        assert report.iterations == len(report.trace) == 12
        assert report.final_kkt_residual <= 1e-7
        np.testing.assert_allclose(report.final.x, ref.x_star, atol=1e-7)

    def test_hs77_ggn_pure_sqp_fails(self):
        problem, _ = hs77()
        report = solve(problem, HessianStrategy.ggn(), SolverConfig(max_iter=200))
        assert report.status in (DIVERGED, MAX_ITERATIONS)

    def test_hs77_isqp_ggn(self):
        problem, ref = hs77()
        report = solve(problem, HessianStrategy.ggn(), SolverConfig(alpha=0.35))
        assert report.status == CONVERGED
        assert abs(report.iterations - 18) <= 3
        np.testing.assert_allclose(report.final.x, [1.166172, 1.182111, 1.380257, 1.506036, 0.610920], atol=1e-6)

    @pytest.mark.parametrize("name", sorted(REGISTRY))
    def test_fixed_point(self, name):
        problem, ref = get_problem(name)
        report = solve(problem, HessianStrategy.identity(), SolverConfig(alpha=0.5), x0=ref.x_star, lam0=ref.lambda_star)
        assert report.status == CONVERGED
        assert report.iterations <= 1

    def test_max_iterations(self):
        problem, _ = hs77()
        report = solve(problem, HessianStrategy.identity(), SolverConfig(alpha=0.3, max_iter=5))
        assert report.status == MAX_ITERATIONS
        assert report.iterations == len(report.trace) == 5

    def test_divergence_threshold(self):
        problem, _ = hs77()
        report = solve(problem, HessianStrategy.exact(), SolverConfig(divergence_threshold=10.0))
        assert report.status == DIVERGED
        assert report.iterations == 0

    def test_numerical_failure(self):
        problem, _ = p_lin()
        neg = HessianStrategy.constant(np.diag([-1.0, -1.0]))
        report = solve(problem, neg)
        assert report.status == NUMERICAL_FAILURE
        assert "iteration 0" in report.message
        assert "RegularizationFailed" in report.message

    def test_missing_hook(self):
        problem = NlpProblem(
            name="bare",
            n=2,
            m=1,
            objective=lambda x: float(x @ x),
            constraints=lambda x: np.array([x[0] - 1]),
            objective_gradient=lambda x: 2 * x,
            constraint_jacobian=lambda x: np.array([[1.0, 0.0]]),
            initial_point=[0.0, 0.0],
        )
        with pytest.raises(MissingHook):
            solve(problem, HessianStrategy.exact())
        assert solve(problem, HessianStrategy.identity()).status == CONVERGED

    def test_lipschitz_diagnostic(self):
        problem, _ = hs77()
        ident = solve(problem, HessianStrategy.identity(), SolverConfig(alpha=0.3, max_iter=10))
        assert np.isnan(ident.trace[0].lipschitz_ratio)
        assert all(r.lipschitz_ratio == 0.0 for r in ident.trace[1:])
        exact = solve(problem, HessianStrategy.exact())
        assert all(r.lipschitz_ratio > 0 for r in exact.trace[1:])

    def test_linear_constraint_stays_feasible(self):
        problem, _ = p_lin()
        for x0 in ([0.0, 0.0], [5.0, -3.0], [-2.0, 7.5]):
            report = solve(problem, HessianStrategy.identity(), SolverConfig(alpha=0.3), x0=x0)
            assert report.status == CONVERGED
            assert all(r.constraint_norm <= 1e-10 for r in report.trace[1:])

    def test_p_circle_needs_interpolation(self):
        problem, ref = p_circle()
        pure = solve(problem, HessianStrategy.identity(), SolverConfig(max_iter=200))
        assert pure.status != CONVERGED
        interp = solve(problem, HessianStrategy.identity(), SolverConfig(alpha=0.3))
        assert interp.status == CONVERGED
        np.testing.assert_allclose(interp.final.x, ref.x_star, atol=1e-7)

    CONTRACTION_RUNS = [
        (hs77, HessianStrategy.identity(), 0.3),
        (hs77, HessianStrategy.identity(), 0.25),
        (hs77, HessianStrategy.ggn(), 0.4),
        (hs77, HessianStrategy.ggn(), 0.45),
        (p_circle, HessianStrategy.exact(), 0.5),
        (p_circle, HessianStrategy.ggn(), 0.3),
        (p_circle, HessianStrategy.identity(), 0.3),
        (p_lin, HessianStrategy.identity(), 0.5),
    ]
    # a global-phase step-length bump lands just past the first quarter on these short runs
    TRANSIENT_RUNS = [
        (hs77, HessianStrategy.exact(), 1.0),
        (hs77, HessianStrategy.ggn(), 0.3),
        (hs77, HessianStrategy.ggn(), 0.35),
    ]

    @staticmethod
    def _contracts_after(ctor, strategy, alpha, start_fraction):
        problem, _ = ctor()
        report = solve(problem, strategy, SolverConfig(alpha=alpha))
        assert report.converged
        steps = report.step_norms
        start = max(1, int(len(steps) * start_fraction))
        return all(steps[k] < steps[k - 1] for k in range(start, len(steps)))

    @pytest.mark.parametrize("ctor,strategy,alpha", CONTRACTION_RUNS)
    def test_local_contraction(self, ctor, strategy, alpha):
        assert self._contracts_after(ctor, strategy, alpha, 0.25)

    @pytest.mark.parametrize("ctor,strategy,alpha", TRANSIENT_RUNS)
    def test_local_contraction_after_transient(self, ctor, strategy, alpha):
        assert not self._contracts_after(ctor, strategy, alpha, 0.25)
        assert self._contracts_after(ctor, strategy, alpha, 0.5)

    def test_deterministic(self):
        problem, _ = hs77()
        a = solve(problem, HessianStrategy.ggn(), SolverConfig(alpha=0.4))
        b = solve(problem, HessianStrategy.ggn(), SolverConfig(alpha=0.4))
        assert [r.kkt_residual for r in a.trace] == [r.kkt_residual for r in b.trace]
        np.testing.assert_array_equal(a.final.x, b.final.x)

    def test_custom_cbar_policy(self):
        problem, _ = hs77()
        # the exact Hessian needs a shift late in the run; forbid it
        report = solve(problem, HessianStrategy.exact(), SolverConfig(cbar_policy=CbarPolicy((0.0,))))
        assert report.status == NUMERICAL_FAILURE


class TestSolverConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [{"alpha": 0.0}, {"alpha": 1.5}, {"tol": 0.0}, {"max_iter": -1}, {"direction_path": "lu"}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)


class TestRateEstimate:
    def test_geometric(self):
        rate = convergence_rate_estimate(0.5 ** np.arange(12.0))
        assert rate.order == pytest.approx(1.0, abs=1e-9)
        assert rate.constant == pytest.approx(0.5, rel=1e-9)
        assert rate.classification == "linear"

    def test_quadratic(self):
        rate = convergence_rate_estimate(0.1 ** (2.0 ** np.arange(5)))
        assert rate.order == pytest.approx(2.0, abs=1e-9)
        assert rate.classification == "quadratic"

    def test_hs77_exact_trace(self):
        problem, _ = hs77()
        rate = convergence_rate_estimate(solve(problem, HessianStrategy.exact()))
        assert rate.order >= 1.7

    def test_hs77_isqp_linear(self):
        problem, _ = hs77()
        rate = convergence_rate_estimate(solve(problem, HessianStrategy.ggn(), SolverConfig(alpha=0.35)))
        assert rate.classification == "linear"
        assert 0 < rate.constant < 1

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            convergence_rate_estimate([1.0, 0.1, 0.0])
