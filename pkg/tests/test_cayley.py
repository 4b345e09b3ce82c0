"""Tests for the Cayley retraction, transports, and their diagnostics."""

import numpy as np
import pytest

from conftest import make_context, rel_err

from gstiefel_cg import (
    CayleyKernel,
    DegeneracyError,
    DimensionError,
    MetricContext,
    RetractionStrategy,
    StepTooLargeError,
    angle_bound,
    retract,
    skew_factors,
    transport_diff,
    transport_iso,
)


def _hand_case():
    """M = I2, X = e1, Z = e2: everything is computable by hand."""
    ctx = MetricContext(np.eye(2))
    X = np.array([[1.0], [0.0]])
    Z = np.array([[0.0], [1.0]])
    return ctx, X, Z


class TestSkewFactors:
    def test_zero_direction(self, rng):
        ctx, rng = make_context(8, 1e2, 0)
        X = ctx.random_point(3, rng)
        f = skew_factors(ctx, X, np.zeros_like(X))
        assert np.allclose(f.dense(), 0.0)
        assert np.allclose(f.U[:, 3:], X)  # second block is X itself

    def test_hand_case(self):
        ctx, X, Z = _hand_case()
        W = skew_factors(ctx, X, Z).dense()
        assert np.allclose(W, [[0.0, -1.0], [1.0, 0.0]], atol=1e-15)

    def test_skew_symmetry(self, rng):
        ctx, rng = make_context(12, 1e3, 1)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        W = skew_factors(ctx, X, Z).dense()
        assert np.linalg.norm(W + W.T) <= 1e-10 * (1 + np.linalg.norm(W))

    def test_reconstructs_direction(self):
        ctx, rng = make_context(30, 1e3, 2)
        X = ctx.random_point(4, rng)
        Z = ctx.random_tangent(X, rng)
        W = skew_factors(ctx, X, Z).dense()
        assert np.allclose(W @ ctx.M @ X, Z, atol=1e-12)

    def test_strategy_resolution(self):
        assert RetractionStrategy.AUTO.resolve(100, 5) is RetractionStrategy.LOW_RANK
        assert RetractionStrategy.AUTO.resolve(100, 26) is RetractionStrategy.FULL
        assert RetractionStrategy.AUTO.resolve(20, 5) is RetractionStrategy.LOW_RANK
        assert RetractionStrategy.AUTO.resolve(19, 5) is RetractionStrategy.FULL
        assert RetractionStrategy.FULL.resolve(100, 5) is RetractionStrategy.FULL


class TestRetract:
    def test_zero_step_is_exact(self, rng):
        ctx, rng = make_context(10, 1e2, 3)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        for strategy in (RetractionStrategy.FULL, RetractionStrategy.LOW_RANK):
            assert np.array_equal(retract(ctx, X, Z, 0.0, strategy), X)

    def test_hand_case(self):
        ctx, X, Z = _hand_case()
        assert np.allclose(retract(ctx, X, Z, 2.0), [[0.0], [1.0]], atol=1e-14)

    def test_paths_agree_and_feasible(self):
        ctx, rng = make_context(100, 1e3, 4)
        X = ctx.random_point(5, rng)
        Z = ctx.random_tangent(X, rng)
        kf = CayleyKernel(ctx, X, Z, RetractionStrategy.FULL)
        kl = CayleyKernel(ctx, X, Z, RetractionStrategy.LOW_RANK)
        for t in (0.05, 0.4, 1.3, 2.0):
            Xf, Xl = kf.retract(t), kl.retract(t)
            assert rel_err(Xf, Xl) <= 1e-11
            assert ctx.check_feasibility(Xl) <= 1e-11

    def test_first_order_agreement(self, rng):
        ctx, rng = make_context(20, 1e2, 5)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        h = 1e-6
        deriv = (retract(ctx, X, Z, h) - retract(ctx, X, Z, -h)) / (2 * h)
        assert np.allclose(deriv, Z, atol=1e-8)

    def test_second_order_slope(self, rng):
        ctx, rng = make_context(25, 1e2, 6)
        X = ctx.random_point(4, rng)
        Z = ctx.random_tangent(X, rng)
        ts = np.array([1e-1, 1e-2, 1e-3])
        errs = [np.linalg.norm(retract(ctx, X, Z, t) - (X + t * Z)) for t in ts]
        slope = np.polyfit(np.log(ts), np.log(errs), 1)[0]
        assert slope >= 1.9

    def test_overflowing_step_raises(self, rng):
        ctx, rng = make_context(10, 1e2, 7)
        X = ctx.random_point(3, rng)
        Z = 1e4 * ctx.random_tangent(X, rng)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(StepTooLargeError):
                retract(ctx, X, Z, 1e306, RetractionStrategy.LOW_RANK)
            with pytest.raises(StepTooLargeError):
                retract(ctx, X, Z, 1e306, RetractionStrategy.FULL)

    def test_feasibility_preserved_across_samples(self):
        worst = 0.0
        for seed in range(3):
            ctx, rng = make_context(40, 1e4, 100 + seed)
            for _ in range(20):
                X = ctx.random_point(4, rng)
                Z = ctx.random_tangent(X, rng)
                t = rng.uniform(0.0, 2.0)
                worst = max(worst, ctx.check_feasibility(retract(ctx, X, Z, t)))
        assert worst <= 1e-10


class TestTransportDiff:
    def test_zero_step_identity(self, rng):
        ctx, rng = make_context(12, 1e2, 8)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        Y = ctx.random_tangent(X, rng)
        assert np.array_equal(transport_diff(ctx, X, Z, 0.0, Y), Y)
        assert np.array_equal(transport_diff(ctx, X, Z, 0.0), Z)

    def test_hand_case(self):
        ctx, X, Z = _hand_case()
        out = transport_diff(ctx, X, Z, 2.0)
        assert np.allclose(out, [[-0.5], [0.0]], atol=1e-14)
        assert ctx.norm(out) <= ctx.norm(Z) + 1e-12  # non-expansive here

    def test_direction_formula_matches_dense(self):
        ctx, rng = make_context(60, 1e3, 9)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        W = skew_factors(ctx, X, Z).dense()
        for t in (0.3, 1.0, 2.0):
            A = np.eye(60) - (t / 2.0) * W @ ctx.M
            expected = np.linalg.solve(A, np.linalg.solve(A, Z))
            got = transport_diff(ctx, X, Z, t, strategy=RetractionStrategy.LOW_RANK)
            assert rel_err(got, expected) <= 1e-10

    def test_general_vector_paths_agree(self):
        ctx, rng = make_context(60, 1e3, 10)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        Y = ctx.random_tangent(X, rng)
        for t in (0.3, 1.2):
            full = transport_diff(ctx, X, Z, t, Y, RetractionStrategy.FULL)
            low = transport_diff(ctx, X, Z, t, Y, RetractionStrategy.LOW_RANK)
            assert rel_err(low, full) <= 1e-10

    def test_direction_case_norm_never_grows(self):
        worst = 0.0
        for seed in range(3):
            ctx, rng = make_context(30, 1e3, 200 + seed)
            for _ in range(20):
                X = ctx.random_point(4, rng)
                Z = ctx.random_tangent(X, rng)
                t = rng.uniform(0.0, 2.0)
                worst = max(worst, ctx.norm(transport_diff(ctx, X, Z, t)) / ctx.norm(Z))
        assert worst <= 1.0 + 1e-12

    def test_matches_retraction_derivative(self, rng):
        ctx, rng = make_context(30, 1e2, 11)
        X = ctx.random_point(4, rng)
        Z = ctx.random_tangent(X, rng)
        kernel = CayleyKernel(ctx, X, Z)
        h, t = 1e-5, 0.9
        fd = (kernel.retract(t + h) - kernel.retract(t - h)) / (2 * h)
        td = kernel.transport_diff(t)
        assert rel_err(fd, td) <= 1e-6

    def test_linearity(self, rng):
        ctx, rng = make_context(20, 1e2, 12)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        Y1 = ctx.random_tangent(X, rng)
        Y2 = ctx.random_tangent(X, rng)
        a, b = 1.7, -0.4
        t = 0.8
        lhs = transport_diff(ctx, X, Z, t, a * Y1 + b * Y2)
        rhs = a * transport_diff(ctx, X, Z, t, Y1) + b * transport_diff(ctx, X, Z, t, Y2)
        assert rel_err(lhs, rhs) <= 1e-11

    def test_output_tangent_at_retracted_point(self, rng):
        ctx, rng = make_context(25, 1e3, 13)
        X = ctx.random_point(4, rng)
        Z = ctx.random_tangent(X, rng)
        Y = ctx.random_tangent(X, rng)
        t = 1.1
        Xt = retract(ctx, X, Z, t)
        out = transport_diff(ctx, X, Z, t, Y)
        assert ctx.tangency_residual(Xt, out) <= 1e-10 * (1 + np.linalg.norm(out))


class TestTransportIso:
    def test_zero_step_identity(self, rng):
        ctx, rng = make_context(12, 1e2, 14)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        Y = ctx.random_tangent(X, rng)
        assert np.array_equal(transport_iso(ctx, X, Z, 0.0, Y), Y)

    def test_hand_case(self):
        ctx, X, Z = _hand_case()
        out = transport_iso(ctx, X, Z, 2.0)
        assert np.allclose(out, [[-1.0], [0.0]], atol=1e-14)
        assert ctx.norm(out) == pytest.approx(1.0, abs=1e-14)

    def test_isometry_on_arbitrary_tangents(self):
        worst = 0.0
        for seed in range(3):
            ctx, rng = make_context(60, 1e3, 300 + seed)
            X = ctx.random_point(3, rng)
            Z = ctx.random_tangent(X, rng)
            for _ in range(10):
                Y = 3.0 * ctx.random_tangent(X, rng)
                t = rng.uniform(0.0, 2.0)
                out = transport_iso(ctx, X, Z, t, Y)
                worst = max(worst, abs(ctx.norm(out) - ctx.norm(Y)))
        assert worst <= 1e-11

    def test_paths_agree(self):
        ctx, rng = make_context(60, 1e3, 15)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        Y = ctx.random_tangent(X, rng)
        for t in (0.4, 1.6):
            full = transport_iso(ctx, X, Z, t, Y, RetractionStrategy.FULL)
            low = transport_iso(ctx, X, Z, t, Y, RetractionStrategy.LOW_RANK)
            assert rel_err(low, full) <= 1e-10
            direction_full = transport_iso(ctx, X, Z, t, strategy=RetractionStrategy.FULL)
            direction_low = transport_iso(ctx, X, Z, t, strategy=RetractionStrategy.LOW_RANK)
            assert rel_err(direction_low, direction_full) <= 1e-10

    def test_linearity(self, rng):
        ctx, rng = make_context(20, 1e2, 16)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        Y1 = ctx.random_tangent(X, rng)
        Y2 = ctx.random_tangent(X, rng)
        a, b = -2.3, 0.9
        t = 1.4
        lhs = transport_iso(ctx, X, Z, t, a * Y1 + b * Y2)
        rhs = a * transport_iso(ctx, X, Z, t, Y1) + b * transport_iso(ctx, X, Z, t, Y2)
        assert rel_err(lhs, rhs) <= 1e-11

    def test_output_tangent_at_retracted_point(self, rng):
        ctx, rng = make_context(25, 1e3, 17)
        X = ctx.random_point(4, rng)
        Z = ctx.random_tangent(X, rng)
        Y = ctx.random_tangent(X, rng)
        t = 0.9
        Xt = retract(ctx, X, Z, t)
        out = transport_iso(ctx, X, Z, t, Y)
        assert ctx.tangency_residual(Xt, out) <= 1e-10 * (1 + np.linalg.norm(out))


class TestTransportRelation:
    def test_identity_links_the_transports(self):
        ctx, rng = make_context(50, 1e3, 18)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        W = skew_factors(ctx, X, Z).dense()
        WM2 = W @ ctx.M @ W @ ctx.M
        for t in (0.5, 1.0, 2.0):
            lhs = transport_iso(ctx, X, Z, t)
            rhs = (np.eye(50) - (t**2 / 4.0) * WM2) @ transport_diff(ctx, X, Z, t)
            assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


class TestAngleBound:
    def test_hand_case_is_tight(self):
        ctx, X, Z = _hand_case()
        cos_theta, lower = angle_bound(ctx, X, Z, 2.0)
        assert cos_theta == pytest.approx(1.0, abs=1e-12)
        assert lower == pytest.approx(1.0, abs=1e-12)

    def test_cosine_tends_to_one(self, rng):
        ctx, rng = make_context(20, 1e2, 19)
        X = ctx.random_point(3, rng)
        Z = ctx.random_tangent(X, rng)
        cos_theta, _ = angle_bound(ctx, X, Z, 1e-4)
        assert cos_theta >= 1.0 - 1e-6

    @pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
    def test_bound_holds_on_random_samples(self, t):
        ctx, rng = make_context(40, 1e3, 20)
        for _ in range(10):
            X = ctx.random_point(3, rng)
            Z = ctx.random_tangent(X, rng)
            cos_theta, lower = angle_bound(ctx, X, Z, t)
            assert 0.0 < cos_theta <= 1.0
            assert cos_theta >= lower - 1e-10

    def test_zero_direction_rejected(self, rng):
        ctx, rng = make_context(10, 1e2, 21)
        X = ctx.random_point(3, rng)
        with pytest.raises(DegeneracyError):
            angle_bound(ctx, X, np.zeros_like(X), 1.0)

    def test_gated_above_size_limit(self):
        ctx = MetricContext(np.eye(501))
        X = np.zeros((501, 2))
        with pytest.raises(DimensionError):
            angle_bound(ctx, X, X, 1.0)
