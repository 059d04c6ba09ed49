import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aspline.basis import build_design, make_knots
from aspline.penalty import (
    DiffSpec,
    diff,
    penalty_matrix,
    update_weights,
    weighted_scores,
)


def dense_diff_matrix(p, order):
    return np.diff(np.eye(p), n=order, axis=0)


class TestDiffSpec:
    def test_stencil_signed_binomials(self):
        npt.assert_array_equal(DiffSpec(1, 5).stencil, [-1.0, 1.0])
        npt.assert_array_equal(DiffSpec(4, 10).stencil, [1.0, -4.0, 6.0, -4.0, 1.0])

    @pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
    def test_stencil_sums_to_zero(self, order):
        assert DiffSpec(order, order + 3).stencil.sum() == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            DiffSpec(0, 5)
        with pytest.raises(ValueError):
            DiffSpec(5, 5)


class TestDiff:
    def test_first_difference_of_ramp(self):
        npt.assert_array_equal(diff(np.array([1.0, 2.0, 3.0, 4.0]), 1), [1.0, 1.0, 1.0])

    def test_second_difference_of_linear_ramp_vanishes(self):
        npt.assert_array_equal(diff(np.array([1.0, 2.0, 3.0, 4.0]), 2), [0.0, 0.0])

    def test_matches_dense_difference_matrix(self, rng):
        a = rng.standard_normal(12)
        for order in (1, 2, 3, 4):
            npt.assert_allclose(diff(a, order), dense_diff_matrix(12, order) @ a, atol=1e-12)

    def test_order_bounds(self):
        with pytest.raises(ValueError):
            diff(np.ones(3), 3)
        with pytest.raises(ValueError):
            diff(np.ones(3), 0)

    @pytest.mark.parametrize("q", [0, 1, 2, 3])
    def test_polynomial_spline_coefficients_have_zero_high_difference(self, q, rng):
        # Coefficients of an exact degree-q polynomial follow the polynomial
        # at the Greville points. Those are equally spaced away from the
        # clamped boundary, so the order q+1 differences vanish there; the
        # first and last q-1 differences touch boundary-repeated knots and
        # need not vanish for q >= 2.
        k = 8
        kv = make_knots(0.0, 1.0, k, q)
        x = np.linspace(0.0, 1.0, 150)
        y = np.polynomial.polynomial.polyval(x, rng.uniform(-1.0, 1.0, q + 1))
        coef, *_ = np.linalg.lstsq(build_design(kv, x).to_dense(), y, rcond=None)
        d = diff(coef, q + 1)
        lo, hi = max(q - 1, 0), k - max(q, 1) + 1
        assert np.max(np.abs(d[lo:hi])) <= 1e-8
        if q <= 1:
            assert np.max(np.abs(d)) <= 1e-8


class TestPenaltyMatrix:
    def test_first_order_unit_weights_tridiagonal(self):
        spec = DiffSpec(1, 6)
        pen = penalty_matrix(spec, np.ones(5)).to_dense()
        npt.assert_array_equal(np.diag(pen), [1.0, 2.0, 2.0, 2.0, 2.0, 1.0])
        npt.assert_array_equal(np.diag(pen, -1), -1.0)
        npt.assert_array_equal(pen, pen.T)

    def test_vanishing_weights_give_vanishing_matrix(self):
        spec = DiffSpec(2, 7)
        pen = penalty_matrix(spec, np.full(5, 1e-14)).to_dense()
        assert np.max(np.abs(pen)) <= 1e-12

    def test_matches_dense_construction(self, rng):
        spec = DiffSpec(4, 20)
        w = rng.uniform(0.1, 5.0, 16)
        d = dense_diff_matrix(20, 4)
        npt.assert_allclose(
            penalty_matrix(spec, w).to_dense(), d.T @ (w[:, None] * d), atol=1e-12
        )

    def test_rejects_bad_weights(self):
        spec = DiffSpec(2, 6)
        with pytest.raises(ValueError, match="positive"):
            penalty_matrix(spec, np.array([1.0, 0.0, 1.0, 1.0]))
        with pytest.raises(ValueError, match="length"):
            penalty_matrix(spec, np.ones(3))

    @settings(deadline=None, max_examples=40)
    @given(
        order=st.integers(1, 4),
        extra=st.integers(1, 10),
        seed=st.integers(0, 2**31 - 1),
    )
    def test_quadratic_form_identity(self, order, extra, seed):
        gen = np.random.default_rng(seed)
        p = order + extra
        spec = DiffSpec(order, p)
        w = gen.uniform(0.05, 20.0, spec.n_diffs)
        a = gen.standard_normal(p)
        quad = a @ penalty_matrix(spec, w).to_dense() @ a
        direct = np.sum(w * diff(a, order) ** 2)
        assert abs(quad - direct) <= 1e-10 * max(1.0, abs(direct))

    @pytest.mark.parametrize("q", [0, 1])
    def test_polynomial_null_space(self, q, rng):
        # Exact null space holds for q <= 1, where the Greville points are
        # equally spaced all the way to the clamped boundary.
        kv = make_knots(0.0, 1.0, 8, q)
        x = np.linspace(0.0, 1.0, 150)
        y = np.polynomial.polynomial.polyval(x, rng.uniform(-1.0, 1.0, q + 1))
        coef, *_ = np.linalg.lstsq(build_design(kv, x).to_dense(), y, rcond=None)
        spec = DiffSpec(q + 1, kv.dim)
        pen = penalty_matrix(spec, np.ones(spec.n_diffs))
        assert coef @ pen.to_dense() @ coef <= 1e-12

    @pytest.mark.parametrize("q", [0, 1, 2, 3])
    def test_constant_null_space_any_degree(self, q):
        # Constant vectors have vanishing differences of every order.
        kv = make_knots(0.0, 1.0, 8, q)
        spec = DiffSpec(q + 1, kv.dim)
        pen = penalty_matrix(spec, np.ones(spec.n_diffs))
        coef = np.full(kv.dim, 2.7)
        assert coef @ pen.to_dense() @ coef <= 1e-12


class TestWeights:
    def test_zero_difference_hits_epsilon_ceiling(self):
        spec = DiffSpec(2, 6)
        w = update_weights(np.ones(6), spec, epsilon=1e-5)
        npt.assert_allclose(w, 1e10, rtol=1e-12)

    def test_unit_difference_weight_near_one(self):
        spec = DiffSpec(1, 3)
        w = update_weights(np.array([0.0, 1.0, 3.0]), spec, epsilon=1e-5)
        npt.assert_allclose(w[0], 1.0, rtol=2e-10)

    def test_recomputed_score_identity(self, rng):
        spec = DiffSpec(3, 12)
        a = rng.standard_normal(12)
        w = update_weights(a, spec)
        s = w * diff(a, 3) ** 2
        assert np.all((s >= 0.0) & (s < 1.0))
        npt.assert_allclose(s, weighted_scores(a, spec), rtol=1e-12)

    @settings(deadline=None, max_examples=50)
    @given(seed=st.integers(0, 2**31 - 1), scale=st.floats(1e-8, 1e6))
    def test_scores_bounded(self, seed, scale):
        # Mathematically in [0, 1); in double precision the bound saturates
        # to 1.0 once a squared difference exceeds epsilon^2 / ulp.
        gen = np.random.default_rng(seed)
        spec = DiffSpec(2, 9)
        a = scale * gen.standard_normal(9)
        s = weighted_scores(a, spec)
        assert np.all((s >= 0.0) & (s <= 1.0))
        small = np.abs(diff(a, 2)) < 100.0
        assert np.all(s[small] < 1.0)

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ValueError):
            update_weights(np.ones(5), DiffSpec(1, 5), epsilon=0.0)
