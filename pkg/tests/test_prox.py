import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from kmprox.prox import (
    LowerBoundSet,
    ScaledL1Spec,
    prox_conjugate_indicator,
    prox_indicator_lb,
    prox_partial_l1,
    soft_threshold,
    spectral_norm,
)

finite_floats = st.floats(
    allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6
)


class TestSoftThreshold:
    def test_above_threshold(self):
        assert soft_threshold(2.0, 0.5) == 1.5

    def test_below_threshold_clips_to_zero(self):
        assert soft_threshold(-0.3, 0.5) == 0.0

    @given(finite_floats)
    def test_zero_threshold_is_identity(self, x):
        assert soft_threshold(x, 0.0) == x

    def test_negative_side(self):
        assert soft_threshold(-2.0, 0.5) == -1.5

    def test_at_kink_returns_zero(self):
        assert soft_threshold(0.5, 0.5) == 0.0
        assert soft_threshold(0.0, 0.5) == 0.0

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -0.1)

    @given(finite_floats, finite_floats, st.floats(min_value=0, max_value=1e6))
    def test_one_lipschitz(self, a, b, lam):
        assert abs(soft_threshold(a, lam) - soft_threshold(b, lam)) <= abs(a - b) * (
            1 + 1e-15
        ) + 1e-15

    def test_vectorized(self):
        out = soft_threshold(np.array([2.0, -0.3, 0.0]), 0.5)
        np.testing.assert_array_equal(out, [1.5, 0.0, 0.0])


class TestProxPartialL1:
    def test_leading_components_shrunk_tail_copied(self):
        out = prox_partial_l1(
            np.array([2.0, -0.3, 5.0]), ScaledL1Spec(weight=0.5, active_len=2)
        )
        np.testing.assert_array_equal(out, [1.5, 0.0, 5.0])

    def test_zero_weight_is_identity(self):
        v = np.array([1.0, -2.0, 3.0])
        out = prox_partial_l1(v, ScaledL1Spec(weight=0.0, active_len=3))
        np.testing.assert_array_equal(out, v)

    def test_full_shrinkage(self):
        out = prox_partial_l1(np.array([-1.0, 1.0]), ScaledL1Spec(weight=1.0, active_len=2))
        np.testing.assert_array_equal(out, [0.0, 0.0])

    def test_active_len_zero_is_identity(self):
        v = np.array([4.0, -4.0])
        out = prox_partial_l1(v, ScaledL1Spec(weight=10.0, active_len=0))
        np.testing.assert_array_equal(out, v)

    def test_active_len_too_long_rejected(self):
        with pytest.raises(ValueError):
            prox_partial_l1(np.zeros(2), ScaledL1Spec(weight=1.0, active_len=3))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ScaledL1Spec(weight=-1.0, active_len=1)
        with pytest.raises(ValueError):
            ScaledL1Spec(weight=1.0, active_len=-1)

    def test_input_not_mutated(self):
        v = np.array([2.0, 2.0])
        prox_partial_l1(v, ScaledL1Spec(weight=1.0, active_len=2))
        np.testing.assert_array_equal(v, [2.0, 2.0])


class TestProxIndicatorLb:
    def test_componentwise_max(self):
        out = prox_indicator_lb(np.array([0.5, 2.0]), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(out, [1.0, 2.0])

    def test_feasible_point_unchanged(self):
        y = np.array([3.0, 4.0])
        out = prox_indicator_lb(y, np.array([1.0, 1.0]))
        np.testing.assert_array_equal(out, y)

    def test_scalar_bound(self):
        np.testing.assert_array_equal(
            prox_indicator_lb(np.array([-3.0]), np.array([0.0])), [0.0]
        )

    def test_accepts_lower_bound_set(self):
        out = prox_indicator_lb(np.array([-1.0, 5.0]), LowerBoundSet(np.array([0.0, 0.0])))
        np.testing.assert_array_equal(out, [0.0, 5.0])

    def test_lower_bound_set_validation(self):
        with pytest.raises(ValueError):
            LowerBoundSet(np.array([np.inf]))
        with pytest.raises(ValueError):
            LowerBoundSet(np.zeros((2, 2)))

    @given(
        st.lists(finite_floats, min_size=1, max_size=6),
        st.lists(finite_floats, min_size=1, max_size=6),
    )
    def test_idempotent_and_feasible(self, y, d):
        n = min(len(y), len(d))
        y = np.array(y[:n])
        d = np.array(d[:n])
        once = prox_indicator_lb(y, d)
        assert np.all(once >= d)
        np.testing.assert_array_equal(prox_indicator_lb(once, d), once)


class TestProxConjugateIndicator:
    def test_nonnegative_bound(self):
        out = prox_conjugate_indicator(np.array([-1.0, 2.0]), np.array([0.0, 0.0]), 1.0)
        np.testing.assert_array_equal(out, [-1.0, 0.0])

    def test_scaled_formula(self):
        out = prox_conjugate_indicator(np.array([4.0]), np.array([1.0]), 2.0)
        np.testing.assert_array_equal(out, [0.0])

    def test_nonpositive_eta_rejected(self):
        with pytest.raises(ValueError):
            prox_conjugate_indicator(np.array([1.0]), np.array([0.0]), 0.0)
        with pytest.raises(ValueError):
            prox_conjugate_indicator(np.array([1.0]), np.array([0.0]), -1.0)

    @given(
        st.lists(finite_floats, min_size=1, max_size=6),
        st.lists(finite_floats, min_size=1, max_size=6),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_moreau_identity(self, y, d, eta):
        n = min(len(y), len(d))
        y = np.array(y[:n])
        d = np.array(d[:n])
        scaled = eta * prox_indicator_lb(y / eta, d)
        recomposed = scaled + prox_conjugate_indicator(y, d, eta)
        # Ulps measured at the scale of the larger addend: recombining
        # addends of magnitude far above |y| cannot land closer than the
        # rounding grid at that larger magnitude.
        ulp = 4 * np.spacing(np.maximum(np.abs(y), np.abs(scaled)))
        assert np.all(np.abs(recomposed - y) <= ulp)

    def test_output_nonpositive_when_bound_zero(self):
        rng = np.random.default_rng(5)
        y = rng.normal(size=20)
        out = prox_conjugate_indicator(y, np.zeros(20), 0.7)
        assert np.all(out <= 1e-15)


class TestFirmNonexpansiveness:
    """||P(x) - P(y)||^2 <= <P(x) - P(y), x - y> for both prox operators."""

    def _check(self, apply, rng, dim=8, pairs=200):
        for _ in range(pairs):
            x = rng.normal(scale=3.0, size=dim)
            y = rng.normal(scale=3.0, size=dim)
            px, py = apply(x), apply(y)
            lhs = float((px - py) @ (px - py))
            rhs = float((px - py) @ (x - y))
            assert lhs <= rhs + 1e-12

    def test_partial_l1(self):
        rng = np.random.default_rng(0)
        spec = ScaledL1Spec(weight=0.8, active_len=5)
        self._check(lambda v: prox_partial_l1(v, spec), rng)

    def test_indicator_lb(self):
        rng = np.random.default_rng(1)
        d = rng.normal(size=8)
        self._check(lambda v: prox_indicator_lb(v, d), rng)


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-10)

    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, abs=1e-9)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((3, 2))) == 0.0

    def test_matches_svd_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            m = rng.normal(size=(5, 4))
            got = spectral_norm(m)
            want = oracles.svd_spectral_norm(m)
            assert got == pytest.approx(want, rel=1e-8)

    def test_rank_one(self):
        u = np.array([3.0, 4.0])
        m = np.outer(u, u)  # eigenvalue 25
        assert spectral_norm(m) == pytest.approx(25.0, rel=1e-10)

    def test_start_vector_in_null_space_falls_back(self):
        # The all-ones start is annihilated by this matrix; the canonical
        # basis fallback must still find the norm.
        m = np.array([[1.0, -1.0]])
        assert spectral_norm(m) == pytest.approx(np.sqrt(2.0), rel=1e-9)

    def test_lower_bound_property(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(6, 4))
        norm = spectral_norm(m)
        for _ in range(25):
            v = rng.normal(size=4)
            assert norm >= np.linalg.norm(m @ v) / np.linalg.norm(v) - 1e-9

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        m = rng.normal(size=(7, 3))
        assert spectral_norm(m) == spectral_norm(m.copy())

    def test_wide_and_tall_agree(self):
        rng = np.random.default_rng(12)
        m = rng.normal(size=(3, 9))
        assert spectral_norm(m) == pytest.approx(oracles.svd_spectral_norm(m), rel=1e-8)
        assert spectral_norm(m.T) == pytest.approx(spectral_norm(m), rel=1e-8)
