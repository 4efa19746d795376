import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from barrierfree.errors import DomainError
from barrierfree.kernels import (
    LossParams,
    cross_entropy,
    cross_entropy_grad,
    finite_diff_gradient,
    focal_loss,
    focal_loss_grad,
    quality_focal_loss,
    quality_focal_loss_grad,
)
from barrierfree.kernels.gradcheck import central_difference

unit = st.floats(0.0, 1.0)
interior = st.floats(0.05, 0.95)


class TestCrossEntropy:
    def test_certain(self):
        assert cross_entropy(1.0, 1) == 0.0
        assert cross_entropy(0.0, 0) == 0.0

    def test_half(self):
        assert cross_entropy(0.5, 1) == pytest.approx(0.6931471805599453, abs=1e-15)

    def test_clamped(self):
        assert cross_entropy(0.0, 1) == pytest.approx(-math.log(1e-12))

    @pytest.mark.parametrize("p", [-0.1, 1.1, float("nan")])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            cross_entropy(p, 1)

    def test_label_domain(self):
        with pytest.raises(DomainError):
            cross_entropy(0.5, 0.5)


class TestFocal:
    @pytest.mark.parametrize("y", [0, 1])
    def test_reduces_to_ce(self, y):
        p = np.linspace(0.01, 0.99, 99)
        params = LossParams(alpha=1.0 if y else 0.0, gamma=0.0)
        assert np.array_equal(focal_loss(p, y, params), cross_entropy(p, y))

    def test_certain(self):
        assert focal_loss(1.0, 1) == 0.0

    def test_scalar_value(self):
        # 0.25 * 0.1**2 * -ln(0.9)
        expected = 0.25 * 0.01 * 0.10536051565782628
        assert focal_loss(0.9, 1, LossParams(alpha=0.25, gamma=2.0)) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(2.634e-4, rel=1e-3)

    def test_params_validated(self):
        with pytest.raises(DomainError):
            LossParams(alpha=1.5)
        with pytest.raises(DomainError):
            LossParams(gamma=-1.0)
        with pytest.raises(DomainError):
            LossParams(epsilon=1e-3)


class TestQualityFocal:
    @given(unit, st.floats(1e-3, 4.0))
    def test_zero_at_target(self, s, beta):
        assert quality_focal_loss(s, s, beta) == 0.0

    def test_beta_zero_is_cross_entropy(self):
        s = np.linspace(0.01, 0.99, 99)
        expected = 0.3 * cross_entropy(s, 1) + 0.7 * cross_entropy(s, 0)
        np.testing.assert_allclose(quality_focal_loss(s, 0.3, 0.0), expected, rtol=1e-14)
        assert quality_focal_loss(0.3, 0.3, 0.0) > 0

    def test_scalar_value(self):
        # |0.7-0.5|^2 * -ln(0.5)
        assert quality_focal_loss(0.5, 0.7, 2.0) == pytest.approx(0.04 * 0.6931471805599453, rel=1e-13)

    @given(unit, st.floats(0.0, 4.0))
    def test_binary_label_reduction(self, s, beta):
        assert quality_focal_loss(s, 1.0, beta) == pytest.approx(
            focal_loss(s, 1, LossParams(alpha=1.0, gamma=beta)), abs=1e-12)
        assert quality_focal_loss(s, 0.0, beta) == pytest.approx(
            focal_loss(s, 0, LossParams(alpha=0.0, gamma=beta)), abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            quality_focal_loss(0.5, 1.2)
        with pytest.raises(DomainError):
            quality_focal_loss(-0.01, 0.5)


@given(unit, st.integers(0, 1), unit, st.floats(0, 5), st.floats(0, 5))
def test_losses_nonnegative(p, y, soft, gamma, beta):
    assert cross_entropy(p, y) >= 0
    assert focal_loss(p, y, LossParams(alpha=0.25, gamma=gamma)) >= 0
    assert quality_focal_loss(p, soft, beta) >= 0


class TestGradients:
    def test_qfl_hand_derivative(self):
        # d/ds of -(s-y)^2 [y ln s + (1-y) ln(1-s)] at y=0.7, s=0.5:
        # -(2(s-y) ln 0.5 + (s-y)^2 (y/s - (1-y)/(1-s))) = -(0.4 ln 2 + 0.032)
        hand = -(0.4 * math.log(2.0) + 0.04 * 0.8)
        assert quality_focal_loss_grad(0.5, 0.7, 2.0) == pytest.approx(hand, rel=1e-14)
        fd = finite_diff_gradient(lambda s: quality_focal_loss(float(s), 0.7, 2.0), 0.5)
        assert float(fd) == pytest.approx(hand, rel=1e-4)

    @given(interior, st.integers(0, 1), st.floats(0, 1), st.floats(0, 4))
    def test_fl_grad(self, p, y, alpha, gamma):
        params = LossParams(alpha=alpha, gamma=gamma)
        a = focal_loss_grad(p, y, params)
        f = central_difference(lambda q: focal_loss(q, y, params), p)
        assert a == pytest.approx(f, rel=1e-4, abs=1e-9)

    @given(interior, st.integers(0, 1))
    def test_ce_grad(self, p, y):
        f = central_difference(lambda q: cross_entropy(q, y), p)
        assert cross_entropy_grad(p, y) == pytest.approx(f, rel=1e-4)

    @given(interior, unit, st.floats(0, 4))
    def test_qfl_grad(self, s, y, beta):
        if abs(s - y) < 1e-3:
            return  # kink of |y - s|^beta
        a = quality_focal_loss_grad(s, y, beta)
        f = central_difference(lambda q: quality_focal_loss(q, y, beta), s)
        assert a == pytest.approx(f, rel=1e-4, abs=1e-9)


class TestFiniteDiff:
    def test_quadratic(self):
        g = finite_diff_gradient(lambda t: float(np.sum(t ** 2)), np.array([1.0, 2.0]))
        np.testing.assert_allclose(g, [2.0, 4.0], atol=1e-6)

    def test_constant(self):
        g = finite_diff_gradient(lambda t: 3.0, np.ones((2, 3, 4)))
        assert g.shape == (2, 3, 4) and np.all(g == 0)

    def test_tensor_shaped(self, rng):
        x = rng.normal(size=(2, 2, 2))
        g = finite_diff_gradient(lambda t: float(np.sum(np.sin(t))), x)
        np.testing.assert_allclose(g, np.cos(x), atol=1e-8)

    def test_does_not_mutate_input(self):
        x = np.array([1.0, 2.0])
        finite_diff_gradient(lambda t: float(t.sum()), x)
        assert x.tolist() == [1.0, 2.0]

    def test_step_positive(self):
        with pytest.raises(ValueError):
            finite_diff_gradient(lambda t: 0.0, np.zeros(1), step=0)
