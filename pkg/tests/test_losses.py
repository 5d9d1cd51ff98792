import math

import numpy as np
import pytest

from pbn.exceptions import InvalidParameterError
from pbn.losses import logistic_loss, logistic_loss_grad, zero_one_loss


class TestLogisticLoss:
    def test_known_values(self):
        assert logistic_loss(0.0) == pytest.approx(math.log(2), abs=1e-15)
        assert logistic_loss(50.0) == pytest.approx(1.9287498479639178e-22, rel=1e-12)
        assert logistic_loss(-1000.0) == pytest.approx(1000.0)

    def test_returns_float_for_scalar(self):
        assert isinstance(logistic_loss(1.0), float)
        assert logistic_loss(np.zeros(3)).shape == (3,)

    @pytest.mark.parametrize("z", [-3.0, 0.5, 10.0])
    def test_reflection_identity(self, z):
        assert logistic_loss(-z) - logistic_loss(z) == pytest.approx(z, abs=1e-12)

    def test_positive_and_decreasing(self):
        z = np.linspace(-30, 30, 601)
        values = logistic_loss(z)
        assert np.all(values > 0)
        assert np.all(np.diff(values) < 0)

    def test_convex(self):
        rng = np.random.default_rng(0)
        z1, z2 = rng.uniform(-20, 20, (2, 1000))
        lam = rng.uniform(0, 1, 1000)
        lhs = logistic_loss(lam * z1 + (1 - lam) * z2)
        rhs = lam * logistic_loss(z1) + (1 - lam) * logistic_loss(z2)
        assert np.all(lhs <= rhs + 1e-12)

    @pytest.mark.parametrize("z", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, z):
        with pytest.raises(InvalidParameterError):
            logistic_loss(z)


class TestLogisticLossGrad:
    def test_known_values(self):
        assert logistic_loss_grad(0.0) == pytest.approx(-0.5)
        assert -1e-20 < logistic_loss_grad(50.0) < 0
        assert logistic_loss_grad(-50.0) == pytest.approx(-1.0)

    def test_matches_finite_difference(self):
        h = 1e-6
        for z in (-4.0, -0.3, 1.0, 6.0):
            fd = (logistic_loss(z + h) - logistic_loss(z - h)) / (2 * h)
            assert logistic_loss_grad(z) == pytest.approx(fd, abs=1e-8)


class TestZeroOneLoss:
    @pytest.mark.parametrize("z, expected", [(3.0, 0.0), (-0.1, 1.0), (0.0, 0.5)])
    def test_values(self, z, expected):
        assert zero_one_loss(z) == expected

    def test_symmetric(self):
        z = np.array([-2.0, -1e-9, 0.0, 1e-9, 4.0])
        np.testing.assert_array_equal(zero_one_loss(z) + zero_one_loss(-z), np.ones_like(z))
