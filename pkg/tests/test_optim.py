"""Kaiming initialization, RAdam and the finite-difference oracle."""

import numpy as np
import pytest

from pilectl.autodiff import ParamSet
from pilectl.optim import (RAdam, finite_diff_grad, kaiming_init,
                           max_relative_grad_error)


class TestKaimingInit:
    def test_target_std_closed_form(self):
        assert np.sqrt(2.0 / 4) == pytest.approx(0.70711, abs=1e-5)

    def test_empirical_std(self):
        w = kaiming_init(157, 64, np.random.default_rng(0))
        target = np.sqrt(2.0 / 64)
        assert abs(w.std() / target - 1.0) < 0.05
        assert abs(w.mean()) < 0.01

    def test_deterministic(self):
        a = kaiming_init(10, 8, np.random.default_rng(42))
        b = kaiming_init(10, 8, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_invalid_shape_rejected(self):
        with pytest.raises(ValueError):
            kaiming_init(0, 4, np.random.default_rng(0))


def scalar_params(value: float) -> ParamSet:
    ps = ParamSet()
    ps.add("theta", np.array([value]))
    return ps


class TestRAdam:
    def test_zero_gradient_no_change(self):
        ps = scalar_params(1.0)
        opt = RAdam(ps, lr=0.001)
        for _ in range(10):
            ps.zero_grad()
            opt.step()
        assert ps["theta"].value[0] == 1.0

    def test_first_step_unrectified_branch(self):
        # rho_1 = rho_inf - 2*b2/(1-b2) = 1 <= 4, so the update is the plain
        # bias-corrected momentum step: theta' = 1 - lr * g = 0.999
        ps = scalar_params(1.0)
        opt = RAdam(ps, lr=0.001)
        ps["theta"].grad[...] = 1.0
        opt.step()
        assert ps["theta"].value[0] == pytest.approx(0.999, abs=1e-15)

    def test_quadratic_convergence(self):
        ps = scalar_params(1.0)
        opt = RAdam(ps, lr=0.001)
        for _ in range(5000):
            ps["theta"].grad[...] = 2.0 * ps["theta"].value
            opt.step()
        assert abs(ps["theta"].value[0]) < 1e-2

    def test_rectification_kicks_in(self):
        opt = RAdam(scalar_params(0.0))
        rho_inf = opt.rho_inf
        assert rho_inf == pytest.approx(2.0 / (1.0 - 0.999) - 1.0)

        def rho(t):
            return rho_inf - 2.0 * t * 0.999**t / (1.0 - 0.999**t)

        assert rho(1) <= 4.0
        assert rho(5) > 4.0

    def test_empty_params_rejected(self):
        with pytest.raises(ValueError):
            RAdam(ParamSet())

    def test_negative_lr_rejected(self):
        with pytest.raises(ValueError):
            RAdam(scalar_params(0.0), lr=-0.1)

    def test_zero_lr_is_noop(self):
        ps = scalar_params(3.0)
        opt = RAdam(ps, lr=0.0)
        ps["theta"].grad[...] = 5.0
        opt.step()
        assert ps["theta"].value[0] == 3.0

    def test_bit_identical_runs(self):
        def run():
            rng = np.random.default_rng(7)
            ps = ParamSet()
            w = ps.add("w", kaiming_init(4, 3, rng))
            x = rng.normal(size=(8, 3))
            opt = RAdam(ps, lr=0.01)
            for _ in range(20):
                ps.zero_grad()
                w.grad[...] = (x.T @ (x @ w.value.T)).T / len(x)
                opt.step()
            return w.value.copy()

        assert np.array_equal(run(), run())


class TestFiniteDiff:
    def test_quadratic(self):
        ps = scalar_params(3.0)
        g = finite_diff_grad(lambda: float(ps["theta"].value[0] ** 2), ps)
        assert g["theta"][0] == pytest.approx(6.0, abs=1e-6)

    def test_constant(self):
        ps = scalar_params(3.0)
        g = finite_diff_grad(lambda: 1.5, ps)
        assert np.array_equal(g["theta"], np.zeros(1))

    def test_tanh_at_zero(self):
        ps = scalar_params(0.0)
        g = finite_diff_grad(lambda: float(np.tanh(ps["theta"].value[0])), ps)
        assert g["theta"][0] == pytest.approx(1.0, abs=1e-9)

    def test_restores_parameters(self):
        ps = scalar_params(2.5)
        finite_diff_grad(lambda: float(ps["theta"].value[0] ** 3), ps)
        assert ps["theta"].value[0] == 2.5

    def test_invalid_h_rejected(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda: 0.0, scalar_params(0.0), h=0.0)


def test_max_relative_grad_error():
    a = {"w": np.array([1.0, 2.0])}
    n = {"w": np.array([1.0, 2.2])}
    assert max_relative_grad_error(a, n) == pytest.approx(0.2 / 2.2)
    assert max_relative_grad_error(a, {"w": np.array([1.0, 2.0])}) == 0.0
