"""Reverse-mode gradients checked against the finite-difference oracle."""

import numpy as np
import pytest

from pilectl import autodiff as ad
from pilectl.autodiff import ParamSet, Tensor
from pilectl.optim import finite_diff_grad, max_relative_grad_error


def check_op(build_loss, params, tol=1e-5):
    """Compare analytic gradients of a scalar loss to central differences."""
    params.zero_grad()
    build_loss().backward()
    analytic = {name: t.grad.copy() for name, t in params.items()}
    numeric = finite_diff_grad(lambda: float(build_loss().value), params)
    assert max_relative_grad_error(analytic, numeric) < tol


def scalar_sum(t: Tensor) -> Tensor:
    """Reduce any tensor to a scalar via mse against zero (sum of squares / n)."""
    return ad.mse(t, np.zeros(t.shape))


class TestAffine:
    def test_forward(self):
        rng = np.random.default_rng(0)
        x = Tensor(rng.normal(size=(3, 4)))
        w = Tensor(rng.normal(size=(2, 4)))
        b = Tensor(rng.normal(size=2))
        assert np.allclose(ad.affine(x, w, b).value,
                           x.value @ w.value.T + b.value)

    def test_backward(self):
        rng = np.random.default_rng(1)
        ps = ParamSet()
        x = ps.add("x", rng.normal(size=(3, 4)))
        w = ps.add("w", rng.normal(size=(2, 4)))
        b = ps.add("b", rng.normal(size=2))
        check_op(lambda: scalar_sum(ad.affine(x, w, b)), ps)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            ad.affine(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4))),
                      Tensor(np.zeros(2)))


@pytest.mark.parametrize("op", [ad.relu, ad.tanh, ad.softmax])
def test_unary_backward(op):
    rng = np.random.default_rng(2)
    ps = ParamSet()
    x = ps.add("x", rng.normal(size=(4, 5)))
    check_op(lambda: scalar_sum(op(x)), ps)


def test_mul_backward():
    rng = np.random.default_rng(3)
    ps = ParamSet()
    a = ps.add("a", rng.normal(size=(3, 4)))
    b = ps.add("b", rng.normal(size=(3, 4)))
    check_op(lambda: scalar_sum(ad.mul(a, b)), ps)


def test_mul_shape_mismatch_rejected():
    with pytest.raises(ValueError, match="shape"):
        ad.mul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((3, 2))))


def test_slice_cols_backward():
    rng = np.random.default_rng(4)
    ps = ParamSet()
    x = ps.add("x", rng.normal(size=(3, 6)))
    check_op(lambda: scalar_sum(ad.slice_cols(x, 1, 4)), ps)


def test_mse_backward():
    rng = np.random.default_rng(5)
    target = rng.normal(size=(4, 3))
    ps = ParamSet()
    x = ps.add("x", rng.normal(size=(4, 3)))
    check_op(lambda: ad.mse(x, target), ps)


class TestDropoutTensor:
    def test_eval_is_identity_object(self):
        x = Tensor(np.ones((2, 3)))
        assert ad.dropout(x, 0.35, None, train=False) is x
        assert ad.dropout(x, 0.0, None, train=True) is x

    def test_invalid_p_rejected(self):
        with pytest.raises(ValueError):
            ad.dropout(Tensor(np.ones(3)), 1.5, np.random.default_rng(0), True)

    def test_train_backward_matches_mask(self):
        rng = np.random.default_rng(6)
        x = Tensor(np.ones((4, 8)))
        y = ad.dropout(x, 0.5, rng, train=True)
        scalar_sum(y).backward()
        # gradient is nonzero exactly where the value survived
        assert np.array_equal(x.grad != 0, y.value != 0)


class TestBackward:
    def test_requires_scalar(self):
        with pytest.raises(ValueError, match="scalar"):
            Tensor(np.zeros((2, 2))).backward()

    def test_zero_gradient_at_global_minimum(self):
        rng = np.random.default_rng(7)
        ps = ParamSet()
        w = ps.add("w", np.zeros((3, 4)))
        b = ps.add("b", np.zeros(3))
        x = Tensor(rng.normal(size=(5, 4)))
        loss = ad.mse(ad.tanh(ad.affine(x, w, b)), np.zeros((5, 3)))
        loss.backward()
        assert np.array_equal(w.grad, np.zeros((3, 4)))
        assert np.array_equal(b.grad, np.zeros(3))

    def test_duplicate_batch_same_gradient(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(1, 4))
        target = rng.normal(size=(1, 3))

        def grads(batch_x, batch_t):
            ps = ParamSet()
            w = ps.add("w", rng_w.copy())
            b = ps.add("b", np.zeros(3))
            ad.mse(ad.tanh(ad.affine(Tensor(batch_x), w, b)), batch_t).backward()
            return w.grad.copy()

        rng_w = rng.normal(size=(3, 4))
        g1 = grads(x, target)
        g2 = grads(np.vstack([x, x]), np.vstack([target, target]))
        assert np.allclose(g1, g2, atol=1e-15)

    def test_shared_node_accumulates(self):
        # y = x*x has gradient 2x through the two parent links
        ps = ParamSet()
        x = ps.add("x", np.full((1, 3), 2.0))
        check_op(lambda: scalar_sum(ad.mul(x, x)), ps)


def test_mse_batch_permutation_invariant():
    rng = np.random.default_rng(9)
    pred = rng.normal(size=(10, 3))
    target = rng.normal(size=(10, 3))
    perm = rng.permutation(10)
    a = ad.mse(Tensor(pred), target).value
    b = ad.mse(Tensor(pred[perm]), target[perm]).value
    assert a == pytest.approx(b, rel=1e-15)


class TestParamSet:
    def test_duplicate_name_rejected(self):
        ps = ParamSet()
        ps.add("w", np.zeros(2))
        with pytest.raises(ValueError, match="duplicate"):
            ps.add("w", np.zeros(2))

    def test_count_and_order(self):
        ps = ParamSet()
        ps.add("w", np.zeros((2, 3)))
        ps.add("b", np.zeros(2))
        assert ps.n_params == 8
        assert ps.names() == ["w", "b"]
