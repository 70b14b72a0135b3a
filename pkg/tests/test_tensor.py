"""Unit tests for the tensor primitives and the autograd tape."""

import numpy as np
import pytest

from monarch_surrogate import tensor as T
from monarch_surrogate.errors import (
    ConfigurationError,
    ContractError,
    DimensionError,
    NumericError,
)
from monarch_surrogate.gradcheck import max_rel_error
from monarch_surrogate.tensor import Tensor, tape_scope


def _grad_matches(build_loss, params, tol=1e-6):
    assert max_rel_error(build_loss, params) < tol


def test_add_sub_mul_forward_and_grad():
    rng = np.random.default_rng(0)
    a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    b = Tensor(rng.standard_normal((3, 4)), requires_grad=True)

    def loss():
        return T.sum_all(T.elementwise_mul(T.add(a, b), T.sub(a, b)))

    assert np.allclose(loss().data, (a.data**2 - b.data**2).sum())
    _grad_matches(loss, [a, b])


def test_shape_mismatch_raises():
    a = Tensor(np.zeros((2, 3)))
    b = Tensor(np.zeros((3, 2)))
    with pytest.raises(DimensionError):
        T.add(a, b)
    with pytest.raises(DimensionError):
        T.matmul(a, Tensor(np.zeros((2, 2))))


def test_matmul_grad():
    rng = np.random.default_rng(1)
    a = Tensor(rng.standard_normal((3, 5)), requires_grad=True)
    b = Tensor(rng.standard_normal((5, 2)), requires_grad=True)
    _grad_matches(lambda: T.sum_all(T.matmul(a, b)), [a, b])


def test_softmax_rows_is_row_stochastic():
    rng = np.random.default_rng(2)
    s = T.softmax_rows(Tensor(rng.standard_normal((4, 6)))).data
    assert np.all(s > 0)
    assert np.allclose(s.sum(axis=1), 1.0)


def test_softmax_rejects_nan():
    with pytest.raises(NumericError):
        T.softmax_rows(Tensor(np.array([[0.0, np.nan]])))


def test_softmax_grad():
    rng = np.random.default_rng(3)
    a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    w = rng.standard_normal((3, 4))
    _grad_matches(lambda: T.sum_all(T.elementwise_mul(T.softmax_rows(a), Tensor(w))), [a])


def test_layer_norm_normalizes_and_grad():
    rng = np.random.default_rng(4)
    a = Tensor(rng.standard_normal((3, 8)), requires_grad=True)
    gain = Tensor(np.ones(8), requires_grad=True)
    bias = Tensor(np.zeros(8), requires_grad=True)
    y = T.layer_norm(a, gain, bias).data
    assert np.allclose(y.mean(axis=1), 0.0, atol=1e-12)
    assert np.allclose(y.var(axis=1), 1.0, atol=1e-4)
    w = rng.standard_normal((3, 8))

    def loss():
        return T.sum_all(T.elementwise_mul(T.layer_norm(a, gain, bias), Tensor(w)))

    _grad_matches(loss, [a, gain, bias], tol=1e-5)


def test_layer_norm_needs_two_features():
    with pytest.raises(DimensionError):
        T.layer_norm(Tensor(np.zeros((2, 1))), Tensor(np.ones(1)), Tensor(np.zeros(1)))


@pytest.mark.parametrize("kind", ["relu", "gelu", "identity"])
def test_activation_grads(kind):
    rng = np.random.default_rng(5)
    a = Tensor(rng.standard_normal((4, 4)) + 0.1, requires_grad=True)
    _grad_matches(lambda: T.sum_all(T.activation(a, kind)), [a], tol=1e-5)


def test_unknown_activation():
    with pytest.raises(ConfigurationError):
        T.activation(Tensor(np.zeros(2)), "swish")


def test_dropout_scales_kept_entries():
    rng = np.random.default_rng(6)
    a = Tensor(np.ones((100, 10)))
    y = T.dropout(a, 0.5, rng).data
    kept = y[y != 0.0]
    assert np.allclose(kept, 2.0)
    assert abs(y.mean() - 1.0) < 0.1


def test_permutations_and_slices_grad():
    rng = np.random.default_rng(7)
    perm = rng.permutation(6)
    inv = np.argsort(perm)
    a = Tensor(rng.standard_normal((6, 6)), requires_grad=True)
    w = rng.standard_normal((6, 6))

    def loss():
        y = T.permute_rows(a, perm, inv)
        y = T.permute_cols(y, perm, inv)
        return T.sum_all(T.elementwise_mul(y, Tensor(w)))

    _grad_matches(loss, [a])

    def loss2():
        y = T.pad_axis(a, 8, 0)
        y = T.slice_range(y, 1, 7, 0)
        return T.sum_all(y)

    _grad_matches(loss2, [a])


def test_block_diag_products_match_dense():
    rng = np.random.default_rng(8)
    b = 3
    blocks = Tensor(rng.standard_normal((b, b, b)), requires_grad=True)
    dense = np.zeros((b * b, b * b))
    for j in range(b):
        dense[j * b : (j + 1) * b, j * b : (j + 1) * b] = blocks.data[j]
    x = Tensor(rng.standard_normal((b * b, 4)), requires_grad=True)
    assert np.allclose(T.block_diag_lmul(blocks, x).data, dense @ x.data)
    xr = Tensor(rng.standard_normal((4, b * b)), requires_grad=True)
    assert np.allclose(T.block_diag_rmul(xr, blocks).data, xr.data @ dense)
    _grad_matches(lambda: T.sum_all(T.block_diag_lmul(blocks, x)), [blocks, x])
    _grad_matches(lambda: T.sum_all(T.block_diag_rmul(xr, blocks)), [blocks, xr])


def test_backward_requires_scalar_loss():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    with tape_scope() as tape:
        y = T.add(a, a)
        with pytest.raises(ContractError):
            tape.backward(y)


def test_backward_requires_recorded_loss():
    with tape_scope() as tape:
        with pytest.raises(ContractError):
            tape.backward(Tensor(np.array(1.0)))


def test_no_recording_without_tape():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    y = T.add(a, a)
    assert y._node_id is None


def test_repeated_backward_is_deterministic():
    rng = np.random.default_rng(9)
    a = Tensor(rng.standard_normal((4, 4)), requires_grad=True)
    grads = []
    for _ in range(2):
        a.zero_grad()
        with tape_scope() as tape:
            y = T.matmul(a, T.transpose(a))
            tape.backward(T.sum_all(y))
        grads.append(a.grad.copy())
    assert np.array_equal(grads[0], grads[1])
