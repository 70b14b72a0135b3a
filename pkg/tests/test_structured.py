"""Unit tests for Monarch matrices, permutations, padding, and the meter."""

import numpy as np
import pytest

from monarch_surrogate import tensor as T
from monarch_surrogate.errors import ConfigurationError, DimensionError
from monarch_surrogate.gradcheck import max_rel_error
from monarch_surrogate.structured import (
    FlopMeter,
    block_diag_dense,
    flop_meter,
    is_perfect_square,
    monarch_apply,
    monarch_apply_muladds,
    monarch_from_dense_factors,
    monarch_new,
    monarch_to_dense,
    pad_to_square,
    permutation_spec,
)
from monarch_surrogate.tensor import Tensor


def test_permutation_is_involution():
    for n in (4, 16, 64):
        h = permutation_spec(n).map
        assert np.array_equal(h[h], np.arange(n))


def test_permutation_matrix_symmetric():
    p = permutation_spec(16).matrix()
    assert np.array_equal(p, p.T)
    assert np.array_equal(p @ p, np.eye(16))


def test_permutation_rejects_non_square():
    with pytest.raises(DimensionError, match="pad_to_square"):
        permutation_spec(6)


def test_is_perfect_square():
    assert is_perfect_square(1) and is_perfect_square(64)
    assert not is_perfect_square(2) and not is_perfect_square(63)


def test_pad_to_square_values():
    assert pad_to_square(96).n_pad == 100
    assert pad_to_square(64).n_pad == 64
    assert pad_to_square(1).n_pad == 1
    with pytest.raises(DimensionError):
        pad_to_square(0)


def test_pad_lift_project_roundtrip():
    rng = np.random.default_rng(0)
    pad = pad_to_square(6)
    x = Tensor(rng.standard_normal((6, 3)))
    lifted = pad.lift(x)
    assert lifted.shape == (9, 3)
    assert np.array_equal(lifted.data[6:], np.zeros((3, 3)))
    assert np.array_equal(pad.project(lifted).data, x.data)


@pytest.mark.parametrize("n", [4, 16, 64])
@pytest.mark.parametrize("side", ["left", "right"])
def test_apply_matches_dense(n, side):
    rng = np.random.default_rng(n)
    m = monarch_new(n, rng=rng)
    dense = monarch_to_dense(m)
    if side == "left":
        x = Tensor(rng.standard_normal((n, 3)))
        expected = dense @ x.data
    else:
        x = Tensor(rng.standard_normal((3, n)))
        expected = x.data @ dense
    got = monarch_apply(m, x, side).data
    assert np.abs(got - expected).max() <= 1e-12


def test_identity_init_gives_permutation():
    m = monarch_new(16, init="identity-block")
    assert np.array_equal(monarch_to_dense(m), permutation_spec(16).matrix())


def test_param_count_law():
    for n in (4, 16, 64, 256):
        m = monarch_new(n, init="identity-block")
        assert m.param_count == 2 * round(n**1.5)


def test_explicit_init_validation():
    with pytest.raises(ConfigurationError):
        monarch_new(4, init="explicit")
    with pytest.raises(DimensionError):
        monarch_new(4, init="explicit", blocks=(np.zeros((3, 2, 2)), np.zeros((2, 2, 2))))
    with pytest.raises(ConfigurationError):
        monarch_new(4, init="not-an-init")


def test_kaiming_block_scale():
    rng = np.random.default_rng(1)
    m = monarch_new(1024, rng=rng)
    std = m.left.data.std()
    assert abs(std - 1024**-0.25) < 0.01


def test_from_dense_factors_roundtrip():
    rng = np.random.default_rng(2)
    m = monarch_new(16, rng=rng)
    l_dense = block_diag_dense(m.left.data)
    r_dense = block_diag_dense(m.right.data)
    m2 = monarch_from_dense_factors(16, l_dense, r_dense)
    assert np.array_equal(monarch_to_dense(m), monarch_to_dense(m2))


def test_from_dense_factors_rejects_off_block():
    bad = np.zeros((4, 4))
    bad[0, 3] = 1.0
    with pytest.raises(DimensionError):
        monarch_from_dense_factors(4, bad, np.zeros((4, 4)))


def test_apply_dimension_errors():
    m = monarch_new(4, init="identity-block")
    with pytest.raises(DimensionError):
        monarch_apply(m, Tensor(np.zeros((5, 2))), "left")
    with pytest.raises(DimensionError):
        monarch_apply(m, Tensor(np.zeros((2, 5))), "right")
    with pytest.raises(ConfigurationError):
        monarch_apply(m, Tensor(np.zeros((4, 2))), "sideways")


def test_meter_counts_factored_cost():
    m = monarch_new(256, init="identity-block")
    x = Tensor(np.zeros((256, 1)))
    flop_meter.reset()
    monarch_apply(m, x, "left")
    assert flop_meter.muladds == 16384
    assert flop_meter.flops == 32768
    assert monarch_apply_muladds(256, 1) == 16384


def test_meter_is_cumulative_and_resettable():
    meter = FlopMeter()
    meter.add(10)
    meter.add(5)
    assert meter.muladds == 15
    meter.reset()
    assert meter.muladds == 0


def test_gradients_through_apply():
    rng = np.random.default_rng(3)
    m = monarch_new(9, rng=rng)
    x = Tensor(rng.standard_normal((9, 2)), requires_grad=True)
    w = rng.standard_normal((9, 2))

    def loss():
        return T.sum_all(T.elementwise_mul(monarch_apply(m, x, "left"), Tensor(w)))

    assert max_rel_error(loss, [m.left, m.right, x]) < 1e-6
