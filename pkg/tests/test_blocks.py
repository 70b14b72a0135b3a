"""Unit tests for the surrogate attention/FFN blocks and the enhanced layer."""

import numpy as np
import pytest

from monarch_surrogate.blocks import (
    EnhancedLayerParams,
    SurrogateAttentionParams,
    SurrogateFFNParams,
    enhanced_layer_forward,
    surrogate_attention_forward,
    surrogate_ffn_forward,
)
from monarch_surrogate.errors import ConfigurationError, DimensionError
from monarch_surrogate.tensor import Tensor
from monarch_surrogate.verification import _dense_sab_oracle, _dense_sfb_oracle


def test_attention_params_shapes():
    rng = np.random.default_rng(0)
    p = SurrogateAttentionParams.create(96, 32, 32, heads=4, rng=rng)
    assert p.head_width == 8
    assert p.d_head == 9
    assert p.n_pad == 100
    assert len(p.m_q) == len(p.m_k) == len(p.m_v) == 4
    assert p.m1.perm is p.m2.perm
    assert all(w.shape == (9, 32) for w in p.w_out)


def test_attention_rejects_indivisible_heads():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigurationError):
        SurrogateAttentionParams.create(16, 10, 10, heads=3, rng=rng)


@pytest.mark.parametrize("n,d,heads", [(4, 4, 1), (16, 8, 2), (10, 6, 3)])
def test_attention_matches_dense_oracle(n, d, heads):
    rng = np.random.default_rng(n + d)
    p = SurrogateAttentionParams.create(n, d, d, heads=heads, rng=rng)
    x = rng.standard_normal((n, d))
    fast = surrogate_attention_forward(Tensor(x), p).data
    assert fast.shape == (n, d)
    assert np.abs(fast - _dense_sab_oracle(x, p)).max() < 1e-10


def test_attention_input_validation():
    rng = np.random.default_rng(1)
    p = SurrogateAttentionParams.create(4, 4, 4, heads=2, rng=rng)
    with pytest.raises(DimensionError):
        surrogate_attention_forward(Tensor(np.zeros((4, 5))), p)
    with pytest.raises(DimensionError):
        surrogate_attention_forward(Tensor(np.zeros((9, 4))), p)


def test_ffn_defaults_and_validation():
    rng = np.random.default_rng(2)
    p = SurrogateFFNParams.create(6, rng)
    assert p.d_ffn == 9
    with pytest.raises(ConfigurationError):
        SurrogateFFNParams.create(6, rng, d_ffn=8)
    with pytest.raises(ConfigurationError):
        SurrogateFFNParams.create(16, rng, d_ffn=9)


@pytest.mark.parametrize("sigma", ["relu", "gelu"])
def test_ffn_matches_dense_oracle(sigma):
    rng = np.random.default_rng(3)
    p = SurrogateFFNParams.create(6, rng, d_ffn=16, sigma=sigma)
    x = rng.standard_normal((5, 6))
    fast = surrogate_ffn_forward(Tensor(x), p).data
    assert fast.shape == (5, 6)
    assert np.abs(fast - _dense_sfb_oracle(x, p)).max() < 1e-10


@pytest.mark.parametrize("norm_style", ["post-ln", "pre-ln"])
def test_enhanced_layer_shapes(norm_style):
    rng = np.random.default_rng(4)
    p = EnhancedLayerParams.create(6, 4, 2, rng, norm_style=norm_style)
    y = enhanced_layer_forward(Tensor(rng.standard_normal((6, 4))), p)
    assert y.shape == (6, 4)
    assert np.all(np.isfinite(y.data))


def test_enhanced_layer_rejects_unknown_norm_style():
    rng = np.random.default_rng(5)
    with pytest.raises(ConfigurationError):
        EnhancedLayerParams.create(6, 4, 2, rng, norm_style="sandwich")


def test_dropout_only_active_in_training():
    rng = np.random.default_rng(6)
    p = EnhancedLayerParams.create(6, 4, 2, rng, dropout=0.5)
    x = Tensor(rng.standard_normal((6, 4)))
    eval_a = enhanced_layer_forward(x, p).data
    eval_b = enhanced_layer_forward(x, p).data
    assert np.array_equal(eval_a, eval_b)
    train = enhanced_layer_forward(x, p, training=True, rng=np.random.default_rng(0)).data
    assert not np.array_equal(train, eval_a)
    with pytest.raises(ConfigurationError):
        enhanced_layer_forward(x, p, training=True)


def test_parameter_lists_cover_all_learnables():
    rng = np.random.default_rng(7)
    p = EnhancedLayerParams.create(6, 4, 2, rng)
    params = p.parameters()
    # 3 QKV Monarchs x 2 heads x 2 factors + M1/M2 x 2 + 2 W_out
    #   + FFN 2 Monarchs x 2 + 4 layer-norm tensors
    assert len(params) == 12 + 4 + 2 + 4 + 4
    assert len({id(t) for t in params}) == len(params)
