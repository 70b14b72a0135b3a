"""Surrogate attention and FFN blocks built from Monarch matrices.

The attention replacement computes, per head,

    SA = M2 @ ((M1 @ Q) * K) * V

with learnable sequence-axis Monarchs M1, M2 and Monarch-projected Q, K, V,
then sums head outputs through per-head dense output projections.  There is
no softmax and no 1/sqrt(Dk) scaling anywhere in this path.  The FFN
replacement is Y = sigma(X @ M1) @ M2 on the feature axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigurationError, DimensionError
from .structured import MonarchMatrix, monarch_apply, monarch_new, pad_to_square
from .tensor import Tensor


@dataclass
class SurrogateAttentionParams:
    heads: int
    d_in: int
    d_out: int
    head_width: int  # contiguous input chunk per head, d_in // heads
    d_head: int  # padded per-head width, a perfect square
    n_pad: int  # padded sequence size, a perfect square
    m_q: list[MonarchMatrix]
    m_k: list[MonarchMatrix]
    m_v: list[MonarchMatrix]
    m1: MonarchMatrix
    m2: MonarchMatrix
    w_out: list[Tensor]  # per head, (d_head, d_out)
    project_qkv: bool = True

    @classmethod
    def create(
        cls,
        n_seq: int,
        d_in: int,
        d_out: int,
        heads: int,
        rng: np.random.Generator,
        init: str = "kaiming-block",
    ) -> "SurrogateAttentionParams":
        if d_in % heads != 0:
            raise ConfigurationError(f"d_in={d_in} not divisible by heads={heads}")
        head_width = d_in // heads
        d_head = pad_to_square(head_width).n_pad
        n_pad = pad_to_square(n_seq).n_pad
        m1 = monarch_new(n_pad, init=init, rng=rng)
        m2 = monarch_new(n_pad, init=init, rng=rng)
        m2.perm = m1.perm  # sequence Monarchs share one permutation
        mk = lambda: monarch_new(d_head, init=init, rng=rng)
        w_std = d_head**-0.5
        return cls(
            heads=heads,
            d_in=d_in,
            d_out=d_out,
            head_width=head_width,
            d_head=d_head,
            n_pad=n_pad,
            m_q=[mk() for _ in range(heads)],
            m_k=[mk() for _ in range(heads)],
            m_v=[mk() for _ in range(heads)],
            m1=m1,
            m2=m2,
            w_out=[
                Tensor(rng.normal(0.0, w_std, (d_head, d_out)), requires_grad=True)
                for _ in range(heads)
            ],
        )

    def parameters(self) -> list[Tensor]:
        out: list[Tensor] = []
        if self.project_qkv:
            for group in (self.m_q, self.m_k, self.m_v):
                for m in group:
                    out.extend(m.parameters())
        out.extend(self.m1.parameters())
        out.extend(self.m2.parameters())
        out.extend(self.w_out)
        return out


@dataclass
class SurrogateFFNParams:
    d_in: int
    d_ffn: int  # Monarch size, a perfect square >= d_in
    m1: MonarchMatrix
    m2: MonarchMatrix
    sigma: str = "relu"

    @classmethod
    def create(
        cls,
        d_in: int,
        rng: np.random.Generator,
        d_ffn: int | None = None,
        sigma: str = "relu",
        init: str = "kaiming-block",
    ) -> "SurrogateFFNParams":
        if d_ffn is None:
            d_ffn = pad_to_square(d_in).n_pad
        if pad_to_square(d_ffn).n_pad != d_ffn:
            raise ConfigurationError(f"d_ffn={d_ffn} must be a perfect square")
        if d_ffn < d_in:
            raise ConfigurationError(f"d_ffn={d_ffn} smaller than d_in={d_in}")
        return cls(
            d_in=d_in,
            d_ffn=d_ffn,
            m1=monarch_new(d_ffn, init=init, rng=rng),
            m2=monarch_new(d_ffn, init=init, rng=rng),
            sigma=sigma,
        )

    def parameters(self) -> list[Tensor]:
        return self.m1.parameters() + self.m2.parameters()


@dataclass
class EnhancedLayerParams:
    attn: SurrogateAttentionParams
    ffn: SurrogateFFNParams
    norm_style: str  # 'post-ln' or 'pre-ln'
    ln1_gain: Tensor
    ln1_bias: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor
    dropout: float = 0.0

    @classmethod
    def create(
        cls,
        n_seq: int,
        d_model: int,
        heads: int,
        rng: np.random.Generator,
        norm_style: str = "post-ln",
        d_ffn: int | None = None,
        sigma: str = "relu",
        dropout: float = 0.0,
    ) -> "EnhancedLayerParams":
        if norm_style not in ("post-ln", "pre-ln"):
            raise ConfigurationError(f"unknown norm style {norm_style!r}")
        return cls(
            attn=SurrogateAttentionParams.create(n_seq, d_model, d_model, heads, rng),
            ffn=SurrogateFFNParams.create(d_model, rng, d_ffn=d_ffn, sigma=sigma),
            norm_style=norm_style,
            ln1_gain=Tensor(np.ones(d_model), requires_grad=True),
            ln1_bias=Tensor(np.zeros(d_model), requires_grad=True),
            ln2_gain=Tensor(np.ones(d_model), requires_grad=True),
            ln2_bias=Tensor(np.zeros(d_model), requires_grad=True),
            dropout=dropout,
        )

    def parameters(self) -> list[Tensor]:
        return (
            self.attn.parameters()
            + self.ffn.parameters()
            + [self.ln1_gain, self.ln1_bias, self.ln2_gain, self.ln2_bias]
        )


def structured_projection(
    x: Tensor, params: SurrogateAttentionParams
) -> tuple[list[Tensor], list[Tensor], list[Tensor]]:
    """Split x into per-head column chunks and Monarch-project each to Q/K/V."""
    n = x.shape[0]
    if n > params.n_pad:
        raise DimensionError(f"sequence length {n} exceeds padded size {params.n_pad}")
    if x.shape[1] != params.d_in:
        raise DimensionError(f"input width {x.shape[1]} != d_in {params.d_in}")
    w, d_head = params.head_width, params.d_head
    qs, ks, vs = [], [], []
    for h in range(params.heads):
        chunk = T.slice_range(x, h * w, (h + 1) * w, 1)
        chunk = T.pad_axis(chunk, d_head, 1)
        if params.project_qkv:
            qs.append(monarch_apply(params.m_q[h], chunk, "right"))
            ks.append(monarch_apply(params.m_k[h], chunk, "right"))
            vs.append(monarch_apply(params.m_v[h], chunk, "right"))
        else:
            qs.append(chunk)
            ks.append(chunk)
            vs.append(chunk)
    return qs, ks, vs


def surrogate_attention_forward(x: Tensor, params: SurrogateAttentionParams) -> Tensor:
    """Head sum: sum_h [M2 ((M1 Q_h) . K_h) . V_h] W_out_h."""
    n = x.shape[0]
    qs, ks, vs = structured_projection(x, params)
    out: Tensor | None = None
    for h in range(params.heads):
        q = T.pad_axis(qs[h], params.n_pad, 0)
        k = T.pad_axis(ks[h], params.n_pad, 0)
        v = T.pad_axis(vs[h], params.n_pad, 0)
        a = T.elementwise_mul(monarch_apply(params.m1, q, "left"), k)
        sa = T.elementwise_mul(monarch_apply(params.m2, a, "left"), v)
        sa = T.slice_axis(sa, n, 0)
        head_out = T.matmul(sa, params.w_out[h])
        out = head_out if out is None else T.add(out, head_out)
    return out


def surrogate_ffn_forward(x: Tensor, params: SurrogateFFNParams) -> Tensor:
    """Feature-axis swap Y = sigma(X M1) M2, lifted to the Monarch size."""
    if x.shape[1] != params.d_in:
        raise DimensionError(f"input width {x.shape[1]} != d_in {params.d_in}")
    y = T.pad_axis(x, params.d_ffn, 1)
    y = monarch_apply(params.m1, y, "right")
    y = T.activation(y, params.sigma)
    y = monarch_apply(params.m2, y, "right")
    return T.slice_axis(y, params.d_in, 1)


def enhanced_layer_forward(
    x: Tensor,
    params: EnhancedLayerParams,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """One encoder layer with either residual-connection style."""

    def maybe_drop(t: Tensor) -> Tensor:
        if training and params.dropout > 0.0:
            if rng is None:
                raise ConfigurationError("dropout requires an rng in training mode")
            return T.dropout(t, params.dropout, rng)
        return t

    sab = lambda t: maybe_drop(surrogate_attention_forward(t, params.attn))
    sfb = lambda t: maybe_drop(surrogate_ffn_forward(t, params.ffn))
    ln1 = lambda t: T.layer_norm(t, params.ln1_gain, params.ln1_bias)
    ln2 = lambda t: T.layer_norm(t, params.ln2_gain, params.ln2_bias)
    if params.norm_style == "post-ln":
        x1 = ln1(T.add(x, sab(x)))
        return ln2(T.add(x1, sfb(x1)))
    x1 = T.add(x, sab(ln1(x)))
    return T.add(x1, sfb(ln2(x1)))
