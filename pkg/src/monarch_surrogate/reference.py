"""Dense baselines and synthetic attention-pattern generators.

The dense multi-head self-attention and FFN here are the standard forms the
surrogate blocks replace.  The pattern generators produce row-stochastic
scoring matrices whose mass sits either on a circular diagonal band or on a
fixed set of columns; they feed the attention-equals-convolution checkers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigurationError, DimensionError
from .tensor import Tensor


@dataclass
class DenseMHSAParams:
    heads: int
    w_qry: list[Tensor]  # per head, (d_in, d_k)
    w_key: list[Tensor]
    w_val: list[Tensor]  # per head, (d_in, d_v)
    w_out: Tensor  # (heads * d_v, d_out)

    @classmethod
    def create(
        cls,
        d_in: int,
        d_k: int,
        d_v: int,
        d_out: int,
        heads: int,
        rng: np.random.Generator,
    ) -> "DenseMHSAParams":
        def w(rows, cols):
            return Tensor(rng.normal(0.0, rows**-0.5, (rows, cols)), requires_grad=True)

        return cls(
            heads=heads,
            w_qry=[w(d_in, d_k) for _ in range(heads)],
            w_key=[w(d_in, d_k) for _ in range(heads)],
            w_val=[w(d_in, d_v) for _ in range(heads)],
            w_out=w(heads * d_v, d_out),
        )

    def parameters(self) -> list[Tensor]:
        return self.w_qry + self.w_key + self.w_val + [self.w_out]


def dense_mhsa_forward(x: Tensor, params: DenseMHSAParams) -> Tensor:
    """Softmax(Q K^T / sqrt(Dk)) X W_val per head, heads concatenated."""
    d_k = params.w_qry[0].shape[1]
    heads = []
    for h in range(params.heads):
        q = T.matmul(x, params.w_qry[h])
        k = T.matmul(x, params.w_key[h])
        scores = T.scale(T.matmul(q, T.transpose(k)), d_k**-0.5)
        a = T.softmax_rows(scores)
        heads.append(T.matmul(a, T.matmul(x, params.w_val[h])))
    return T.matmul(T.concat_cols(heads), params.w_out)


def dense_ffn_forward(x: Tensor, w1: Tensor, w2: Tensor, sigma: str) -> Tensor:
    """Two-layer network sigma(X W1) W2^T with W1, W2 of shape (d_in, d_m)."""
    if w1.shape != w2.shape:
        raise DimensionError(f"dense FFN weights disagree: {w1.shape} vs {w2.shape}")
    return T.matmul(T.activation(T.matmul(x, w1), sigma), T.transpose(w2))


@dataclass
class AttentionPattern:
    """Generator spec for a diagonal-band or fixed-column scoring matrix.

    Weights are strictly positive, sum to one, and are shared across queries
    (the query-independence hypothesis of the equivalence theorems).
    """

    kind: str  # 'diagonal' or 'vertical'
    n: int
    lam: int
    weights: np.ndarray  # diagonal: f over offsets -floor(lam/2)..floor(lam/2); vertical: g over columns
    columns: np.ndarray | None = None  # vertical only: the lam significant columns

    def __post_init__(self):
        if self.kind not in ("diagonal", "vertical"):
            raise ConfigurationError(f"unknown pattern kind {self.kind!r}")
        if self.kind == "diagonal":
            if self.lam % 2 == 0:
                raise ConfigurationError(f"diagonal pattern needs odd lambda, got {self.lam}")
            if len(self.weights) != self.lam:
                raise ConfigurationError("diagonal pattern needs one weight per offset")
        else:
            if self.columns is None or len(self.columns) != self.lam:
                raise ConfigurationError("vertical pattern needs lambda columns")
            if len(np.unique(self.columns)) != self.lam:
                raise ConfigurationError("vertical pattern columns must be distinct")
            if np.any(self.columns < 0) or np.any(self.columns >= self.n):
                raise ConfigurationError("vertical pattern columns out of range")
            if len(self.weights) != self.lam:
                raise ConfigurationError("vertical pattern needs one weight per column")
        if np.any(self.weights <= 0.0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConfigurationError("pattern weights must be positive and sum to 1")

    @property
    def offsets(self) -> np.ndarray:
        half = self.lam // 2
        return np.arange(-half, half + 1)


def random_pattern(kind: str, n: int, lam: int, rng: np.random.Generator) -> AttentionPattern:
    """Draw weights uniform(0.1, 1) and normalize, keeping them in (0, 1]."""
    w = rng.uniform(0.1, 1.0, lam)
    w /= w.sum()
    cols = None
    if kind == "vertical":
        cols = np.sort(rng.choice(n, size=lam, replace=False))
    return AttentionPattern(kind=kind, n=n, lam=lam, weights=w, columns=cols)


def pattern_matrix(p: AttentionPattern) -> np.ndarray:
    """Materialize the row-stochastic N x N scoring matrix."""
    a = np.zeros((p.n, p.n))
    if p.kind == "diagonal":
        for delta, w in zip(p.offsets, p.weights):
            rows = np.arange(p.n)
            a[rows, (rows - delta) % p.n] = w
    else:
        a[:, p.columns] = p.weights
    return a


def patterned_mhsa_forward(x: np.ndarray, scores: list[np.ndarray], w: list[np.ndarray]) -> np.ndarray:
    """MHSA with externally imposed scoring matrices: sum_h A_h X W_h."""
    if len(scores) != len(w):
        raise DimensionError("need one scoring matrix per head weight")
    out = np.zeros((x.shape[0], w[0].shape[1]))
    for a, wh in zip(scores, w):
        if a.shape != (x.shape[0], x.shape[0]):
            raise DimensionError(f"scoring matrix shape {a.shape} does not match {x.shape[0]} rows")
        out += a @ x @ wh
    return out


def sum_of_convs_forward(x: np.ndarray, kernels: list[dict[int, np.ndarray]]) -> np.ndarray:
    """Circular 1-D convolution over rows with matrix-valued taps, summed over heads.

    kernels[h] maps offset delta to the (d_in, d_out) tap W_delta; output row q
    is sum_h sum_delta X[(q - delta) mod N] @ W_delta.
    """
    n = x.shape[0]
    d_out = next(iter(kernels[0].values())).shape[1]
    out = np.zeros((n, d_out))
    rows = np.arange(n)
    for taps in kernels:
        for delta, w_delta in taps.items():
            out += x[(rows - delta) % n] @ w_delta
    return out


def fixed_tap_aggregation(x: np.ndarray, pattern: AttentionPattern, w: list[np.ndarray]) -> np.ndarray:
    """The query-independent form a vertical MHSA collapses to.

    Every output row equals sum_h sum_{k in K} g(k) X[k] @ W_h.
    """
    if pattern.kind != "vertical":
        raise ConfigurationError("fixed-tap aggregation applies to vertical patterns")
    pooled = pattern.weights @ x[pattern.columns]  # (d_in,)
    row = sum(pooled @ wh for wh in w)
    return np.tile(row, (x.shape[0], 1))
