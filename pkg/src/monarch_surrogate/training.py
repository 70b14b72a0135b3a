"""Window-to-window forecaster and a small Adam training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .blocks import EnhancedLayerParams, enhanced_layer_forward
from .data import WindowedDataset
from .errors import ConfigurationError
from .reference import DenseMHSAParams, dense_ffn_forward, dense_mhsa_forward
from .tensor import Tensor, tape_scope


@dataclass
class DenseLayerParams:
    """Standard encoder layer: softmax attention + two-layer FFN, post-norm."""

    attn: DenseMHSAParams
    w1: Tensor
    w2: Tensor
    sigma: str
    ln1_gain: Tensor
    ln1_bias: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor

    @classmethod
    def create(
        cls, d_model: int, heads: int, d_ff: int, rng: np.random.Generator, sigma: str = "relu"
    ) -> "DenseLayerParams":
        if d_model % heads != 0:
            raise ConfigurationError(f"d_model={d_model} not divisible by heads={heads}")
        d_k = d_model // heads
        return cls(
            attn=DenseMHSAParams.create(d_model, d_k, d_k, d_model, heads, rng),
            w1=Tensor(rng.normal(0.0, d_model**-0.5, (d_model, d_ff)), requires_grad=True),
            w2=Tensor(rng.normal(0.0, d_ff**-0.5, (d_model, d_ff)), requires_grad=True),
            sigma=sigma,
            ln1_gain=Tensor(np.ones(d_model), requires_grad=True),
            ln1_bias=Tensor(np.zeros(d_model), requires_grad=True),
            ln2_gain=Tensor(np.ones(d_model), requires_grad=True),
            ln2_bias=Tensor(np.zeros(d_model), requires_grad=True),
        )

    def parameters(self) -> list[Tensor]:
        return self.attn.parameters() + [
            self.w1, self.w2,
            self.ln1_gain, self.ln1_bias, self.ln2_gain, self.ln2_bias,
        ]


def dense_layer_forward(x: Tensor, params: DenseLayerParams) -> Tensor:
    x1 = T.layer_norm(
        T.add(x, dense_mhsa_forward(x, params.attn)), params.ln1_gain, params.ln1_bias
    )
    ffn = dense_ffn_forward(x1, params.w1, params.w2, params.sigma)
    return T.layer_norm(T.add(x1, ffn), params.ln2_gain, params.ln2_bias)


@dataclass
class ForecasterParams:
    """Scalar series in, l_out-step forecast out.

    embed lifts each scalar step to d_model, the encoder layers mix along
    the window, and the head flattens the whole window to the forecast.
    """

    variant: str  # 'surrogate' or 'dense'
    l_in: int
    l_out: int
    d_model: int
    embed: Tensor  # (1, d_model)
    layers: list
    head: Tensor  # (l_in * d_model, l_out)

    @classmethod
    def create(
        cls,
        variant: str,
        l_in: int,
        l_out: int,
        d_model: int,
        heads: int,
        n_layers: int,
        d_ff: int,
        rng: np.random.Generator,
        dropout: float = 0.0,
    ) -> "ForecasterParams":
        if variant == "surrogate":
            from .structured import pad_to_square

            layers = [
                EnhancedLayerParams.create(
                    l_in, d_model, heads, rng,
                    d_ffn=pad_to_square(d_ff).n_pad, dropout=dropout,
                )
                for _ in range(n_layers)
            ]
        elif variant == "dense":
            layers = [DenseLayerParams.create(d_model, heads, d_ff, rng) for _ in range(n_layers)]
        else:
            raise ConfigurationError(f"unknown variant {variant!r}")
        return cls(
            variant=variant,
            l_in=l_in,
            l_out=l_out,
            d_model=d_model,
            embed=Tensor(rng.normal(0.0, 1.0, (1, d_model)), requires_grad=True),
            layers=layers,
            head=Tensor(
                rng.normal(0.0, (l_in * d_model) ** -0.5, (l_in * d_model, l_out)),
                requires_grad=True,
            ),
        )

    def parameters(self) -> list[Tensor]:
        out = [self.embed]
        for layer in self.layers:
            out.extend(layer.parameters())
        out.append(self.head)
        return out


def forecaster_forward(
    x: Tensor,
    params: ForecasterParams,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """x has shape (l_in, 1); returns the (1, l_out) forecast."""
    y = T.matmul(x, params.embed)
    for layer in params.layers:
        if params.variant == "surrogate":
            y = enhanced_layer_forward(y, layer, training=training, rng=rng)
        else:
            y = dense_layer_forward(y, layer)
    flat = T.reshape(y, (1, params.l_in * params.d_model))
    return T.matmul(flat, params.head)


class Adam:
    """Adam with bias correction; operates in place on parameter tensors."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def step(self) -> None:
        self.t += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / (1.0 - self.beta1**self.t)
            v_hat = self.v[i] / (1.0 - self.beta2**self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None


@dataclass
class TrainConfig:
    variant: str = "surrogate"
    d_model: int = 16
    heads: int = 2
    layers: int = 1
    d_ff: int = 64
    lr: float = 3e-3
    epochs: int = 40
    seed: int = 0
    dropout: float = 0.0


@dataclass
class TrainResult:
    variant: str
    epochs_run: int
    best_epoch: int
    val_mse: list[float] = field(repr=False)
    test_mse: float = float("nan")
    test_mae: float = float("nan")
    failed: bool = False
    wall_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "val_mse": self.val_mse,
            "test_mse": self.test_mse,
            "test_mae": self.test_mae,
            "failed": self.failed,
            "wall_seconds": self.wall_seconds,
        }


def _eval_mse_mae(params: ForecasterParams, xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    se = 0.0
    ae = 0.0
    for x, y in zip(xs, ys):
        pred = forecaster_forward(Tensor(x[:, None]), params).data[0]
        se += float(np.mean((pred - y) ** 2))
        ae += float(np.mean(np.abs(pred - y)))
    return se / len(xs), ae / len(xs)


def train_forecaster(dataset: WindowedDataset, cfg: TrainConfig) -> TrainResult:
    """Minimize per-window MSE with Adam; keep the best-validation weights."""
    rng = np.random.default_rng(cfg.seed)
    params = ForecasterParams.create(
        cfg.variant, dataset.l_in, dataset.l_out, cfg.d_model,
        cfg.heads, cfg.layers, cfg.d_ff, rng, dropout=cfg.dropout,
    )
    opt = Adam(params.parameters(), lr=cfg.lr)
    xs, ys = dataset.train
    best_val = float("inf")
    best_epoch = -1
    best_state: list[np.ndarray] = []
    val_history: list[float] = []
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(xs))
        for i in order:
            with tape_scope() as tape:
                pred = forecaster_forward(
                    Tensor(xs[i][:, None]), params, training=True, rng=rng
                )
                diff = T.sub(pred, Tensor(ys[i][None, :]))
                loss = T.mean_all(T.elementwise_mul(diff, diff))
                if not np.isfinite(loss.data):
                    return TrainResult(
                        variant=cfg.variant, epochs_run=epoch, best_epoch=best_epoch,
                        val_mse=val_history, failed=True,
                        wall_seconds=time.perf_counter() - t0,
                    )
                opt.zero_grad()
                tape.backward(loss)
            opt.step()
        val, _ = _eval_mse_mae(params, *dataset.val)
        val_history.append(val)
        if val < best_val:
            best_val = val
            best_epoch = epoch
            best_state = [p.data.copy() for p in params.parameters()]
    if best_state:
        for p, saved in zip(params.parameters(), best_state):
            p.data = saved
    test_mse, test_mae = _eval_mse_mae(params, *dataset.test)
    return TrainResult(
        variant=cfg.variant,
        epochs_run=cfg.epochs,
        best_epoch=best_epoch,
        val_mse=val_history,
        test_mse=test_mse,
        test_mae=test_mae,
        wall_seconds=time.perf_counter() - t0,
    )
