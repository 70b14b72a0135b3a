"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every primitive is a pure function of its inputs.  When a tape is active,
applications are recorded in execution order and ``backward`` replays them
in reverse, accumulating gradients in the fixed tape order so repeated runs
are bit-identical.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, ContractError, DimensionError, NumericError

LAYER_NORM_EPS = 1e-5
GELU_C0 = 0.7978845608  # sqrt(2/pi), tanh approximation constant
GELU_C1 = 0.044715


class Tensor:
    """A dense row-major float64 array, optionally tracked for gradients."""

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_node_id")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._backward: Callable[[np.ndarray], None] | None = None
        self._node_id: int | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Ordered record of tensors produced by differentiable primitives."""

    def __init__(self):
        self._nodes: list[Tensor] = []

    def record(self, out: Tensor, backward: Callable[[np.ndarray], None]) -> None:
        out._backward = backward
        out._node_id = len(self._nodes)
        self._nodes.append(out)

    def __len__(self) -> int:
        return len(self._nodes)

    def backward(self, loss: Tensor) -> None:
        if loss.data.ndim != 0 and loss.data.size != 1:
            raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")
        if loss._node_id is None:
            raise ContractError("loss was not produced through recorded primitives")
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self._nodes[: loss._node_id + 1]):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)


_active_tape: Tape | None = None


class tape_scope:
    """Context manager installing a tape as the active recording target."""

    def __init__(self, tape: Tape | None = None):
        self.tape = tape if tape is not None else Tape()
        self._prev: Tape | None = None

    def __enter__(self) -> Tape:
        global _active_tape
        self._prev = _active_tape
        _active_tape = self.tape
        return self.tape

    def __exit__(self, *exc):
        global _active_tape
        _active_tape = self._prev
        return False


def active_tape() -> Tape | None:
    return _active_tape


def backward(loss: Tensor) -> None:
    """Run reverse-mode accumulation from ``loss`` over the active tape."""
    if _active_tape is None:
        raise ContractError("backward called with no active tape")
    _active_tape.backward(loss)


def _tracked(*tensors: Tensor) -> bool:
    if _active_tape is None:
        return False
    return any(t.requires_grad or t._backward is not None for t in tensors)


def _record(out: Tensor, backward_fn: Callable[[np.ndarray], None], *inputs: Tensor) -> Tensor:
    if _tracked(*inputs):
        _active_tape.record(out, backward_fn)
    return out


def _wants_grad(t: Tensor) -> bool:
    return t.requires_grad or t._backward is not None


# ---------------------------------------------------------------------------
# elementwise arithmetic


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    out = Tensor(a.data + b.data)

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g)
        if _wants_grad(b):
            b.accumulate_grad(g)

    return _record(out, bwd, a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")
    out = Tensor(a.data - b.data)

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g)
        if _wants_grad(b):
            b.accumulate_grad(-g)

    return _record(out, bwd, a, b)


def elementwise_mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "elementwise_mul")
    out = Tensor(a.data * b.data)

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g * b.data)
        if _wants_grad(b):
            b.accumulate_grad(g * a.data)

    return _record(out, bwd, a, b)


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c)

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g * c)

    return _record(out, bwd, a)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not chain")
    out = Tensor(a.data @ b.data)

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g @ b.data.T)
        if _wants_grad(b):
            b.accumulate_grad(a.data.T @ g)

    return _record(out, bwd, a, b)


def sum_all(a: Tensor) -> Tensor:
    out = Tensor(a.data.sum())

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(np.full_like(a.data, float(g)))

    return _record(out, bwd, a)


def mean_all(a: Tensor) -> Tensor:
    return scale(sum_all(a), 1.0 / a.data.size)


# ---------------------------------------------------------------------------
# nonlinearities and normalization


def softmax_rows(a: Tensor) -> Tensor:
    if np.isnan(a.data).any():
        raise NumericError("softmax_rows: NaN in input")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(s)

    def bwd(g):
        if _wants_grad(a):
            inner = (g * s).sum(axis=-1, keepdims=True)
            a.accumulate_grad(s * (g - inner))

    return _record(out, bwd, a)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor) -> Tensor:
    n = a.shape[-1]
    if n < 2:
        raise DimensionError(f"layer_norm needs at least 2 features, got {n}")
    if gain.shape != (n,) or bias.shape != (n,):
        raise DimensionError(f"layer_norm: gain/bias must have shape ({n},)")
    mu = a.data.mean(axis=-1, keepdims=True)
    var = a.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LAYER_NORM_EPS)
    xhat = (a.data - mu) * inv
    out = Tensor(xhat * gain.data + bias.data)

    def bwd(g):
        if _wants_grad(gain):
            gain.accumulate_grad((g * xhat).sum(axis=tuple(range(g.ndim - 1))))
        if _wants_grad(bias):
            bias.accumulate_grad(g.sum(axis=tuple(range(g.ndim - 1))))
        if _wants_grad(a):
            gy = g * gain.data
            m1 = gy.mean(axis=-1, keepdims=True)
            m2 = (gy * xhat).mean(axis=-1, keepdims=True)
            a.accumulate_grad(inv * (gy - m1 - xhat * m2))

    return _record(out, bwd, a, gain, bias)


ACTIVATION_KINDS = ("relu", "gelu", "identity")


def activation(a: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        out = Tensor(np.maximum(a.data, 0.0))

        def bwd(g):
            if _wants_grad(a):
                a.accumulate_grad(g * (a.data > 0.0))

    elif kind == "gelu":
        x = a.data
        u = GELU_C0 * (x + GELU_C1 * x**3)
        t = np.tanh(u)
        out = Tensor(0.5 * x * (1.0 + t))

        def bwd(g):
            if _wants_grad(a):
                du = GELU_C0 * (1.0 + 3.0 * GELU_C1 * x**2)
                a.accumulate_grad(g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * du))

    elif kind == "identity":
        out = Tensor(a.data.copy())

        def bwd(g):
            if _wants_grad(a):
                a.accumulate_grad(g)

    else:
        raise ConfigurationError(f"unknown activation kind {kind!r}, expected one of {ACTIVATION_KINDS}")
    return _record(out, bwd, a)


def dropout(a: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; training-harness only, never in verification paths."""
    if rate <= 0.0:
        return a
    keep = 1.0 - rate
    mask = (rng.random(a.shape) < keep) / keep

    out = Tensor(a.data * mask)

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g * mask)

    return _record(out, bwd, a)


# ---------------------------------------------------------------------------
# structure: permutations, block-diagonal products, padding, reshapes


def permute_rows(a: Tensor, perm: np.ndarray, inverse: np.ndarray) -> Tensor:
    out = Tensor(a.data[perm])

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g[inverse])

    return _record(out, bwd, a)


def permute_cols(a: Tensor, perm: np.ndarray, inverse: np.ndarray) -> Tensor:
    out = Tensor(a.data[:, perm])

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g[:, inverse])

    return _record(out, bwd, a)


def block_diag_lmul(blocks: Tensor, x: Tensor) -> Tensor:
    """dense(blocks) @ x for a (b, b, b) stack of diagonal blocks."""
    b = blocks.shape[0]
    n = b * b
    if blocks.shape != (b, b, b) or x.shape[0] != n:
        raise DimensionError(f"block_diag_lmul: blocks {blocks.shape} vs x {x.shape}")
    xr = x.data.reshape(b, b, -1)
    out = Tensor(np.matmul(blocks.data, xr).reshape(n, -1))

    def bwd(g):
        gr = g.reshape(b, b, -1)
        if _wants_grad(blocks):
            blocks.accumulate_grad(np.matmul(gr, xr.transpose(0, 2, 1)))
        if _wants_grad(x):
            x.accumulate_grad(np.matmul(blocks.data.transpose(0, 2, 1), gr).reshape(n, -1))

    return _record(out, bwd, blocks, x)


def block_diag_rmul(x: Tensor, blocks: Tensor) -> Tensor:
    """x @ dense(blocks) for a (b, b, b) stack of diagonal blocks."""
    b = blocks.shape[0]
    n = b * b
    if blocks.shape != (b, b, b) or x.shape[1] != n:
        raise DimensionError(f"block_diag_rmul: x {x.shape} vs blocks {blocks.shape}")
    m = x.shape[0]
    xr = x.data.reshape(m, b, b).transpose(1, 0, 2)  # (b, m, b)
    yr = np.matmul(xr, blocks.data)  # (b, m, b)
    out = Tensor(yr.transpose(1, 0, 2).reshape(m, n))

    def bwd(g):
        gr = g.reshape(m, b, b).transpose(1, 0, 2)  # (b, m, b)
        if _wants_grad(blocks):
            blocks.accumulate_grad(np.matmul(xr.transpose(0, 2, 1), gr))
        if _wants_grad(x):
            gx = np.matmul(gr, blocks.data.transpose(0, 2, 1))
            x.accumulate_grad(gx.transpose(1, 0, 2).reshape(m, n))

    return _record(out, bwd, x, blocks)


def pad_axis(a: Tensor, size: int, axis: int) -> Tensor:
    old = a.shape[axis]
    if size < old:
        raise DimensionError(f"pad_axis: target {size} smaller than current {old}")
    if size == old:
        return a
    widths = [(0, 0)] * a.data.ndim
    widths[axis] = (0, size - old)
    out = Tensor(np.pad(a.data, widths))

    def bwd(g):
        if _wants_grad(a):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(0, old)
            a.accumulate_grad(g[tuple(sl)])

    return _record(out, bwd, a)


def slice_axis(a: Tensor, size: int, axis: int) -> Tensor:
    old = a.shape[axis]
    if size > old:
        raise DimensionError(f"slice_axis: target {size} larger than current {old}")
    if size == old:
        return a
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(0, size)
    out = Tensor(a.data[tuple(sl)])

    def bwd(g):
        if _wants_grad(a):
            widths = [(0, 0)] * g.ndim
            widths[axis] = (0, old - size)
            a.accumulate_grad(np.pad(g, widths))

    return _record(out, bwd, a)


def slice_range(a: Tensor, start: int, stop: int, axis: int) -> Tensor:
    old = a.shape[axis]
    if not (0 <= start < stop <= old):
        raise DimensionError(f"slice_range: [{start}, {stop}) out of bounds for extent {old}")
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, stop)
    out = Tensor(a.data[tuple(sl)])

    def bwd(g):
        if _wants_grad(a):
            widths = [(0, 0)] * g.ndim
            widths[axis] = (start, old - stop)
            a.accumulate_grad(np.pad(g, widths))

    return _record(out, bwd, a)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    out = Tensor(a.data.reshape(shape))

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g.reshape(a.shape))

    return _record(out, bwd, a)


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.data.T)

    def bwd(g):
        if _wants_grad(a):
            a.accumulate_grad(g.T)

    return _record(out, bwd, a)


def concat_cols(parts: Iterable[Tensor]) -> Tensor:
    parts = list(parts)
    out = Tensor(np.concatenate([p.data for p in parts], axis=1))
    widths = [p.shape[1] for p in parts]

    def bwd(g):
        start = 0
        for p, w in zip(parts, widths):
            if _wants_grad(p):
                p.accumulate_grad(g[:, start : start + w])
            start += w

    return _record(out, bwd, *parts)
