"""Dense float64 tensors with reverse-mode automatic differentiation.

Define-by-run: primitives executed while a Tape is active append one record
each, and backward() replays those records in exact reverse order. With no
active tape, the same primitives run as plain (untracked) numpy math, which
is how target-network values and other constants are produced.

Everything is 64-bit and single-threaded per tape; tensors are never mutated
after creation except for gradient accumulation.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "constant",
    "matmul",
    "add",
    "sub",
    "mul",
    "abs_",
    "sigmoid",
    "tanh_",
    "relu",
    "exp_",
    "log_",
    "scale",
    "clip_",
    "sum_",
    "mean_",
    "max_over_axis",
    "argmax_over_axis",
    "softmax_rows",
    "elementwise",
    "reduce_",
    "linear",
    "layer_norm",
    "embedding",
    "concat",
    "split",
    "reshape",
    "swapaxes",
    "take_rows",
    "take_timestep",
    "bce_with_logits",
]


class Tensor:
    """A dense float64 array plus an optionally accumulated gradient."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


class Tape:
    """Ordered record of executed primitives.

    backward() walks the records in exact reverse order of execution and
    accumulates gradients into every requires_grad tensor reachable from
    the loss. Leaves never touched by the walk keep grad None.
    """

    def __init__(self):
        self.records: list[tuple[Tensor, object]] = []

    def __enter__(self) -> "Tape":
        _STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        popped = _STACK.pop()
        assert popped is self
        return False

    def __len__(self) -> int:
        return len(self.records)

    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        if not loss.requires_grad:
            raise ValueError("loss does not require grad (was it computed on this tape?)")
        loss.grad = np.ones_like(loss.data)
        for out, backward_fn in reversed(self.records):
            if out.grad is not None:
                backward_fn(out.grad)


_STACK: list[Tape] = []


def _tracing() -> bool:
    return bool(_STACK)


def _emit(out: Tensor, backward_fn) -> None:
    _STACK[-1].records.append((out, backward_fn))


def _acc(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _result(data: np.ndarray, *parents: Tensor) -> Tensor:
    rg = _tracing() and any(p.requires_grad for p in parents)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = rg
    out.grad = None
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum g down to `shape` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    an, bn = a.data, b.data
    if an.ndim < 2 or bn.ndim < 2 or an.shape[-1] != bn.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {an.shape} x {bn.shape}")
    try:
        data = np.matmul(an, bn)
    except ValueError as err:
        raise ValueError(f"matmul shape mismatch: {an.shape} x {bn.shape}") from err
    out = _result(data, a, b)
    if out.requires_grad:

        def bw(g):
            if a.requires_grad:
                _acc(a, _unbroadcast(np.matmul(g, np.swapaxes(bn, -1, -2)), an.shape))
            if b.requires_grad:
                _acc(b, _unbroadcast(np.matmul(np.swapaxes(an, -1, -2), g), bn.shape))

        _emit(out, bw)
    return out


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b, with b broadcast over every leading axis of x."""
    xn, wn, bn = x.data, w.data, b.data
    if xn.shape[-1] != wn.shape[0] or bn.shape != (wn.shape[1],):
        raise ValueError(f"linear shape mismatch: x{xn.shape} w{wn.shape} b{bn.shape}")
    out = _result(xn @ wn + bn, x, w, b)
    if out.requires_grad:

        def bw(g):
            g2 = g.reshape(-1, wn.shape[1])
            if x.requires_grad:
                _acc(x, (g @ wn.T).reshape(xn.shape))
            if w.requires_grad:
                _acc(w, xn.reshape(-1, wn.shape[0]).T @ g2)
            if b.requires_grad:
                _acc(b, g2.sum(axis=0))

        _emit(out, bw)
    return out


# ---------------------------------------------------------------------------
# elementwise primitives (binary ops demand identical shapes)


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"{op}: operand shapes differ: {a.data.shape} vs {b.data.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("add", a, b)
    out = _result(a.data + b.data, a, b)
    if out.requires_grad:

        def bw(g):
            _acc(a, g)
            _acc(b, g)

        _emit(out, bw)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("sub", a, b)
    out = _result(a.data - b.data, a, b)
    if out.requires_grad:

        def bw(g):
            _acc(a, g)
            _acc(b, -g)

        _emit(out, bw)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("mul", a, b)
    out = _result(a.data * b.data, a, b)
    if out.requires_grad:

        def bw(g):
            _acc(a, g * b.data)
            _acc(b, g * a.data)

        _emit(out, bw)
    return out


def abs_(x: Tensor) -> Tensor:
    # subgradient at exactly 0 is 0 (sign(0) == 0); identical inputs in a
    # siamese difference therefore contribute no gradient at all
    out = _result(np.abs(x.data), x)
    if out.requires_grad:
        sgn = np.sign(x.data)
        _emit(out, lambda g: _acc(x, g * sgn))
    return out


def sigmoid(x: Tensor) -> Tensor:
    xn = x.data
    data = np.empty_like(xn)
    pos = xn >= 0
    data[pos] = 1.0 / (1.0 + np.exp(-xn[pos]))
    ex = np.exp(xn[~pos])
    data[~pos] = ex / (1.0 + ex)
    out = _result(data, x)
    if out.requires_grad:
        _emit(out, lambda g: _acc(x, g * data * (1.0 - data)))
    return out


def tanh_(x: Tensor) -> Tensor:
    data = np.tanh(x.data)
    out = _result(data, x)
    if out.requires_grad:
        _emit(out, lambda g: _acc(x, g * (1.0 - data * data)))
    return out


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)
    out = _result(data, x)
    if out.requires_grad:
        mask = x.data > 0.0
        _emit(out, lambda g: _acc(x, g * mask))
    return out


def exp_(x: Tensor) -> Tensor:
    data = np.exp(x.data)
    out = _result(data, x)
    if out.requires_grad:
        _emit(out, lambda g: _acc(x, g * data))
    return out


def log_(x: Tensor) -> Tensor:
    out = _result(np.log(x.data), x)
    if out.requires_grad:
        _emit(out, lambda g: _acc(x, g / x.data))
    return out


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)
    out = _result(x.data * c, x)
    if out.requires_grad:
        _emit(out, lambda g: _acc(x, g * c))
    return out


def clip_(x: Tensor, lo: float, hi: float) -> Tensor:
    data = np.clip(x.data, lo, hi)
    out = _result(data, x)
    if out.requires_grad:
        mask = (x.data > lo) & (x.data < hi)
        _emit(out, lambda g: _acc(x, g * mask))
    return out


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "abs": abs_,
    "sigmoid": sigmoid,
    "tanh": tanh_,
    "relu": relu,
    "exp": exp_,
}


def elementwise(op: str, *inputs: Tensor) -> Tensor:
    """Dispatch by name over the pointwise primitive set."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None
    return fn(*inputs)


# ---------------------------------------------------------------------------
# reductions


def _check_axis(x: Tensor, axis: int) -> None:
    if not (0 <= axis < x.data.ndim):
        raise ValueError(f"axis {axis} out of range for rank {x.data.ndim}")
    if x.data.shape[axis] == 0:
        raise ValueError(f"cannot reduce over empty axis {axis} of shape {x.data.shape}")


def sum_(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    if axis is not None:
        _check_axis(x, axis)
    out = _result(x.data.sum(axis=axis, keepdims=keepdims), x)
    if out.requires_grad:

        def bw(g):
            if axis is None:
                _acc(x, np.broadcast_to(g, x.data.shape).copy())
            else:
                ge = g if keepdims else np.expand_dims(g, axis)
                _acc(x, np.broadcast_to(ge, x.data.shape).copy())

        _emit(out, bw)
    return out


def mean_(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    if axis is not None:
        _check_axis(x, axis)
    n = x.data.size if axis is None else x.data.shape[axis]
    out = _result(x.data.mean(axis=axis, keepdims=keepdims), x)
    if out.requires_grad:

        def bw(g):
            if axis is None:
                _acc(x, np.broadcast_to(g / n, x.data.shape).copy())
            else:
                ge = g if keepdims else np.expand_dims(g, axis)
                _acc(x, np.broadcast_to(ge / n, x.data.shape).copy())

        _emit(out, bw)
    return out


def max_over_axis(x: Tensor, axis: int) -> Tensor:
    """Max reduction; the backward routes gradient only to the first maximal
    element along the axis (ties break toward the lowest index)."""
    _check_axis(x, axis)
    idx = np.argmax(x.data, axis=axis)
    data = np.take_along_axis(x.data, np.expand_dims(idx, axis), axis=axis).squeeze(axis)
    out = _result(data, x)
    if out.requires_grad:

        def bw(g):
            buf = np.zeros_like(x.data)
            np.put_along_axis(
                buf, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis
            )
            _acc(x, buf)

        _emit(out, bw)
    return out


def argmax_over_axis(x: Tensor, axis: int) -> np.ndarray:
    """Index of the first maximal element along axis (not differentiable)."""
    _check_axis(x, axis)
    return np.argmax(x.data, axis=axis)


_REDUCE = {"sum": sum_, "mean": mean_, "max_over_axis": max_over_axis, "argmax_over_axis": argmax_over_axis}


def reduce_(op: str, x: Tensor, axis: int | None = None):
    try:
        fn = _REDUCE[op]
    except KeyError:
        raise ValueError(f"unknown reduce op {op!r}") from None
    if op in ("max_over_axis", "argmax_over_axis"):
        if axis is None:
            raise ValueError(f"{op} requires an axis")
        return fn(x, axis)
    return fn(x, axis=axis)


def softmax_rows(x: Tensor) -> Tensor:
    """Row softmax over the last axis, computed with max subtraction.

    Tolerates -inf entries (masked attention scores) as long as every row
    keeps at least one finite entry; exp(-inf) contributes an exact zero.
    """
    xn = x.data
    shifted = xn - xn.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=-1, keepdims=True)
    out = _result(data, x)
    if out.requires_grad:

        def bw(g):
            gy = g * data
            _acc(x, gy - data * gy.sum(axis=-1, keepdims=True))

        _emit(out, bw)
    return out


# ---------------------------------------------------------------------------
# fused / structural ops


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    xn = x.data
    d = xn.shape[-1]
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise ValueError(f"layer_norm affine shape mismatch: {gain.data.shape}, {bias.data.shape} vs ({d},)")
    mu = xn.mean(axis=-1, keepdims=True)
    xc = xn - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = _result(xhat * gain.data + bias.data, x, gain, bias)
    if out.requires_grad:

        def bw(g):
            if gain.requires_grad:
                _acc(gain, (g * xhat).reshape(-1, d).sum(axis=0))
            if bias.requires_grad:
                _acc(bias, g.reshape(-1, d).sum(axis=0))
            if x.requires_grad:
                gxh = g * gain.data
                term = gxh - gxh.mean(axis=-1, keepdims=True) - xhat * (gxh * xhat).mean(axis=-1, keepdims=True)
                _acc(x, term * inv)

        _emit(out, bw)
    return out


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather from an embedding table; backward scatter-adds."""
    ids = np.asarray(ids, dtype=np.int64)
    out = _result(table.data[ids], table)
    if out.requires_grad:

        def bw(g):
            buf = np.zeros_like(table.data)
            np.add.at(buf, ids, g)
            _acc(table, buf)

        _emit(out, bw)
    return out


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    data = np.concatenate([t.data for t in tensors], axis=axis)
    out = _result(data, *tensors)
    if out.requires_grad:
        sizes = [t.data.shape[axis] for t in tensors]
        offsets = np.cumsum([0] + sizes)

        def bw(g):
            for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                _acc(t, g[tuple(sl)])

        _emit(out, bw)
    return out


def split(x: Tensor, parts: int, axis: int) -> list[Tensor]:
    if x.data.shape[axis] % parts != 0:
        raise ValueError(f"cannot split extent {x.data.shape[axis]} into {parts} equal parts")
    chunks = np.split(x.data, parts, axis=axis)
    outs = [_result(c, x) for c in chunks]
    if outs[0].requires_grad:
        step = x.data.shape[axis] // parts
        for i, o in enumerate(outs):

            def bw(g, i=i):
                buf = np.zeros_like(x.data)
                sl = [slice(None)] * buf.ndim
                sl[axis] = slice(i * step, (i + 1) * step)
                buf[tuple(sl)] = g
                _acc(x, buf)

            _emit(o, bw)
    return outs


def reshape(x: Tensor, shape) -> Tensor:
    out = _result(x.data.reshape(shape), x)
    if out.requires_grad:
        _emit(out, lambda g: _acc(x, g.reshape(x.data.shape)))
    return out


def swapaxes(x: Tensor, a: int, b: int) -> Tensor:
    out = _result(np.swapaxes(x.data, a, b), x)
    if out.requires_grad:
        _emit(out, lambda g: _acc(x, np.swapaxes(g, a, b)))
    return out


def take_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows along axis 0; backward scatter-adds (indices may repeat)."""
    idx = np.asarray(idx, dtype=np.int64)
    out = _result(x.data[idx], x)
    if out.requires_grad:

        def bw(g):
            buf = np.zeros_like(x.data)
            np.add.at(buf, idx, g)
            _acc(x, buf)

        _emit(out, bw)
    return out


def take_timestep(x: Tensor, t: int) -> Tensor:
    """Select step t from a (batch, time, features) tensor."""
    out = _result(x.data[:, t], x)
    if out.requires_grad:

        def bw(g):
            buf = np.zeros_like(x.data)
            buf[:, t] = g
            _acc(x, buf)

        _emit(out, bw)
    return out


def bce_with_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross entropy straight from logits.

    Numerically stable for any logit magnitude, unlike the probability-space
    form, and its gradient sigmoid(z) - y never saturates to an exact zero on
    confidently wrong predictions.
    """
    z = logits.data
    y = np.asarray(targets, dtype=np.float64)
    if z.shape != y.shape:
        raise ValueError(f"bce_with_logits: shapes differ: {z.shape} vs {y.shape}")
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    out = _result(np.asarray(per.mean()), logits)
    if out.requires_grad:
        p = np.empty_like(z)
        pos = z >= 0
        p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        p[~pos] = ez / (1.0 + ez)
        n = max(z.size, 1)
        _emit(out, lambda g: _acc(logits, g * (p - y) / n))
    return out
