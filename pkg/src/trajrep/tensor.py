"""Dense float64 tensors with reverse-mode automatic differentiation.

Define-by-run: every op builds a node holding its parents and a closure
that routes the upstream gradient to them. backward() on a scalar loss
walks the graph once in reverse topological order. numpy supplies the
array arithmetic; this module supplies the bookkeeping and the exact
backward rules, which the tests verify against central finite
differences op by op.

Gradients only flow where they are needed: a node records parents only
if grad mode is on and some parent requires grad, so inference and
finite-difference probes build no graph at all (wrap them in no_grad()
for the latter).
"""
from __future__ import annotations

import numpy as np

_GRAD_ENABLED = True


class no_grad:
    """Context manager that suspends graph construction."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _node(data: np.ndarray, parents: tuple, backward_fn) -> Tensor:
    """Wrap an op result, keeping the graph only when it can matter."""
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out = Tensor(data, requires_grad=True)
        out._parents = parents
        out._backward = backward_fn
        return out
    return Tensor(data)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        # copy: g may be a view (transpose/split backward) or shared with
        # a sibling accumulation, and broadcast grads need densifying
        t.grad = np.array(np.broadcast_to(g, t.data.shape))
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the parent's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def backward(loss: Tensor) -> None:
    """Populate grads of every reachable requires_grad tensor."""
    if loss.data.size != 1:
        raise ValueError("backward needs a scalar loss")
    # iterative post-order topological sort; graphs reach 1e5 nodes and
    # recursion would blow the stack
    topo: list[Tensor] = []
    state: dict[int, int] = {}
    stack = [loss]
    while stack:
        t = stack[-1]
        k = id(t)
        if state.get(k, 0) == 0:
            state[k] = 1
            for p in t._parents:
                if p.requires_grad and state.get(id(p), 0) == 0:
                    stack.append(p)
        else:
            stack.pop()
            if state[k] == 1:
                state[k] = 2
                topo.append(t)
    loss.grad = np.ones_like(loss.data)
    for t in reversed(topo):
        if t._backward is not None and t.grad is not None:
            t._backward(t.grad)
        if t._parents:
            # interior node: its grad and graph links are fully consumed
            # once its backward has run (reverse topo order guarantees all
            # consumers ran before it).  Dropping them immediately caps the
            # peak footprint of large batched graphs at roughly the forward
            # activations instead of activations plus one grad per node.
            t.grad = None
            t._parents = ()
            t._backward = None


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------- ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-d tensors")
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(
            f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}"
        )
    out_data = a.data @ b.data

    def bw(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _node(out_data, (a, b), bw)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def bw(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _node(out_data, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def bw(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(out_data, (a, b), bw)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def bw(g):
        _accum(a, g * c)

    return _node(a.data * c, (a,), bw)


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, neg(b))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bw(g):
        _accum(a, g * mask)

    return _node(a.data * mask, (a,), bw)


def transpose(a: Tensor) -> Tensor:
    def bw(g):
        _accum(a, g.T)

    return _node(a.data.T, (a,), bw)


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(int(s) for s in shape)

    def bw(g):
        _accum(a, np.reshape(g, a.data.shape))

    return _node(np.reshape(a.data, shape), (a,), bw)


def transpose_axes(a: Tensor, axes) -> Tensor:
    axes = tuple(int(i) for i in axes)
    if sorted(axes) != list(range(a.data.ndim)):
        raise ValueError(f"axes {axes} is not a permutation of {a.data.ndim} dims")
    inverse = tuple(int(i) for i in np.argsort(axes))

    def bw(g):
        _accum(a, np.transpose(g, inverse))

    return _node(np.transpose(a.data, axes), (a,), bw)


def bmm(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product: (b, n, k) @ (b, k, m) -> (b, n, m)."""
    if a.data.ndim != 3 or b.data.ndim != 3:
        raise ValueError("bmm expects 3-d tensors")
    if a.data.shape[0] != b.data.shape[0] or a.data.shape[2] != b.data.shape[1]:
        raise ValueError(f"bmm shape mismatch: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data

    def bw(g):
        _accum(a, g @ b.data.transpose(0, 2, 1))
        _accum(b, a.data.transpose(0, 2, 1) @ g)

    return _node(out_data, (a, b), bw)


def mean_axis1(a: Tensor) -> Tensor:
    """Per-item row means: (b, n, d) -> (b, d)."""
    if a.data.ndim != 3:
        raise ValueError("mean_axis1 expects a 3-d tensor")
    n = a.data.shape[1]

    def bw(g):
        _accum(a, np.broadcast_to(g[:, None, :] / n, a.data.shape))

    return _node(a.data.mean(axis=1), (a,), bw)


def tile_rows(a: Tensor, reps: int) -> Tensor:
    """Repeat a single row: (1, d) -> (reps, d)."""
    if a.data.ndim != 2 or a.data.shape[0] != 1:
        raise ValueError("tile_rows expects a single-row 2-d tensor")
    if reps < 1:
        raise ValueError("reps must be positive")

    def bw(g):
        _accum(a, g.sum(axis=0, keepdims=True))

    return _node(np.repeat(a.data, reps, axis=0), (a,), bw)


def split_heads(x: Tensor, batch: int, rows: int, n_heads: int,
                head_dim: int) -> Tensor:
    """(batch*rows, n_heads*head_dim) -> (batch*n_heads, rows, head_dim).

    Reorders a flat head-concatenated projection into per-head batch
    items so attention can run as one batched matmul per stage.
    """
    x = reshape(x, (batch, rows, n_heads, head_dim))
    x = transpose_axes(x, (0, 2, 1, 3))
    return reshape(x, (batch * n_heads, rows, head_dim))


def merge_heads(x: Tensor, batch: int, rows: int, n_heads: int,
                head_dim: int) -> Tensor:
    """Inverse of split_heads: back to (batch*rows, n_heads*head_dim)."""
    x = reshape(x, (batch, n_heads, rows, head_dim))
    x = transpose_axes(x, (0, 2, 1, 3))
    return reshape(x, (batch * rows, n_heads * head_dim))


def _concat(tensors, axis: int) -> Tensor:
    ts = list(tensors)
    if not ts:
        raise ValueError("concat of an empty list")
    out_data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.data.shape[axis] for t in ts]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(ts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _accum(t, g[tuple(sl)])

    return _node(out_data, tuple(ts), bw)


def concat_rows(tensors) -> Tensor:
    return _concat(tensors, axis=0)


def concat_cols(tensors) -> Tensor:
    return _concat(tensors, axis=1)


def sum_all(a: Tensor) -> Tensor:
    def bw(g):
        _accum(a, np.full_like(a.data, float(g)))

    return _node(np.asarray(a.data.sum()), (a,), bw)


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size

    def bw(g):
        _accum(a, np.full_like(a.data, float(g) / n))

    return _node(np.asarray(a.data.mean()), (a,), bw)


def mean_rows(a: Tensor) -> Tensor:
    """Column means: (p, q) -> (1, q)."""
    p = a.data.shape[0]

    def bw(g):
        _accum(a, np.broadcast_to(g / p, a.data.shape).copy())

    return _node(a.data.mean(axis=0, keepdims=True), (a,), bw)


def sum_cols(a: Tensor) -> Tensor:
    """Row sums: (p, q) -> (p, 1)."""

    def bw(g):
        _accum(a, np.broadcast_to(g, a.data.shape).copy())

    return _node(a.data.sum(axis=1, keepdims=True), (a,), bw)


def log(a: Tensor) -> Tensor:
    def bw(g):
        _accum(a, g / a.data)

    return _node(np.log(a.data), (a,), bw)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def bw(g):
        _accum(a, g * out_data)

    return _node(out_data, (a,), bw)


def softmax_rows(a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def bw(g):
        dot = (g * y).sum(axis=1, keepdims=True)
        _accum(a, y * (g - dot))

    return _node(y, (a,), bw)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Row-wise normalization: (x - mean) / sqrt(var + eps) * gain + bias.

    gain and bias are row vectors (1, q).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    q = x.data.shape[1]
    mu = x.data.mean(axis=1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out_data = xhat * gain.data + bias.data

    def bw(g):
        _accum(gain, _unbroadcast(g * xhat, gain.data.shape))
        _accum(bias, _unbroadcast(g, bias.data.shape))
        if x.requires_grad:
            dxhat = g * gain.data
            s1 = dxhat.sum(axis=1, keepdims=True)
            s2 = (dxhat * xhat).sum(axis=1, keepdims=True)
            _accum(x, (inv / q) * (q * dxhat - s1 - xhat * s2))

    return _node(out_data, (x, gain, bias), bw)


def embedding_lookup(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ValueError("ids must be a 1-d sequence")
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise ValueError(
            f"token id out of range [0, {table.data.shape[0]}): "
            f"{int(ids.min())}..{int(ids.max())}"
        )
    out_data = table.data[ids]

    def bw(g):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids, g)

    return _node(out_data, (table,), bw)


def dropout(x: Tensor, rate: float, rng, training: bool) -> Tensor:
    """Inverted dropout; the identity when not training or rate is 0."""
    if not (0.0 <= rate < 1.0):
        raise ValueError("dropout rate must be in [0, 1)")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)

    def bw(g):
        _accum(x, g * keep)

    return _node(x.data * keep, (x,), bw)


def normalize_rows(x: Tensor, eps: float = 1e-12) -> Tensor:
    """Scale each row to unit L2 norm (rows below eps stay tiny)."""
    n = np.linalg.norm(x.data, axis=1, keepdims=True)
    n = np.maximum(n, eps)
    y = x.data / n

    def bw(g):
        dot = (g * y).sum(axis=1, keepdims=True)
        _accum(x, (g - y * dot) / n)

    return _node(y, (x,), bw)


def log_sum_exp_rows(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Row-wise log(sum(mask * exp(x))) -> (p, 1), max-shifted.

    mask is a constant 0/1 array; None means all ones. Each row must
    keep at least one unmasked entry.
    """
    if mask is None:
        mask = np.ones_like(x.data)
    else:
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != x.data.shape:
            raise ValueError("mask shape must match input")
        if (mask.sum(axis=1) == 0).any():
            raise ValueError("every row needs at least one unmasked entry")
    neg_inf = np.where(mask > 0, x.data, -np.inf)
    mx = neg_inf.max(axis=1, keepdims=True)
    s = (mask * np.exp(x.data - mx)).sum(axis=1, keepdims=True)
    out_data = np.log(s) + mx

    def bw(g):
        # d lse / dx = masked softmax; the max shift cancels exactly
        _accum(x, g * mask * np.exp(x.data - out_data))

    return _node(out_data, (x,), bw)
