"""Dense float64 tensors with reverse-mode differentiation.

A ``Tensor`` is both a value and a node of the compute graph: non-leaf
tensors remember the op that produced them, their parents and a backward
rule mapping the upstream gradient to one gradient per parent. Values are
read-only after construction; only ``grad`` buffers of leaves change.
"""

from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from src.errors import ContractError, DimensionError, DomainError, NumericError

DTYPE = np.float64

_checked = True

GradFn = Callable[[np.ndarray], tuple]
ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]


def set_checked(flag: bool) -> None:
    """Toggle rejection of non-finite values at tensor construction."""
    global _checked
    _checked = bool(flag)


def is_checked() -> bool:
    return _checked


class Tensor:
    def __init__(
        self,
        values,
        requires_grad: bool = False,
        *,
        op: str = "leaf",
        parents: tuple = (),
        grad_fn: Optional[GradFn] = None,
    ):
        data = np.array(values, dtype=DTYPE)
        if _checked:
            if any(extent < 1 for extent in data.shape):
                raise DimensionError(f"Tensor extents must be positive, got shape {data.shape}")
            if not np.all(np.isfinite(data)):
                raise NumericError(f"Non-finite values produced by op '{op}'")
        data.flags.writeable = False
        self.values = data
        self.op = op
        self.parents = parents
        self.grad_fn = grad_fn
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def is_leaf(self) -> bool:
        return not self.parents

    def item(self) -> float:
        if self.values.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.values.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.values

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)


def as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(values, op: str, parents: Iterable[Tensor], grad_fn: GradFn) -> Tensor:
    parents = tuple(parents)
    if not any(p.requires_grad for p in parents):
        return Tensor(values, op=op)
    return Tensor(values, op=op, parents=parents, grad_fn=grad_fn)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


# ---------------------------------------------------------------- elementwise


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")
    return _node(
        a.values + b.values, "add", (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")
    return _node(
        a.values - b.values, "sub", (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")
    return _node(
        a.values * b.values, "mul", (a, b),
        lambda g: (_unbroadcast(g * b.values, a.shape), _unbroadcast(g * a.values, b.shape)),
    )


def relu(x: Tensor) -> Tensor:
    mask = x.values > 0
    return _node(np.where(mask, x.values, 0.0), "relu", (x,), lambda g: (g * mask,))


def absolute(x: Tensor) -> Tensor:
    sign = np.sign(x.values)
    return _node(np.abs(x.values), "abs", (x,), lambda g: (g * sign,))


def sigmoid(x: Tensor) -> Tensor:
    e = np.exp(-np.abs(x.values))
    out = np.where(x.values >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _node(out, "sigmoid", (x,), lambda g: (g * out * (1.0 - out),))


def log(x: Tensor) -> Tensor:
    if np.any(x.values <= 0):
        raise DomainError("log of a non-positive value; clamp first")
    return _node(np.log(x.values), "log", (x,), lambda g: (g / x.values,))


def sqrt(x: Tensor) -> Tensor:
    if np.any(x.values <= 0):
        raise DomainError("sqrt needs strictly positive inputs to stay differentiable")
    out = np.sqrt(x.values)
    return _node(out, "sqrt", (x,), lambda g: (g * 0.5 / out,))


def power(x: Tensor, exponent: float) -> Tensor:
    """Elementwise x**exponent for x > 0 (or any x when exponent is 0)."""
    if exponent == 0:
        return _node(np.ones_like(x.values), "power", (x,), lambda g: (np.zeros_like(g),))
    if np.any(x.values <= 0):
        raise DomainError("power needs positive bases for non-zero exponents")
    out = x.values ** exponent
    return _node(out, "power", (x,), lambda g: (g * exponent * x.values ** (exponent - 1.0),))


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clip to [lo, hi]; gradient passes only where the value was inside."""
    inside = (x.values >= lo) & (x.values <= hi)
    return _node(np.clip(x.values, lo, hi), "clamp", (x,), lambda g: (g * inside,))


# ----------------------------------------------------------------- structural


def affine(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """Position-wise affine map y = x @ W + b over the rows of ``x``."""
    if len(x.shape) != 2 or len(W.shape) != 2 or len(b.shape) != 1:
        raise DimensionError(
            f"affine expects x[n,d_in], W[d_in,d_out], b[d_out]; got {x.shape}, {W.shape}, {b.shape}"
        )
    if x.shape[1] != W.shape[0] or W.shape[1] != b.shape[0]:
        raise DimensionError(f"affine inner dimensions disagree: {x.shape} @ {W.shape} + {b.shape}")
    out = x.values @ W.values + b.values
    return _node(
        out, "affine", (x, W, b),
        lambda g: (g @ W.values.T, x.values.T @ g, g.sum(axis=0)),
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError(f"concat: {e}")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]
    return _node(out, "concat", tensors, lambda g: tuple(np.split(g, bounds, axis=axis)))


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.stack([t.values for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError(f"stack: {e}")
    count = len(tensors)
    return _node(
        out, "stack", tensors,
        lambda g: tuple(np.take(g, i, axis=axis) for i in range(count)),
    )


def gather(x: Tensor, index: np.ndarray) -> Tensor:
    """Select rows of ``x`` by integer index (repeats allowed)."""
    index = np.asarray(index, dtype=np.int64)

    def grad_fn(g):
        out = np.zeros_like(x.values)
        np.add.at(out, index, g)
        return (out,)

    return _node(x.values[index], "gather", (x,), grad_fn)


def columns(x: Tensor, start: int, stop: int) -> Tensor:
    """Slice columns [start, stop) of a rank-2 tensor."""
    if len(x.shape) != 2 or not 0 <= start < stop <= x.shape[1]:
        raise DimensionError(f"columns[{start}:{stop}] out of range for shape {x.shape}")

    def grad_fn(g):
        out = np.zeros_like(x.values)
        out[:, start:stop] = g
        return (out,)

    return _node(x.values[:, start:stop], "columns", (x,), grad_fn)


def total(x: Tensor, axis: Optional[int] = None) -> Tensor:
    """Sum over one axis, or over every element when ``axis`` is None."""
    if axis is None:
        return _node(x.values.sum(), "sum", (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),))
    axis = _normalize_axis(axis, x)
    return _node(
        x.values.sum(axis=axis), "sum", (x,),
        lambda g: (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),),
    )


def mean(x: Tensor) -> Tensor:
    count = x.values.size
    return _node(
        x.values.mean(), "mean", (x,),
        lambda g: (np.broadcast_to(g / count, x.shape).copy(),),
    )


def _normalize_axis(axis: int, x: Tensor) -> int:
    rank = len(x.shape)
    if not -rank <= axis < rank:
        raise DimensionError(f"axis {axis} out of range for rank {rank}")
    return axis % rank


def reduce(x: Tensor, axis: int, kind: str) -> Tensor:
    """Min, max or arithmetic mean along ``axis``; the axis is dropped.

    Min/max subgradients go to the first index attaining the extreme.
    """
    axis = _normalize_axis(axis, x)
    if x.shape[axis] < 1:
        raise DomainError("cannot reduce over an empty axis")
    if kind == "mean":
        extent = x.shape[axis]
        return _node(
            x.values.mean(axis=axis), "reduce_mean", (x,),
            lambda g: (np.broadcast_to(np.expand_dims(g, axis) / extent, x.shape).copy(),),
        )
    if kind not in ("min", "max"):
        raise ContractError(f"unknown reduction kind: {kind}")
    pick = np.argmin if kind == "min" else np.argmax
    idx = np.expand_dims(pick(x.values, axis=axis), axis)
    out = np.take_along_axis(x.values, idx, axis=axis).squeeze(axis)

    def grad_fn(g):
        grad = np.zeros_like(x.values)
        np.put_along_axis(grad, idx, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return _node(out, f"reduce_{kind}", (x,), grad_fn)


def segment_reduce(x: Tensor, starts: np.ndarray, kind: str) -> Tensor:
    """Reduce contiguous row segments of a rank-2 tensor.

    ``starts`` holds the first row of each segment in increasing order;
    every segment must be non-empty. Ties follow the ``reduce`` rule.
    """
    starts = np.asarray(starts, dtype=np.int64)
    rows = x.shape[0]
    if len(x.shape) != 2:
        raise DimensionError(f"segment_reduce expects a rank-2 tensor, got {x.shape}")
    if starts.size == 0 or starts[0] != 0 or np.any(np.diff(starts) < 1) or starts[-1] >= rows:
        raise DomainError("segment_reduce needs non-empty, increasing segments covering the rows")
    counts = np.diff(np.append(starts, rows))
    segment_of_row = np.repeat(np.arange(starts.size), counts)

    if kind == "mean":
        out = np.add.reduceat(x.values, starts, axis=0) / counts[:, None]
        return _node(
            out, "segment_mean", (x,),
            lambda g: ((g / counts[:, None])[segment_of_row],),
        )
    if kind not in ("min", "max"):
        raise ContractError(f"unknown reduction kind: {kind}")
    ufunc = np.minimum if kind == "min" else np.maximum
    out = ufunc.reduceat(x.values, starts, axis=0)
    row_index = np.broadcast_to(np.arange(rows)[:, None], x.shape)
    attaining = np.where(x.values == out[segment_of_row], row_index, rows)
    first = np.minimum.reduceat(attaining, starts, axis=0)
    cols = np.arange(x.shape[1])[None, :]

    def grad_fn(g):
        grad = np.zeros_like(x.values)
        grad[first, cols] = g
        return (grad,)

    return _node(out, f"segment_{kind}", (x,), grad_fn)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    axis = _normalize_axis(axis, x)
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def grad_fn(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _node(out, "softmax", (x,), grad_fn)


# ------------------------------------------------------------------- backward


def topological_order(root: Tensor) -> list[Tensor]:
    """Nodes reachable from ``root`` that need gradients, parents first."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack_: list[tuple[Tensor, bool]] = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack_.append((node, True))
        for parent in node.parents:
            if id(parent) not in visited:
                stack_.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``grad`` of every requires_grad leaf."""
    if loss.values.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
    for node in reversed(topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, parent_grad in zip(node.parents, node.grad_fn(g)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + parent_grad if key in grads else parent_grad
