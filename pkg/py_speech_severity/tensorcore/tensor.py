"""
Reverse-mode automatic differentiation over numpy arrays.

A Tensor holds float64 data, an optional accumulated gradient and, when it was
produced by a differentiable operation, its parent tensors plus a closure that
distributes an incoming gradient to them. Tensor.backward walks the graph in
reverse topological order.
"""

# Python imports
from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from typing import Any

import numpy as np

# Local imports
from ..exceptions import ShapeError

SeedLike = int | Sequence[int]


class Tensor:
    """
    Differentiable n-dimensional array.

    Attributes:
        data: float64 array (row-major)
        requires_grad: Whether gradients are accumulated for this tensor
        grad: Accumulated gradient (same shape as data) or None
        name: Optional parameter name

    Example:
        >>> x = Tensor([1.0, 2.0], requires_grad=True)
        >>> y = reduce_sum(x * x)
        >>> y.backward()
        >>> x.grad
        array([2., 4.])
    """

    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward")

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None) -> None:
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape."""
        return self.data.shape

    @property
    def ndim(self) -> int:
        """Number of dimensions."""
        return self.data.ndim

    @property
    def size(self) -> int:
        """Number of elements."""
        return int(self.data.size)

    def item(self) -> float:
        """Value of a single-element tensor."""
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        """Copy of the data."""
        return self.data.copy()

    def zero_grad(self) -> None:
        """Drop the accumulated gradient."""
        self.grad = None

    def accumulate(self, grad: np.ndarray) -> None:
        """Add a gradient contribution."""
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64, copy=True).reshape(self.data.shape)
        else:
            self.grad = self.grad + grad

    def backward(self, grad: np.ndarray | None = None) -> None:
        """
        Accumulate gradients of this tensor into every tensor it depends on.

        Args:
            grad: Cotangent with this tensor's shape; defaults to 1 for single-element tensors

        Raises:
            ShapeError: If no cotangent is given for a multi-element tensor, or shapes differ
        """
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() needs a cotangent for non-scalar tensors", str(self.shape))
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=np.float64)
            if seed.shape != self.data.shape:
                raise ShapeError("Cotangent shape mismatch", f"{seed.shape} vs {self.shape}")
        order = _topological_order(self)
        self.accumulate(seed)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return mul(other, self)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __neg__(self) -> Tensor:
        return scale(self, -1.0)


def as_tensor(value: Any) -> Tensor:
    """Wrap arrays and numbers as constant tensors; tensors pass through."""
    return value if isinstance(value, Tensor) else Tensor(value)


def make_result(
    data: np.ndarray,
    parents: Iterable[Tensor],
    backward: Callable[[np.ndarray], None],
) -> Tensor:
    """
    Create the output tensor of a differentiable operation.

    The graph edge is only recorded when some parent requires a gradient.
    """
    parents = tuple(parents)
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to an operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Any, b: Any) -> Tensor:
    """Elementwise a + b with broadcasting."""
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(unbroadcast(g, b.shape))

    return make_result(a.data + b.data, (a, b), backward)


def sub(a: Any, b: Any) -> Tensor:
    """Elementwise a - b with broadcasting."""
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(unbroadcast(-g, b.shape))

    return make_result(a.data - b.data, (a, b), backward)


def mul(a: Any, b: Any) -> Tensor:
    """Elementwise a * b with broadcasting."""
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate(unbroadcast(g * a.data, b.shape))

    return make_result(a.data * b.data, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a constant scalar."""

    def backward(g: np.ndarray) -> None:
        a.accumulate(g * factor)

    return make_result(a.data * factor, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product with numpy batching rules (operands of rank >= 2).

    Raises:
        ShapeError: If the inner dimensions differ
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul shape mismatch", f"{a.shape} @ {b.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape))
        if b.requires_grad:
            b.accumulate(unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape))

    return make_result(np.matmul(a.data, b.data), (a, b), backward)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Reshape (row-major)."""

    def backward(g: np.ndarray) -> None:
        a.accumulate(g.reshape(a.shape))

    return make_result(a.data.reshape(shape), (a,), backward)


def transpose(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    """Permute axes."""
    inverse = tuple(np.argsort(axes))

    def backward(g: np.ndarray) -> None:
        a.accumulate(np.transpose(g, inverse))

    return make_result(np.transpose(a.data, axes), (a,), backward)


def reduce_sum(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    """Sum over one axis or all elements."""

    def backward(g: np.ndarray) -> None:
        expanded = g if keepdims or axis is None else np.expand_dims(g, axis)
        a.accumulate(np.broadcast_to(expanded, a.shape))

    return make_result(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)


def reduce_mean(a: Tensor, axis: int | None = None) -> Tensor:
    """Mean over one axis or all elements."""
    count = a.size if axis is None else a.shape[axis]
    return scale(reduce_sum(a, axis=axis), 1.0 / count)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenate along an axis."""
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0, *sizes])

    def backward(g: np.ndarray) -> None:
        for t, start, stop in zip(tensors, bounds[:-1], bounds[1:], strict=True):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(int(start), int(stop))
                t.accumulate(g[tuple(index)])

    return make_result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def gather_rows(table: Tensor, indices: np.ndarray) -> Tensor:
    """Select rows of a 2-D table; gradients scatter-add back into the table."""
    idx = np.asarray(indices, dtype=np.int64)

    def backward(g: np.ndarray) -> None:
        grad = np.zeros_like(table.data)
        np.add.at(grad, idx, g)
        table.accumulate(grad)

    return make_result(table.data[idx], (table,), backward)


def detach(a: Tensor) -> Tensor:
    """Constant copy of a tensor (stop-gradient)."""
    return Tensor(a.data)


def straight_through(source: Tensor, values: np.ndarray) -> Tensor:
    """
    Output `values` in the forward pass; pass gradients to `source` unchanged.

    Raises:
        ShapeError: If values do not have the source's shape
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != source.shape:
        raise ShapeError("Straight-through values must match the source shape", f"{values.shape} vs {source.shape}")

    def backward(g: np.ndarray) -> None:
        source.accumulate(g)

    return make_result(values.copy(), (source,), backward)


def seed_rng(seed: SeedLike) -> np.random.Generator:
    """Generator from an int or a sequence of ints (SeedSequence entropy)."""
    return np.random.default_rng(list(seed) if isinstance(seed, Sequence) else seed)
