"""A small tape-based reverse-mode differentiation engine over numpy arrays.

Only the operations needed by the PINN and the in-context transformer are
provided.  Every op records a closure that pushes the output gradient back to
its inputs; ``Tensor.backward`` replays the tape in reverse topological order.
All arithmetic is float64.
"""

from __future__ import annotations

import math
from typing import Callable, Mapping

import numpy as np


class NonFiniteLossError(FloatingPointError):
    pass


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")
    __array_priority__ = 100.0

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    # graph construction -------------------------------------------------
    @staticmethod
    def _make(data, parents, backward):
        needs = any(p.requires_grad for p in parents)
        if not needs:
            return Tensor(data)
        return Tensor(data, True, parents, backward)

    def _accumulate(self, g):
        # never in place: ``g`` may be shared with another node
        self.grad = g if self.grad is None else self.grad + g

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar tensor")
            grad = np.ones_like(self.data)
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def back(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g, b.shape))
        return Tensor._make(a.data + b.data, (a, b), back)

    __radd__ = __add__

    def __neg__(self):
        a = self
        return Tensor._make(-a.data, (a,), lambda g: a._accumulate(-g))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def back(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g * a.data, b.shape))
        return Tensor._make(a.data * b.data, (a, b), back)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        a, b = self, other
        out = a.data / b.data

        def back(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g / b.data, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(-g * out / b.data, b.shape))
        return Tensor._make(out, (a, b), back)

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, exponent: float):
        a = self
        p = float(exponent)
        return Tensor._make(a.data ** p, (a,),
                            lambda g: a._accumulate(g * p * a.data ** (p - 1.0)))

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def back(g):
            if a.requires_grad:
                a._accumulate(g @ np.swapaxes(b.data, -1, -2))
            if b.requires_grad:
                b._accumulate(np.swapaxes(a.data, -1, -2) @ g)
        return Tensor._make(a.data @ b.data, (a, b), back)

    def __getitem__(self, index):
        a = self
        basic = isinstance(index, slice) or (
            isinstance(index, tuple) and all(isinstance(i, (slice, int)) for i in index))

        def back(g):
            full = np.zeros_like(a.data)
            if basic:
                full[index] = g
            else:
                np.add.at(full, index, g)
            a._accumulate(full)
        return Tensor._make(a.data[index], (a,), back)

    # shape ------------------------------------------------------------------
    @property
    def T(self):
        a = self
        return Tensor._make(a.data.T, (a,), lambda g: a._accumulate(g.T))

    def transpose(self, axes):
        a = self
        inverse = np.argsort(axes)
        return Tensor._make(a.data.transpose(axes), (a,),
                            lambda g: a._accumulate(g.transpose(inverse)))

    def reshape(self, *shape):
        a = self
        return Tensor._make(a.data.reshape(*shape), (a,),
                            lambda g: a._accumulate(g.reshape(a.shape)))

    def sum(self, axis=None, keepdims=False):
        a = self

        def back(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(g, a.shape))
        return Tensor._make(a.data.sum(axis=axis, keepdims=keepdims), (a,), back)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    # elementwise functions ---------------------------------------------------
    def tanh(self):
        a = self
        out = np.tanh(a.data)
        return Tensor._make(out, (a,), lambda g: a._accumulate(g * (1.0 - out * out)))

    def exp(self):
        a = self
        out = np.exp(a.data)
        return Tensor._make(out, (a,), lambda g: a._accumulate(g * out))

    def gelu(self):
        a = self
        x = a.data
        c = math.sqrt(2.0 / math.pi)
        x2 = x * x
        th = np.tanh(c * x * (1.0 + 0.044715 * x2))
        out = 0.5 * x * (1.0 + th)

        def back(g):
            dinner = c * (1.0 + 3 * 0.044715 * x2)
            a._accumulate(g * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner))
        return Tensor._make(out, (a,), back)

    def square(self):
        a = self
        return Tensor._make(a.data * a.data, (a,), lambda g: a._accumulate(2.0 * g * a.data))


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            if t.requires_grad:
                t._accumulate(piece)
    return Tensor._make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), back)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        x._accumulate(out * (g - (g * out).sum(axis=axis, keepdims=True)))
    return Tensor._make(out, (x,), back)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then scale and shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def back(g):
        if gain.requires_grad:
            gain._accumulate(_unbroadcast(g * xhat, gain.shape))
        if bias.requires_grad:
            bias._accumulate(_unbroadcast(g, bias.shape))
        if x.requires_grad:
            gx = g * gain.data
            n = x.data.shape[-1]
            x._accumulate(inv / n * (n * gx - gx.sum(axis=-1, keepdims=True)
                                     - xhat * (gx * xhat).sum(axis=-1, keepdims=True)))
    return Tensor._make(out, (x, gain, bias), back)


def param_gradient(loss_evaluator: Callable[[Mapping[str, Tensor]], Tensor],
                   params: Mapping[str, np.ndarray], batch=None) -> tuple[float, dict[str, np.ndarray]]:
    """Value and gradient of a scalar loss with respect to every entry of ``params``.

    ``loss_evaluator`` receives the parameters wrapped as differentiable
    tensors and must return a scalar ``Tensor``.
    """
    leaves = {name: Tensor(value, requires_grad=True) for name, value in params.items()}
    loss = loss_evaluator(leaves)
    value = float(loss.data)
    if not math.isfinite(value):
        raise NonFiniteLossError(f"non-finite loss {value} on batch {batch!r}")
    loss.backward()
    grads = {name: (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data))
             for name, leaf in leaves.items()}
    return value, grads


def finite_difference(loss: Callable[[Mapping[str, np.ndarray]], float], params: Mapping[str, np.ndarray],
                      name: str, index: tuple, h: float = 1e-6) -> float:
    """Central difference of ``loss`` along one scalar parameter."""
    shifted = {k: np.array(v, copy=True) for k, v in params.items()}
    base = shifted[name][index]
    shifted[name][index] = base + h
    up = loss(shifted)
    shifted[name][index] = base - h
    down = loss(shifted)
    return (up - down) / (2.0 * h)
