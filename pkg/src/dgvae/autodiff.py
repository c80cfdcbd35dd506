"""A small reverse-mode autodiff tape over numpy arrays.

Every primitive accepts ``Var`` handles or plain arrays. Plain arrays are
constants; if no operand is a ``Var`` the primitive just returns the numpy
result, so model code runs unchanged with or without a tape.

    tape = Tape()
    w = tape.leaf(np.ones((3, 2)))
    loss = sum_all(square(matmul(x, w)))
    grads = tape.gradient(loss, [w])
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp


class _Node:
    __slots__ = ("value", "parents", "vjp")

    def __init__(self, value, parents, vjp):
        self.value = value
        self.parents = parents
        self.vjp = vjp


class Var:
    __slots__ = ("tape", "index")

    def __init__(self, tape: "Tape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.index].value

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(#{self.index}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    @property
    def T(self):
        return transpose(self)


class Tape:
    """Append-only record of primitive evaluations.

    Nodes are appended in evaluation order, so that order is topological and
    the backward sweep walks it in reverse exactly once.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def leaf(self, value) -> Var:
        self.nodes.append(_Node(np.array(value, dtype=float), (), None))
        return Var(self, len(self.nodes) - 1)

    def _record(self, value, parents, vjp) -> Var:
        self.nodes.append(_Node(value, parents, vjp))
        return Var(self, len(self.nodes) - 1)

    def backward(self, output: Var, seed=None) -> list[Optional[np.ndarray]]:
        """Adjoints of ``output`` for every node (``None`` where unreachable)."""
        if output.tape is not self:
            raise ValueError("output belongs to a different tape")
        adj: list[Optional[np.ndarray]] = [None] * len(self.nodes)
        out_val = self.nodes[output.index].value
        adj[output.index] = np.ones_like(out_val) if seed is None else np.asarray(seed, dtype=float)
        for i in range(output.index, -1, -1):
            g = adj[i]
            node = self.nodes[i]
            if g is None or node.vjp is None:
                continue
            for parent, pg in zip(node.parents, node.vjp(g)):
                if parent is None or pg is None:
                    continue
                adj[parent] = pg if adj[parent] is None else adj[parent] + pg
        return adj

    def gradient(self, output: Var, wrt: Sequence[Var]) -> list[np.ndarray]:
        adj = self.backward(output)
        return [np.zeros_like(v.value) if adj[v.index] is None else adj[v.index] for v in wrt]


def _val(x):
    return x.value if isinstance(x, Var) else x


def _tape_of(*xs) -> Optional[Tape]:
    tape = None
    for x in xs:
        if isinstance(x, Var):
            if tape is not None and x.tape is not tape:
                raise ValueError("operands live on different tapes")
            tape = x.tape
    return tape


def _idx(x):
    return x.index if isinstance(x, Var) else None


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _op(fn: Callable, vjp_factory: Callable, *args):
    """Evaluate ``fn`` on values; record a node if any argument is a ``Var``."""
    vals = [_val(a) for a in args]
    out = fn(*vals)
    tape = _tape_of(*args)
    if tape is None:
        return out
    out = np.asarray(out, dtype=float)
    return tape._record(out, tuple(_idx(a) for a in args), vjp_factory(out, *vals))


# -- elementwise binary --------------------------------------------------

def add(a, b):
    return _op(np.add, lambda out, x, y: lambda g: (_unbroadcast(g, np.shape(x)), _unbroadcast(g, np.shape(y))), a, b)


def sub(a, b):
    return _op(np.subtract, lambda out, x, y: lambda g: (_unbroadcast(g, np.shape(x)), -_unbroadcast(g, np.shape(y))), a, b)


def mul(a, b):
    return _op(
        np.multiply,
        lambda out, x, y: lambda g: (_unbroadcast(g * y, np.shape(x)), _unbroadcast(g * x, np.shape(y))),
        a, b,
    )


def div(a, b):
    return _op(
        np.divide,
        lambda out, x, y: lambda g: (_unbroadcast(g / y, np.shape(x)), _unbroadcast(-g * x / (y * y), np.shape(y))),
        a, b,
    )


def matmul(a, b):
    """Matrix product; a scipy sparse constant is allowed as the left operand."""
    def vjp(out, x, y):
        def back(g):
            gx = gy = None
            if isinstance(a, Var):
                gx = g @ y.T
            if isinstance(b, Var):
                gy = x.T @ g
                if sp.issparse(gy):
                    gy = gy.toarray()
                gy = np.asarray(gy)
            return gx, gy
        return back

    return _op(lambda x, y: x @ y, vjp, a, b)


# -- elementwise unary ---------------------------------------------------

def relu(a):
    return _op(lambda x: np.maximum(x, 0.0), lambda out, x: lambda g: (g * (x > 0),), a)


def exp(a):
    return _op(np.exp, lambda out, x: lambda g: (g * out,), a)


def log(a):
    return _op(np.log, lambda out, x: lambda g: (g / x,), a)


def square(a):
    return _op(np.square, lambda out, x: lambda g: (2.0 * g * x,), a)


def clip_min(a, floor: float):
    """``max(a, floor)`` with zero gradient where the floor is active."""
    return _op(lambda x: np.maximum(x, floor), lambda out, x: lambda g: (g * (x > floor),), a)


def sigmoid(a):
    return _op(lambda x: 0.5 * (1.0 + np.tanh(0.5 * x)), lambda out, x: lambda g: (g * out * (1.0 - out),), a)


# -- shape / reductions --------------------------------------------------

def transpose(a):
    return _op(lambda x: x.T, lambda out, x: lambda g: (g.T,), a)


def sum_all(a):
    return _op(lambda x: np.sum(x), lambda out, x: lambda g: (np.full(np.shape(x), g),), a)


def sum_axis(a, axis: int, keepdims: bool = True):
    def vjp(out, x):
        def back(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, x.shape).copy(),)
        return back

    return _op(lambda x: np.sum(x, axis=axis, keepdims=keepdims), vjp, a)


def mean_axis(a, axis: int, keepdims: bool = True):
    n = _val(a).shape[axis]
    return mul(sum_axis(a, axis, keepdims), 1.0 / n)


def softmax(a):
    """Row-wise softmax (last axis), shifted by the row max for stability."""
    def fwd(x):
        e = np.exp(x - np.max(x, axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)

    def vjp(out, x):
        return lambda g: (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return _op(fwd, vjp, a)


PRIMITIVES = {
    "add": add, "sub": sub, "mul": mul, "div": div, "matmul": matmul,
    "relu": relu, "exp": exp, "log": log, "square": square, "sigmoid": sigmoid,
    "transpose": transpose, "sum_all": sum_all, "sum_axis": sum_axis, "softmax": softmax,
    "clip_min": clip_min,
}
