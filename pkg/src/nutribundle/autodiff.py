"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough operations for the preference model and its training losses:
elementwise arithmetic with broadcasting, dense/sparse matmul, row
gather/concat, tanh, exp, log, abs, relu, log-sigmoid and reductions.
Everything runs in float64; graphs are built eagerly and freed after
backward().
"""

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape the operand was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    # -- graph walk ---------------------------------------------------------

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    # -- elementwise arithmetic ----------------------------------------------

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    def __add__(self, other):
        other = Tensor._lift(other)

        def back(g):
            self._accumulate(_unbroadcast(g, self.shape))
            other._accumulate(_unbroadcast(g, other.shape))

        return Tensor(self.data + other.data, parents=(self, other), backward=back)

    __radd__ = __add__

    def __neg__(self):
        def back(g):
            self._accumulate(-g)

        return Tensor(-self.data, parents=(self,), backward=back)

    def __sub__(self, other):
        return self + (-Tensor._lift(other))

    def __rsub__(self, other):
        return Tensor._lift(other) + (-self)

    def __mul__(self, other):
        other = Tensor._lift(other)

        def back(g):
            self._accumulate(_unbroadcast(g * other.data, self.shape))
            other._accumulate(_unbroadcast(g * self.data, other.shape))

        return Tensor(self.data * other.data, parents=(self, other), backward=back)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Tensor._lift(other)

        def back(g):
            self._accumulate(_unbroadcast(g / other.data, self.shape))
            other._accumulate(_unbroadcast(-g * self.data / other.data**2, other.shape))

        return Tensor(self.data / other.data, parents=(self, other), backward=back)

    def __rtruediv__(self, other):
        return Tensor._lift(other) / self

    def __matmul__(self, other):
        other = Tensor._lift(other)

        def back(g):
            self._accumulate(g @ other.data.T)
            other._accumulate(self.data.T @ g)

        return Tensor(self.data @ other.data, parents=(self, other), backward=back)

    # -- shape ops ------------------------------------------------------------

    @property
    def T(self) -> "Tensor":
        def back(g):
            self._accumulate(g.T)

        return Tensor(self.data.T, parents=(self,), backward=back)

    def gather_rows(self, idx) -> "Tensor":
        idx = np.asarray(idx, dtype=np.intp)

        def back(g):
            full = np.zeros_like(self.data)
            np.add.at(full, idx, g)
            self._accumulate(full)

        return Tensor(self.data[idx], parents=(self,), backward=back)

    # -- nonlinearities ---------------------------------------------------------

    def tanh(self) -> "Tensor":
        out = np.tanh(self.data)

        def back(g):
            self._accumulate(g * (1.0 - out**2))

        return Tensor(out, parents=(self,), backward=back)

    def exp(self) -> "Tensor":
        out = np.exp(self.data)

        def back(g):
            self._accumulate(g * out)

        return Tensor(out, parents=(self,), backward=back)

    def log(self) -> "Tensor":
        def back(g):
            self._accumulate(g / self.data)

        return Tensor(np.log(self.data), parents=(self,), backward=back)

    def abs(self) -> "Tensor":
        def back(g):
            self._accumulate(g * np.sign(self.data))

        return Tensor(np.abs(self.data), parents=(self,), backward=back)

    def relu(self) -> "Tensor":
        def back(g):
            self._accumulate(g * (self.data > 0))

        return Tensor(np.maximum(self.data, 0.0), parents=(self,), backward=back)

    def logsigmoid(self) -> "Tensor":
        # log(1 / (1 + e^-x)) = -log1p(e^-x), computed stably for both signs.
        out = -np.logaddexp(0.0, -self.data)

        def back(g):
            self._accumulate(g / (1.0 + np.exp(self.data)))

        return Tensor(out, parents=(self,), backward=back)

    # -- reductions --------------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        def back(g):
            if axis is None:
                self._accumulate(np.broadcast_to(g, self.shape).copy())
            else:
                expanded = g if keepdims else np.expand_dims(g, axis)
                self._accumulate(np.broadcast_to(expanded, self.shape).copy())

        return Tensor(self.data.sum(axis=axis, keepdims=keepdims), parents=(self,), backward=back)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)


def concat_rows(tensors: list[Tensor]) -> Tensor:
    """Stack 2-D tensors vertically; gradient splits back by row block."""
    sizes = [t.data.shape[0] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            t._accumulate(g[start:stop])

    return Tensor(np.concatenate([t.data for t in tensors], axis=0), parents=tuple(tensors), backward=back)


def spmm(matrix, t: Tensor) -> Tensor:
    """Multiply a constant scipy sparse matrix by a dense tensor."""

    def back(g):
        t._accumulate(matrix.T @ g)

    return Tensor(matrix @ t.data, parents=(t,), backward=back)
