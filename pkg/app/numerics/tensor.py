"""
Dense float64 tensors with reverse-mode automatic differentiation.

Every op returns a new Tensor whose array is read-only; inputs are never
modified. A result records its parents and a backward closure only when
gradient tracking is enabled and at least one parent requires grad.

Broadcasting is limited to leading axes: the trailing (feature) axis of both
operands must agree, and the smaller operand may only omit leading axes or
give them size 1. A 0-d operand (python scalar) combines with anything.
"""

import threading
from contextlib import contextmanager
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

from ..utils.errors import ContractError, NumericError, ShapeError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]

_grad_state = threading.local()

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def is_grad_enabled() -> bool:
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad():
    """Disable graph construction in the current thread"""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array, dtype=np.float64)
    if array.flags.writeable:
        array = array.copy() if array.base is not None else array
        array.setflags(write=False)
    return array


class Tensor:
    """A dense float64 value that can take part in a differentiable computation"""

    __array_priority__ = 100.0

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        if isinstance(data, Tensor):
            data = data.data
        array = np.array(data, dtype=np.float64)
        array.setflags(write=False)
        self.data: np.ndarray = array
        self.requires_grad: bool = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward_fn: Optional[Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]] = None

    # --- convenience ---
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def numpy(self) -> np.ndarray:
        return np.array(self.data)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def assign(self, values: ArrayLike) -> None:
        """Rebind the value of a leaf tensor (optimizer updates, checkpoint loads)"""
        if self._backward_fn is not None:
            raise ContractError("assign() is only valid on leaf tensors")
        array = np.array(values.data if isinstance(values, Tensor) else values, dtype=np.float64)
        if array.shape != self.data.shape:
            raise ShapeError("assign() shape mismatch", self.data.shape, array.shape)
        array.setflags(write=False)
        self.data = array

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        req = ", requires_grad=True" if self.requires_grad else ""
        nm = f", name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{req}{nm})"

    # --- operators ---
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __rtruediv__(self, other): return div(other, self)
    def __neg__(self): return neg(self)
    def __matmul__(self, other): return matmul(self, other)
    def __rmatmul__(self, other): return matmul(other, self)
    def __getitem__(self, index): return take(self, index)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def exp(self) -> "Tensor":
        return exp(self)

    # --- autograd core ---
    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into .grad of every tracked leaf"""
        backward(self)


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data: np.ndarray, parents: Iterable[Tensor], backward_fn, op: str) -> Tensor:
    data = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise NumericError(f"{op} produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = _readonly(data)
    out.grad = None
    out.name = None
    parents = tuple(parents)
    out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = parents
        out._backward_fn = backward_fn
    else:
        out._parents = ()
        out._backward_fn = None
    return out


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    big, small = (a, b) if a.ndim >= b.ndim else (b, a)
    if small.shape[-1] != big.shape[-1]:
        raise ShapeError(f"{op}: trailing axes differ", a.shape, b.shape)
    try:
        out_shape = np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes do not broadcast", a.shape, b.shape) from None
    if out_shape != big.shape:
        raise ShapeError(f"{op}: only leading-axis broadcasting is supported", a.shape, b.shape)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# =====================================================================
# Elementwise arithmetic
# =====================================================================

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(a.data + b.data, (a, b), backward_fn, "add")


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result(a.data - b.data, (a, b), backward_fn, "sub")


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def backward_fn(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), backward_fn, "mul")


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "div")
    if np.any(b.data == 0.0):
        raise NumericError("div: division by zero")

    def backward_fn(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return _result(a.data / b.data, (a, b), backward_fn, "div")


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _result(-a.data, (a,), lambda g: (-g,), "neg")


def exp(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out_data = np.exp(a.data)

    def backward_fn(g):
        return (g * out_data,)

    return _result(out_data, (a,), backward_fn, "exp")


def gelu(a: ArrayLike) -> Tensor:
    """Exact GELU, x * Phi(x)"""
    a = as_tensor(a)
    cdf = 0.5 * (1.0 + erf(a.data / _SQRT2))

    def backward_fn(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * a.data * a.data)
        return (g * (cdf + a.data * pdf),)

    return _result(a.data * cdf, (a,), backward_fn, "gelu")


# =====================================================================
# Linear algebra and shape ops
# =====================================================================

def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("matmul expects two matrices", a.shape, b.shape)
    if a.shape[1] != b.shape[0]:
        raise ShapeError("matmul inner dimensions differ", a.shape, b.shape)

    def backward_fn(g):
        return g @ b.data.T, a.data.T @ g

    return _result(a.data @ b.data, (a, b), backward_fn, "matmul")


def transpose(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError("transpose expects a matrix", a.shape)
    return _result(a.data.T, (a,), lambda g: (g.T,), "transpose")


def reshape(a: ArrayLike, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out_data = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError("reshape size mismatch", a.shape, tuple(shape)) from None
    return _result(out_data, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def take(a: ArrayLike, index) -> Tensor:
    """Differentiable indexing / slicing"""
    a = as_tensor(a)
    out_data = np.array(a.data[index])

    def backward_fn(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return _result(out_data, (a,), backward_fn, "take")


def concat(tensors: Sequence[ArrayLike], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    try:
        out_data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("concat shapes disagree", *[t.shape for t in tensors]) from None
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return _result(out_data, tensors, backward_fn, "concat")


def tensor_sum(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result(out_data, (a,), backward_fn, "sum")


def tensor_mean(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    out_data = a.data.mean(axis=axis, keepdims=keepdims)

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return _result(out_data, (a,), backward_fn, "mean")


# =====================================================================
# Normalizations
# =====================================================================

def softmax(x: ArrayLike, axis: int = -1) -> Tensor:
    """Numerically stable softmax (max-subtraction) along one axis"""
    x = as_tensor(x)
    if x.ndim == 0 or not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"softmax axis {axis} out of range", x.shape)
    if not np.all(np.isfinite(x.data)):
        raise NumericError("softmax received non-finite input")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward_fn(g):
        return (out_data * (g - (g * out_data).sum(axis=axis, keepdims=True)),)

    return _result(out_data, (x,), backward_fn, "softmax")


def layer_norm(x: ArrayLike, axis: int = -1, eps: float = 1e-9) -> Tensor:
    """Zero-mean, unit-variance normalization along one axis, no affine"""
    x = as_tensor(x)
    if x.ndim == 0 or not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"layer_norm axis {axis} out of range", x.shape)
    if x.shape[axis] < 1:
        raise ShapeError("layer_norm over an empty axis", x.shape)
    if not np.all(np.isfinite(x.data)):
        raise NumericError("layer_norm received non-finite input")
    centered = x.data - x.data.mean(axis=axis, keepdims=True)
    variance = (centered * centered).mean(axis=axis, keepdims=True)
    inv_std = 1.0 / np.sqrt(variance + eps)
    normed = centered * inv_std

    def backward_fn(g):
        g_mean = g.mean(axis=axis, keepdims=True)
        gx_mean = (g * normed).mean(axis=axis, keepdims=True)
        return (inv_std * (g - g_mean - normed * gx_mean),)

    return _result(normed, (x,), backward_fn, "layer_norm")


def mse_loss(prediction: ArrayLike, target: ArrayLike) -> Tensor:
    prediction, target = as_tensor(prediction), as_tensor(target)
    if prediction.shape != target.shape:
        raise ShapeError("mse_loss shape mismatch", prediction.shape, target.shape)
    diff = prediction - target
    return tensor_mean(diff * diff)


# =====================================================================
# Reverse pass
# =====================================================================

def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
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
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate .grad on every tracked leaf reachable from a scalar loss"""
    if loss.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("backward() on a value that does not depend on any tracked tensor")

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward_fn is None:
            node.grad = np.array(g) if node.grad is None else node.grad + g
            continue
        for parent, parent_grad in zip(node._parents, node._backward_fn(g)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + parent_grad if key in grads else parent_grad
