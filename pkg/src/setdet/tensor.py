"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation eagerly computes its value with numpy and records a
vector-Jacobian closure, so a forward pass leaves behind a topologically
ordered tape. ``backward`` on a scalar walks that tape once in reverse and
accumulates gradients into the ``grad`` field of every leaf created with
``requires_grad=True``. Arrays are float64 throughout; any NaN/Inf produced
by a forward step raises immediately instead of propagating silently.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, NonFiniteError, ShapeError

Array = np.ndarray


def _check_finite(arr: Array, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite values produced by {what}")


class Tensor:
    """One node of the computation graph.

    Leaves hold data (parameters, inputs); interior nodes additionally hold
    the parent references and the closure that maps an output gradient to
    per-parent gradients. Values are treated as immutable once a node has
    consumers; only ``grad`` (and optimizer updates on leaves) mutate state,
    so independent graphs are safe to run concurrently.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjp")

    def __init__(self, values, requires_grad: bool = False,
                 _parents: tuple = (), _vjp: Callable | None = None):
        self.data = np.asarray(values, dtype=np.float64)
        _check_finite(self.data, "tensor construction")
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self.grad: Array | None = None
        self._parents = _parents
        self._vjp = _vjp

    # -- bookkeeping -------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> Array:
        """The raw value array, outside the graph. Do not mutate."""
        return self.data

    def __repr__(self) -> str:
        tag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    # -- autodiff ----------------------------------------------------------

    def backward(self) -> None:
        """Populate ``grad`` on every requires_grad leaf below this scalar.

        Repeated calls accumulate; callers zero gradients between steps.
        """
        if self.data.shape != ():
            raise ContractError("backward requires a scalar loss")
        if not self.requires_grad:
            return
        order = _reverse_topo(self)
        grads: dict[int, Array] = {id(self): np.ones((), dtype=np.float64)}
        for node in order:
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._vjp is None:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._vjp(g)):
                if pg is None or not parent.requires_grad:
                    continue
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self):
        return sum_all(self)

    def mean(self):
        return mean_all(self)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) != 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self):
        return transpose(self)

    def relu(self):
        return relu(self)

    def sigmoid(self):
        return sigmoid(self)

    def log(self):
        return log(self)

    def abs(self):
        return absolute(self)


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _reverse_topo(root: Tensor) -> list[Tensor]:
    """Nodes from root down to leaves, each exactly once (reverse topological)."""
    seen: set[int] = set()
    post: list[Tensor] = []
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            post.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    post.reverse()
    return post


def _node(data: Array, parents: tuple, vjp: Callable, what: str) -> Tensor:
    _check_finite(data, what)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = any(p.requires_grad for p in parents)
    out.grad = None
    out._parents = parents
    out._vjp = vjp
    return out


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


# -- arithmetic primitives --------------------------------------------------

def add(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        s = float(b)
        return _node(a.data + s, (a,), lambda g: (g,), "add")
    _same_shape(a, b, "add")
    return _node(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    return _node(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        s = float(b)
        return _node(a.data * s, (a,), lambda g: (g * s,), "mul")
    _same_shape(a, b, "mul")
    ad, bd = a.data, b.data
    return _node(ad * bd, (a, b), lambda g: (g * bd, g * ad), "mul")


def div(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "div")
    ad, bd = a.data, b.data
    out = ad / bd
    return _node(out, (a, b), lambda g: (g / bd, -g * ad / (bd * bd)), "div")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError("matmul expects 2-D operands")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: inner dims {a.data.shape} x {b.data.shape} disagree")
    ad, bd = a.data, b.data
    return _node(ad @ bd, (a, b), lambda g: (g @ bd.T, ad.T @ g), "matmul")


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Row-broadcast bias add: [m, n] + [n]. The only broadcasting supported."""
    if x.data.ndim != 2 or b.data.ndim != 1 or x.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"add_bias: got {x.data.shape} + {b.data.shape}")
    return _node(x.data + b.data, (x, b), lambda g: (g, g.sum(axis=0)), "add_bias")


# -- elementwise nonlinearities ---------------------------------------------

def relu(x: Tensor) -> Tensor:
    mask = x.data > 0  # subgradient at exactly 0 is 0
    return _node(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def sigmoid(x: Tensor) -> Tensor:
    xd = x.data
    out = np.where(xd >= 0, 1.0 / (1.0 + np.exp(-np.abs(xd))),
                   np.exp(-np.abs(xd)) / (1.0 + np.exp(-np.abs(xd))))
    return _node(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def log(x: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x.data)
    xd = x.data
    return _node(out, (x,), lambda g: (g / xd,), "log")


def absolute(x: Tensor) -> Tensor:
    sign = np.sign(x.data)
    return _node(np.abs(x.data), (x,), lambda g: (g * sign,), "abs")


def maximum(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "maximum")
    take_a = a.data >= b.data  # ties route the gradient to the first operand
    return _node(np.where(take_a, a.data, b.data), (a, b),
                 lambda g: (g * take_a, g * ~take_a), "maximum")


def minimum(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "minimum")
    take_a = a.data <= b.data
    return _node(np.where(take_a, a.data, b.data), (a, b),
                 lambda g: (g * take_a, g * ~take_a), "minimum")


def clamp_min(x: Tensor, lo: float) -> Tensor:
    mask = x.data > lo  # entries resting on the floor get zero gradient
    return _node(np.where(mask, x.data, lo), (x,), lambda g: (g * mask,), "clamp_min")


# -- reductions and shape moves ---------------------------------------------

def sum_all(x: Tensor) -> Tensor:
    shape = x.data.shape
    return _node(x.data.sum(), (x,),
                 lambda g: (np.broadcast_to(g, shape).copy(),), "sum")


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size
    shape = x.data.shape
    return _node(x.data.mean(), (x,),
                 lambda g: (np.broadcast_to(g / n, shape).copy(),), "mean")


def reshape(x: Tensor, shape) -> Tensor:
    orig = x.data.shape
    return _node(x.data.reshape(shape), (x,), lambda g: (g.reshape(orig),), "reshape")


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError("transpose expects a 2-D tensor")
    return _node(x.data.T.copy(), (x,), lambda g: (g.T.copy(),), "transpose")


def gather_rows(x: Tensor, index: Sequence[int]) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError("gather_rows expects a 2-D tensor")
    idx = np.asarray(index, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= x.data.shape[0]):
        raise ContractError("gather_rows: index out of range")
    shape = x.data.shape

    def vjp(g):
        out = np.zeros(shape, dtype=np.float64)
        np.add.at(out, idx, g)
        return (out,)

    return _node(x.data[idx].copy(), (x,), vjp, "gather_rows")


def narrow_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 2 or not (0 <= start <= stop <= x.data.shape[1]):
        raise ShapeError(f"narrow_cols: [{start}:{stop}] invalid for {x.data.shape}")
    shape = x.data.shape

    def vjp(g):
        out = np.zeros(shape, dtype=np.float64)
        out[:, start:stop] = g
        return (out,)

    return _node(x.data[:, start:stop].copy(), (x,), vjp, "narrow_cols")


def concat_cols(parts: Iterable[Tensor]) -> Tensor:
    parts = tuple(parts)
    if not parts or any(p.data.ndim != 2 for p in parts):
        raise ShapeError("concat_cols expects 2-D tensors")
    widths = [p.data.shape[1] for p in parts]
    edges = np.cumsum([0] + widths)

    def vjp(g):
        return tuple(g[:, edges[i]:edges[i + 1]].copy() for i in range(len(widths)))

    return _node(np.concatenate([p.data for p in parts], axis=1), parts, vjp, "concat_cols")


# -- fused neural-net primitives --------------------------------------------

def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise softmax with max-subtraction for overflow safety."""
    if x.data.ndim != 2:
        raise ShapeError("softmax_rows expects a 2-D tensor")
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        dot = (g * y).sum(axis=1, keepdims=True)
        return (y * (g - dot),)

    return _node(y, (x,), vjp, "softmax_rows")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalization to zero mean / unit variance, then scale-shift."""
    if x.data.ndim != 2:
        raise ShapeError("layer_norm expects a 2-D tensor")
    d = x.data.shape[1]
    if gamma.data.shape != (d,) or beta.data.shape != (d,):
        raise ShapeError("layer_norm: gamma/beta must have shape (d,)")
    mu = x.data.mean(axis=1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = xhat * gamma.data + beta.data

    def vjp(g):
        dgamma = (g * xhat).sum(axis=0)
        dbeta = g.sum(axis=0)
        dxhat = g * gamma.data
        m1 = dxhat.mean(axis=1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
        dx = (dxhat - m1 - xhat * m2) * inv_std
        return (dx, dgamma, dbeta)

    return _node(out, (x, gamma, beta), vjp, "layer_norm")


def pool2x2_mean(x: Tensor) -> Tensor:
    """Non-overlapping 2x2 mean pooling on a [C, H, W] tensor (H, W even)."""
    if x.data.ndim != 3:
        raise ShapeError("pool2x2_mean expects a [C, H, W] tensor")
    c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise ShapeError(f"pool2x2_mean: H, W must be even, got {h}x{w}")
    out = x.data.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))

    def vjp(g):
        return (np.repeat(np.repeat(g, 2, axis=1), 2, axis=2) * 0.25,)

    return _node(out, (x,), vjp, "pool2x2_mean")


def pad_bottom_right(x: Tensor, pad_h: int, pad_w: int) -> Tensor:
    """Zero-pad a [C, H, W] tensor on the bottom and right edges."""
    if x.data.ndim != 3 or pad_h < 0 or pad_w < 0:
        raise ShapeError("pad_bottom_right expects [C, H, W] and non-negative pads")
    c, h, w = x.data.shape
    out = np.zeros((c, h + pad_h, w + pad_w), dtype=np.float64)
    out[:, :h, :w] = x.data
    return _node(out, (x,), lambda g: (g[:, :h, :w].copy(),), "pad_bottom_right")


# -- numerical gradient oracle ----------------------------------------------

def finite_difference_grad(f: Callable[[Tensor], Tensor], x, h: float = 1e-5) -> Array:
    """Central-difference gradient of a scalar-valued function at ``x``.

    Independent of the tape: evaluates ``f`` 2 * x.size times on perturbed
    copies and never touches ``backward``.
    """
    if h <= 0:
        raise ContractError("finite_difference_grad requires h > 0")
    base = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    grad = np.zeros_like(base)
    flat = base.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + h
        hi = float(f(Tensor(bumped.reshape(base.shape))).data)
        bumped[i] = flat[i] - h
        lo = float(f(Tensor(bumped.reshape(base.shape))).data)
        gflat[i] = (hi - lo) / (2.0 * h)
    return grad
