"""Reverse-mode differentiation over float64 numpy arrays.

Each op builds its result eagerly and, when any input requires a gradient,
records a closure that maps the output gradient to one gradient per input.
``backward`` walks the recorded graph once in reverse topological order and
accumulates into the ``grad`` of leaf tensors (parameters and inputs
created with ``requires_grad=True``). Intermediate gradients are dropped
as soon as they have been propagated.
"""

import numpy as np

from ..errors import NumericFailureError, RejectedInputError


class Tensor:
    __array_priority__ = 100  # make ndarray <op> Tensor defer to Tensor

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward = None
        self.op = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def __repr__(self):
        tag = f", op={self.op}" if self.op else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

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

    def __neg__(self):
        return negate(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def backward(self):
        backward(self)


class Parameter(Tensor):
    """A named leaf tensor that always carries a same-shape gradient buffer."""

    def __init__(self, data, name=""):
        super().__init__(np.array(data, dtype=np.float64), requires_grad=True)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_finite(data, op):
    # cheap scalar test first; only scan elementwise when the sum is suspicious
    if not np.isfinite(data.sum()) and not np.all(np.isfinite(data)):
        raise NumericFailureError(f"{op} produced non-finite values")


def _result(data, parents, backward_fn, op):
    data = np.asarray(data, dtype=np.float64)
    _check_finite(data, op)
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
        out.op = op
    return out


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` along broadcast axes."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _broadcast_shape(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise RejectedInputError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# -- elementwise -------------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return _result(a.data + b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return _result(a.data - b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    return _result(a.data * b.data, (a, b),
                   lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)), "mul")


def scalar_mul(a, s):
    a = as_tensor(a)
    s = float(s)
    return _result(a.data * s, (a,), lambda g: (g * s,), "scalar_mul")


def negate(a):
    a = as_tensor(a)
    return _result(-a.data, (a,), lambda g: (-g,), "negate")


def exp(a):
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return _result(out, (a,), lambda g: (g * out,), "exp")


def relu(a):
    a = as_tensor(a)
    out = np.maximum(a.data, 0.0)
    return _result(out, (a,), lambda g: (g * (out > 0),), "relu")


# -- reductions ----------------------------------------------------------------

def sum(a, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result(out, (a,), bw, "sum")


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return scalar_mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def l1_norm(a, axis=-1):
    a = as_tensor(a)
    sign = np.sign(a.data)
    return _result(np.abs(a.data).sum(axis=axis), (a,),
                   lambda g: (np.expand_dims(g, axis) * sign,), "l1_norm")


def l2_norm(a, axis=-1):
    """Euclidean norm; the gradient at the origin is taken as zero."""
    a = as_tensor(a)
    n = np.sqrt((a.data * a.data).sum(axis=axis))

    def bw(g):
        ne = np.expand_dims(n, axis)
        unit = np.divide(a.data, ne, out=np.zeros_like(a.data), where=ne > 0)
        return (np.expand_dims(g, axis) * unit,)

    return _result(n, (a,), bw, "l2_norm")


def max_over_set(a, axis):
    """Max along ``axis``; on exact ties the gradient goes to the first maximum."""
    a = as_tensor(a)
    idx = np.expand_dims(np.argmax(a.data, axis=axis), axis)
    out = np.take_along_axis(a.data, idx, axis=axis).squeeze(axis)

    def bw(g):
        ga = np.zeros_like(a.data)
        np.put_along_axis(ga, idx, np.expand_dims(g, axis), axis=axis)
        return (ga,)

    return _result(out, (a,), bw, "max_over_set")


def softmax(a, axis=-1):
    a = as_tensor(a)
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)
    return _result(s, (a,), lambda g: (s * (g - (g * s).sum(axis=axis, keepdims=True)),), "softmax")


# -- linear algebra and shape ----------------------------------------------------

def matmul(a, b):
    """Batched matrix product; both operands need at least two dimensions."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise RejectedInputError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise RejectedInputError(f"matmul: batch dims of {a.shape} and {b.shape} do not broadcast") from None

    def bw(g):
        ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape) if a.requires_grad else None
        gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape) if b.requires_grad else None
        return ga, gb

    return _result(a.data @ b.data, (a, b), bw, "matmul")


def linear(x, w, b, relu=False):
    """``x @ w + b`` over the last axis of ``x``, optionally followed by ReLU.

    A fused form of matmul/add/relu: one graph node, no broadcast reduction.
    """
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if w.ndim != 2 or b.shape != (w.shape[1],) or x.shape[-1] != w.shape[0]:
        raise RejectedInputError(f"linear: incompatible shapes x{x.shape} w{w.shape} b{b.shape}")
    x2 = x.data.reshape(-1, w.shape[0])
    out = x2 @ w.data
    out += b.data
    if relu:
        np.maximum(out, 0.0, out=out)

    def bw(g):
        g2 = g.reshape(-1, w.shape[1])
        if relu:
            g2 = g2 * (out > 0)
        gx = (g2 @ w.data.T).reshape(x.shape) if x.requires_grad else None
        gw = x2.T @ g2 if w.requires_grad else None
        gb = g2.sum(axis=0) if b.requires_grad else None
        return gx, gw, gb

    return _result(out.reshape(x.shape[:-1] + (w.shape[1],)), (x, w, b), bw, "linear")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise RejectedInputError(f"concat: {exc}") from None
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _result(out, tuple(tensors), lambda g: tuple(np.split(g, sizes, axis=axis)), "concat")


def reshape(a, shape):
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError as exc:
        raise RejectedInputError(f"reshape: {exc}") from None
    return _result(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes):
    a = as_tensor(a)
    inv = np.argsort(axes)
    return _result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),), "transpose")


def gather(a, idx):
    """Per-batch row gather: ``a`` (B, N, C), ``idx`` int (B, ...) -> (B, ..., C)."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    b, n, c = a.shape
    if idx.shape[0] != b:
        raise RejectedInputError(f"gather: index batch {idx.shape[0]} != tensor batch {b}")
    flat = (idx.reshape(b, -1) + (np.arange(b) * n)[:, None]).reshape(-1)
    out = a.data.reshape(b * n, c)[flat].reshape(idx.shape + (c,))

    def bw(g):
        ga = np.zeros((b * n, c))
        np.add.at(ga, flat, g.reshape(-1, c))
        return (ga.reshape(a.shape),)

    return _result(out, (a,), bw, "gather")


def conv2d(x, w, stride=1, padding=0):
    """Cross-correlation of ``x`` (B, Cin, H, W) with ``w`` (Cout, Cin, kh, kw)."""
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise RejectedInputError(f"conv2d: incompatible shapes {x.shape} and {w.shape}")
    bsz, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    s, p = stride, padding
    ho = (h + 2 * p - kh) // s + 1
    wo = (wd + 2 * p - kw) // s + 1
    if ho < 1 or wo < 1:
        raise RejectedInputError(f"conv2d: input {x.shape} too small for kernel {kh}x{kw}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data
    # channels-last patch view: (B, Ho, Wo, Cin, kh, kw)
    sb, sc, sh, sw = xp.strides
    cols = np.lib.stride_tricks.as_strided(
        xp, (bsz, ho, wo, cin, kh, kw), (sb, sh * s, sw * s, sc, sh, sw), writeable=False
    ).reshape(bsz * ho * wo, cin * kh * kw)
    wmat = w.data.reshape(cout, -1)
    out = (cols @ wmat.T).reshape(bsz, ho, wo, cout).transpose(0, 3, 1, 2)

    def bw(g):
        gm = g.transpose(0, 2, 3, 1).reshape(-1, cout)
        gw = (gm.T @ cols).reshape(w.shape) if w.requires_grad else None
        gx = None
        if x.requires_grad:
            dcols = (gm @ wmat).reshape(bsz, ho, wo, cin, kh, kw)
            gxp = np.zeros(xp.shape)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i : i + s * ho : s, j : j + s * wo : s] += dcols[..., i, j].transpose(0, 3, 1, 2)
            gx = gxp[:, :, p : p + h, p : p + wd] if p else gxp
        return gx, gw

    return _result(np.ascontiguousarray(out), (x, w), bw, "conv2d")


# -- graph traversal -------------------------------------------------------------

def _topo_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss):
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``.

    A non-finite leaf gradient raises, so Adam never sees NaN or Inf.
    """
    if loss.data.size != 1:
        raise RejectedInputError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise RejectedInputError("loss is not connected to any tensor that requires grad")
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topo_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.grad is None:
                node.grad = np.array(g, dtype=np.float64)
            else:
                node.grad += g
            _check_finite(node.grad, f"backward into {getattr(node, 'name', None) or 'a leaf'}")
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
