"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every differentiable quantity in the package (GNN hidden states, powers,
precoders, losses) is a :class:`Tensor`.  Operations are recorded on the
innermost active :class:`Tape` whenever one of their inputs requires a
gradient; ``Tape.backward`` then walks the records in reverse.

    >>> x = Tensor([3.0], requires_grad=True)
    >>> with Tape() as tape:
    ...     y = (x * x).sum()
    >>> float(tape.backward(y)[x][0])
    6.0

Complex quantities are carried by :class:`ComplexMatrix`, a pair of real
tensors; their gradients are the independent gradients of the two parts.
"""

from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ComplexMatrix",
    "DomainError",
    "ShapeError",
    "Tape",
    "TapeError",
    "Tensor",
    "active_tape",
    "add",
    "backward",
    "broadcast",
    "concat",
    "cos",
    "exp",
    "forward_op",
    "grad_check",
    "log",
    "matmul",
    "max",
    "mean",
    "mul",
    "reciprocal",
    "relu",
    "reshape",
    "sigmoid",
    "sin",
    "slice",
    "sqrt",
    "square",
    "sub",
    "sum",
    "transpose",
]


class ShapeError(ValueError):
    """Operand shapes do not conform for an operation."""


class DomainError(ValueError):
    """Input outside the domain of an operation (e.g. log of a negative)."""


class TapeError(RuntimeError):
    """Misuse of a differentiation tape."""


_local = threading.local()


def _stack() -> list:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


def active_tape() -> "Tape | None":
    stack = _stack()
    return stack[-1] if stack else None


class _Node:
    __slots__ = ("kind", "inputs", "output", "vjp")

    def __init__(self, kind, inputs, output, vjp):
        self.kind = kind
        self.inputs = inputs
        self.output = output
        self.vjp = vjp


class Tape:
    """Append-only record of operations, consumed by one backward pass.

    Tapes are thread-local: entering a tape in one thread does not affect
    recording in another, so independent tapes can run concurrently.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc):
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def _record(self, kind, inputs, output, vjp):
        if self.consumed:
            raise TapeError(f"cannot record '{kind}' on a consumed tape")
        output._tape = self
        output.tape_id = len(self.nodes)
        self.nodes.append(_Node(kind, inputs, output, vjp))

    def backward(self, loss: "Tensor") -> dict:
        """Gradients of a scalar ``loss`` w.r.t. every reachable leaf.

        Returns a dict keyed by the leaf tensors themselves; each leaf's
        ``grad`` attribute is set as well.
        """
        if self.consumed:
            raise TapeError("tape already consumed by a previous backward")
        if not isinstance(loss, Tensor) or loss._tape is not self:
            raise TapeError("loss was not recorded on this tape")
        if loss.data.size != 1:
            raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")

        grads = {id(loss): np.ones_like(loss.data)}
        leaves = {}
        for node in reversed(self.nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            for t, gi in zip(node.inputs, node.vjp(g)):
                if gi is None or not t.requires_grad:
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi
                if t._tape is None:
                    leaves[key] = t
        self.consumed = True
        self.nodes = []
        out = {}
        for key, leaf in leaves.items():
            g = np.asarray(grads[key], dtype=np.float64).reshape(leaf.shape)
            leaf.grad = g
            out[leaf] = g
        return out


def backward(loss: "Tensor") -> dict:
    """Run backward on the tape that recorded ``loss``."""
    if not isinstance(loss, Tensor) or loss._tape is None:
        raise TapeError("loss is detached: it was not recorded on any tape")
    return loss._tape.backward(loss)


class Tensor:
    """Immutable float64 array that may participate in a tape."""

    __slots__ = ("data", "requires_grad", "tape_id", "_tape", "grad", "__weakref__")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.tape_id = None
        self._tape = None
        self.grad = None

    @classmethod
    def _wrap(cls, arr) -> "Tensor":
        t = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        if arr.flags.writeable:
            arr.setflags(write=False)
        t.data = arr
        t.requires_grad = False
        t.tape_id = None
        t._tape = None
        t.grad = None
        return t

    @property
    def shape(self) -> tuple:
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
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _bad_item(self)

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __len__(self):
        return len(self.data)

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

    def __truediv__(self, other):
        return mul(self, reciprocal(_as_tensor(other)))

    def __rtruediv__(self, other):
        return mul(other, reciprocal(self))

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return slice(self, index)

    def sum(self, axis=None, keepdims=False):
        return sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def max(self, axis=None, keepdims=False):
        return max(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def _bad_item(t):
    raise ValueError(f"item() needs a single-element tensor, got shape {t.shape}")


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor._wrap(np.asarray(x, dtype=np.float64))


def _emit(kind: str, inputs: tuple, out: np.ndarray, vjp: Callable) -> Tensor:
    result = Tensor._wrap(out)
    if any(t.requires_grad for t in inputs):
        tape = active_tape()
        if tape is not None:
            for t in inputs:
                if t._tape is not None and t._tape is not tape:
                    raise TapeError(
                        f"'{kind}' mixes a tensor recorded on another tape"
                    )
            result.requires_grad = True
            tape._record(kind, inputs, result, vjp)
    return result


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _bshape(kind, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{kind}: cannot broadcast shapes {a.shape} and {b.shape}") from None


# -- elementwise binary -------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _bshape("add", a, b)
    sa, sb = a.shape, b.shape
    return _emit("add", (a, b), a.data + b.data,
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _bshape("sub", a, b)
    sa, sb = a.shape, b.shape
    return _emit("sub", (a, b), a.data - b.data,
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _bshape("mul", a, b)
    ad, bd = a.data, b.data

    def vjp(g):
        ga = _unbroadcast(g * bd, ad.shape) if a.requires_grad else None
        gb = _unbroadcast(g * ad, bd.shape) if b.requires_grad else None
        return ga, gb

    return _emit("mul", (a, b), ad * bd, vjp)


def _swap(x):
    return np.swapaxes(x, -1, -2)


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes; leading axes broadcast."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError(f"matmul: batch shapes {a.shape} and {b.shape} do not broadcast") from None
    ad, bd = a.data, b.data

    def vjp(g):
        ga = _unbroadcast(g @ _swap(bd), ad.shape) if a.requires_grad else None
        gb = _unbroadcast(_swap(ad) @ g, bd.shape) if b.requires_grad else None
        return ga, gb

    return _emit("matmul", (a, b), ad @ bd, vjp)


# -- shape manipulation -------------------------------------------------------

def broadcast(a, shape) -> Tensor:
    a = _as_tensor(a)
    shape = tuple(shape)
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError:
        raise ShapeError(f"broadcast: cannot broadcast {a.shape} to {shape}") from None
    sa = a.shape
    return _emit("broadcast", (a,), out, lambda g: (_unbroadcast(g, sa),))


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = tuple(_as_tensor(t) for t in tensors)
    if not ts:
        raise ShapeError("concat: no inputs")
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        shapes = ", ".join(str(t.shape) for t in ts)
        raise ShapeError(f"concat: shapes {shapes} disagree off axis {axis}") from None
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit("concat", ts, out, vjp)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {a.shape} to {tuple(shape)}") from None
    sa = a.shape
    return _emit("reshape", (a,), out, lambda g: (g.reshape(sa),))


def transpose(a, axes=None) -> Tensor:
    """Permute axes; by default swap the last two."""
    a = _as_tensor(a)
    if axes is None:
        if a.ndim < 2:
            raise ShapeError(f"transpose: need at least 2 dims, got shape {a.shape}")
        axes = list(range(a.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
    axes = tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError(f"transpose: axes {axes} invalid for shape {a.shape}")
    inv = tuple(np.argsort(axes))
    return _emit("transpose", (a,), np.transpose(a.data, axes),
                 lambda g: (np.transpose(g, inv),))


def _is_advanced(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def slice(a, index) -> Tensor:  # noqa: A001 - op name
    a = _as_tensor(a)
    try:
        out = a.data[index]
    except IndexError as exc:
        raise ShapeError(f"slice: {exc} for shape {a.shape}") from None
    sa = a.shape
    advanced = _is_advanced(index)

    def vjp(g):
        z = np.zeros(sa)
        if advanced:
            np.add.at(z, index, g)
        else:
            z[index] = g
        return (z,)

    return _emit("slice", (a,), out, vjp)


# -- reductions ---------------------------------------------------------------

def _expand(g, shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(np.reshape(g, (1,) * len(shape)), shape)
    if not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def sum(a, axis=None, keepdims=False) -> Tensor:  # noqa: A001
    a = _as_tensor(a)
    sa = a.shape
    out = a.data.sum(axis=axis, keepdims=keepdims)
    return _emit("sum", (a,), out, lambda g: (_expand(g, sa, axis, keepdims),))


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    sa = a.shape
    n = a.data.size if axis is None else np.prod([sa[i] for i in np.atleast_1d(axis)])
    out = a.data.mean(axis=axis, keepdims=keepdims)
    return _emit("mean", (a,), out, lambda g: (_expand(g / n, sa, axis, keepdims),))


def max(a, axis=None, keepdims=False) -> Tensor:  # noqa: A001
    """Maximum along one axis (or all); ties send the gradient to the first index."""
    a = _as_tensor(a)
    if a.size == 0:
        raise ShapeError(f"max: empty input of shape {a.shape}")
    sa = a.shape
    if axis is None:
        idx = int(np.argmax(a.data))
        out = a.data.reshape(-1)[idx]
        if keepdims:
            out = np.reshape(out, (1,) * a.ndim)

        def vjp(g):
            z = np.zeros(a.data.size)
            z[idx] = np.reshape(g, -1)[0]
            return (z.reshape(sa),)

        return _emit("max", (a,), np.asarray(out), vjp)

    ax = axis % a.ndim
    idx = np.expand_dims(np.argmax(a.data, axis=ax), ax)
    out = np.take_along_axis(a.data, idx, axis=ax)
    if not keepdims:
        out = np.squeeze(out, axis=ax)

    def vjp(g):
        z = np.zeros(sa)
        gk = g if keepdims else np.expand_dims(g, ax)
        np.put_along_axis(z, idx, gk, axis=ax)
        return (z,)

    return _emit("max", (a,), out, vjp)


# -- elementwise unary --------------------------------------------------------

def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0
    return _emit("relu", (a,), np.where(mask, a.data, 0.0), lambda g: (g * mask,))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    s = np.exp(-np.logaddexp(0.0, -a.data))
    return _emit("sigmoid", (a,), s, lambda g: (g * s * (1.0 - s),))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    e = np.exp(a.data)
    return _emit("exp", (a,), e, lambda g: (g * e,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    if np.any(a.data < 0):
        raise DomainError(f"log: negative input (min {a.data.min():.3g})")
    ad = a.data
    with np.errstate(divide="ignore"):
        out = np.log(ad)
    return _emit("log", (a,), out, lambda g: (g / ad,))


def square(a) -> Tensor:
    a = _as_tensor(a)
    ad = a.data
    return _emit("square", (a,), ad * ad, lambda g: (2.0 * g * ad,))


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    if np.any(a.data < 0):
        raise DomainError(f"sqrt: negative input (min {a.data.min():.3g})")
    r = np.sqrt(a.data)
    with np.errstate(divide="ignore"):
        return _emit("sqrt", (a,), r, lambda g: (g * 0.5 / r,))


def reciprocal(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(divide="ignore"):
        r = 1.0 / a.data
    return _emit("reciprocal", (a,), r, lambda g: (-g * r * r,))


def sin(a) -> Tensor:
    a = _as_tensor(a)
    ad = a.data
    return _emit("sin", (a,), np.sin(ad), lambda g: (g * np.cos(ad),))


def cos(a) -> Tensor:
    a = _as_tensor(a)
    ad = a.data
    return _emit("cos", (a,), np.cos(ad), lambda g: (-g * np.sin(ad),))


_OPS = {
    "add": add, "sub": sub, "mul": mul, "matmul": matmul,
    "broadcast": broadcast, "concat": lambda *ts, axis=0: concat(ts, axis=axis),
    "sum": sum, "mean": mean, "max": max, "relu": relu, "sigmoid": sigmoid,
    "exp": exp, "log": log, "square": square, "sqrt": sqrt,
    "reciprocal": reciprocal, "transpose": transpose, "slice": slice,
    "reshape": reshape, "sin": sin, "cos": cos,
}


def forward_op(kind: str, *inputs, **kwargs) -> Tensor:
    """Dispatch an operation by name, e.g. ``forward_op("max", x, axis=1)``."""
    try:
        fn = _OPS[kind]
    except KeyError:
        raise ValueError(f"unknown op {kind!r}; known: {sorted(_OPS)}") from None
    return fn(*inputs, **kwargs)


def grad_check(f: Callable[[Tensor], Tensor], x, step: float = 1e-5) -> float:
    """Max relative discrepancy between tape and central-difference gradients.

    For each coordinate, ``|a - n| / (|a| + |n| + 1e-12)``.
    """
    if not 0 < step <= 1e-2:
        raise ValueError(f"step must lie in (0, 1e-2], got {step}")
    x0 = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    leaf = Tensor(x0, requires_grad=True)
    with Tape() as tape:
        y = f(leaf)
    if isinstance(y, Tensor) and y._tape is tape:
        analytic = tape.backward(y).get(leaf, np.zeros_like(x0))
    else:
        analytic = np.zeros_like(x0)

    flat = x0.reshape(-1)
    numeric = np.empty(flat.size)
    for i in range(flat.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += step
        xm[i] -= step
        fp = f(Tensor(xp.reshape(x0.shape))).item()
        fm = f(Tensor(xm.reshape(x0.shape))).item()
        numeric[i] = (fp - fm) / (2.0 * step)
    a = analytic.reshape(-1)
    err = np.abs(a - numeric) / (np.abs(a) + np.abs(numeric) + 1e-12)
    return float(err.max()) if err.size else 0.0


class ComplexMatrix:
    """Complex array stored as two real tensors ``re`` and ``im``."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        self.re = _as_tensor(re)
        self.im = _as_tensor(np.zeros(self.re.shape) if im is None else im)
        if self.re.shape != self.im.shape:
            raise ShapeError(f"complex parts differ in shape: {self.re.shape} vs {self.im.shape}")

    @classmethod
    def from_numpy(cls, z, requires_grad=False) -> "ComplexMatrix":
        z = np.asarray(z)
        return cls(Tensor(z.real, requires_grad), Tensor(z.imag, requires_grad))

    def numpy(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data

    @property
    def shape(self):
        return self.re.shape

    def __repr__(self):
        return f"ComplexMatrix(shape={self.shape})"

    @staticmethod
    def _parts(other):
        if isinstance(other, ComplexMatrix):
            return other.re, other.im
        if isinstance(other, (complex, np.complexfloating)) or (
            isinstance(other, np.ndarray) and np.iscomplexobj(other)
        ):
            other = np.asarray(other)
            return _as_tensor(other.real), _as_tensor(other.imag)
        return _as_tensor(other), None

    def __add__(self, other):
        r, i = self._parts(other)
        return ComplexMatrix(self.re + r, self.im if i is None else self.im + i)

    __radd__ = __add__

    def __sub__(self, other):
        r, i = self._parts(other)
        return ComplexMatrix(self.re - r, self.im if i is None else self.im - i)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ComplexMatrix(-self.re, -self.im)

    def __mul__(self, other):
        r, i = self._parts(other)
        if i is None:
            return ComplexMatrix(self.re * r, self.im * r)
        return ComplexMatrix(self.re * r - self.im * i, self.re * i + self.im * r)

    __rmul__ = __mul__

    def __matmul__(self, other):
        r, i = self._parts(other)
        if i is None:
            return ComplexMatrix(self.re @ r, self.im @ r)
        return ComplexMatrix(self.re @ r - self.im @ i, self.re @ i + self.im @ r)

    def __rmatmul__(self, other):
        r, i = self._parts(other)
        if i is None:
            return ComplexMatrix(r @ self.re, r @ self.im)
        return ComplexMatrix(r @ self.re - i @ self.im, r @ self.im + i @ self.re)

    def __getitem__(self, index):
        return ComplexMatrix(self.re[index], self.im[index])

    def conj(self) -> "ComplexMatrix":
        return ComplexMatrix(self.re, -self.im)

    @property
    def H(self) -> "ComplexMatrix":
        return ComplexMatrix(transpose(self.re), -transpose(self.im))

    @property
    def T(self) -> "ComplexMatrix":
        return ComplexMatrix(transpose(self.re), transpose(self.im))

    def abs2(self) -> Tensor:
        return square(self.re) + square(self.im)

    def reshape(self, *shape) -> "ComplexMatrix":
        return ComplexMatrix(self.re.reshape(*shape), self.im.reshape(*shape))

    def sum(self, axis=None, keepdims=False) -> "ComplexMatrix":
        return ComplexMatrix(sum(self.re, axis, keepdims), sum(self.im, axis, keepdims))
