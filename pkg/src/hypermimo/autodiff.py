"""A small reverse-mode differentiation engine on numpy arrays.

Operations are recorded on a :class:`Tape` as they execute. Any primitive
called with plain arrays only (no :class:`Var` operand) just returns the
numpy result, so the same model code serves as the fast inference path.

Example
-------
>>> tape = Tape()
>>> x = tape.variable(3.0)
>>> y = square(x)
>>> tape.gradient(y, [x])[0]
array(6.)
"""

import numpy as np

from .errors import DimensionError


class _Node:
    __slots__ = ("inputs", "vjps")

    def __init__(self, inputs, vjps):
        self.inputs = inputs
        self.vjps = vjps


class Tape:
    """Ordered record of primitive operations; usable for one backward pass."""

    def __init__(self):
        self.nodes = []
        self._used = False

    def variable(self, value):
        """Register a leaf."""
        return self._record(np.array(value, dtype=np.float64), (), ())

    def _record(self, value, inputs, vjps):
        self.nodes.append(_Node(inputs, vjps))
        return Var(self, len(self.nodes) - 1, value)

    def gradient(self, output, wrt):
        """Gradients of the scalar ``output`` with respect to the leaves ``wrt``."""
        if self._used:
            raise RuntimeError("a Tape supports a single backward pass")
        if output.tape is not self:
            raise ValueError("output was not recorded on this tape")
        if output.value.size != 1:
            raise DimensionError("gradient requires a scalar output")
        self._used = True
        adj = [None] * len(self.nodes)
        adj[output.index] = np.ones_like(output.value)
        for i in range(output.index, -1, -1):
            g = adj[i]
            if g is None:
                continue
            node = self.nodes[i]
            for j, vjp in zip(node.inputs, node.vjps):
                if j is None:
                    continue
                gj = vjp(g)
                adj[j] = gj if adj[j] is None else adj[j] + gj
        out = []
        for v in wrt:
            g = adj[v.index]
            out.append(np.zeros_like(v.value) if g is None else g)
        return out


class Var:
    """A value recorded on a tape."""

    __slots__ = ("tape", "index", "value")
    __array_priority__ = 100.0

    def __init__(self, tape, index, value):
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Var(shape={self.shape}, index={self.index})"

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
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def value_of(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def _emit(value, args, vjps):
    tape = None
    for a in args:
        if isinstance(a, Var):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise ValueError("operands were recorded on different tapes")
    if tape is None:
        return value
    inputs = tuple(a.index if isinstance(a, Var) else None for a in args)
    return tape._record(value, inputs, vjps)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(*shapes):
    try:
        return np.broadcast_shapes(*shapes)
    except ValueError as exc:
        raise DimensionError(str(exc)) from exc


# elementwise ---------------------------------------------------------------


def add(a, b):
    av, bv = value_of(a), value_of(b)
    _check_broadcast(av.shape, bv.shape)
    return _emit(av + bv, (a, b), (lambda g: _unbroadcast(g, av.shape), lambda g: _unbroadcast(g, bv.shape)))


def sub(a, b):
    av, bv = value_of(a), value_of(b)
    _check_broadcast(av.shape, bv.shape)
    return _emit(av - bv, (a, b), (lambda g: _unbroadcast(g, av.shape), lambda g: -_unbroadcast(g, bv.shape)))


def mul(a, b):
    av, bv = value_of(a), value_of(b)
    _check_broadcast(av.shape, bv.shape)
    return _emit(
        av * bv,
        (a, b),
        (lambda g: _unbroadcast(g * bv, av.shape), lambda g: _unbroadcast(g * av, bv.shape)),
    )


def div(a, b):
    av, bv = value_of(a), value_of(b)
    _check_broadcast(av.shape, bv.shape)
    out = av / bv
    return _emit(
        out,
        (a, b),
        (lambda g: _unbroadcast(g / bv, av.shape), lambda g: _unbroadcast(-g * out / bv, bv.shape)),
    )


def neg(a):
    return _emit(-value_of(a), (a,), (lambda g: -g,))


def square(a):
    av = value_of(a)
    return _emit(av * av, (a,), (lambda g: 2.0 * av * g,))


def abs_(a):
    """Absolute value; the derivative at 0 is taken as 0."""
    av = value_of(a)
    return _emit(np.abs(av), (a,), (lambda g: np.sign(av) * g,))


def exp(a):
    out = np.exp(value_of(a))
    return _emit(out, (a,), (lambda g: out * g,))


def log(a):
    av = value_of(a)
    return _emit(np.log(av), (a,), (lambda g: g / av,))


def maximum(a, c):
    """``max(a, c)`` against a constant ``c``."""
    av = value_of(a)
    mask = av > c
    return _emit(np.where(mask, av, c), (a,), (lambda g: _unbroadcast(g * mask, av.shape),))


def elu(a, alpha=1.0):
    av = value_of(a)
    pos = av > 0
    neg_exp = np.exp(np.minimum(av, 0.0))
    out = np.where(pos, av, alpha * (neg_exp - 1.0))
    return _emit(out, (a,), (lambda g: g * np.where(pos, 1.0, alpha * neg_exp),))


def softplus(a):
    av = value_of(a)
    out = np.logaddexp(0.0, av)
    sig = np.exp(av - out)
    return _emit(out, (a,), (lambda g: g * sig,))


def softmax(a, axis=-1):
    av = value_of(a)
    e = np.exp(av - av.max(axis=axis, keepdims=True))
    s = e / e.sum(axis=axis, keepdims=True)
    return _emit(s, (a,), (lambda g: s * (g - np.sum(g * s, axis=axis, keepdims=True)),))


# reductions and linear algebra ---------------------------------------------


def sum_(a, axis=None, keepdims=False):
    av = value_of(a)
    out = np.sum(av, axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, av.shape).copy()

    return _emit(out, (a,), (vjp,))


def mean(a, axis=None, keepdims=False):
    av = value_of(a)
    count = av.size if axis is None else np.prod([av.shape[i] for i in np.atleast_1d(axis)])
    return div(sum_(a, axis, keepdims), float(count))


def matvec(M, v):
    """``M @ v`` over the last axes, broadcasting leading (batch) axes."""
    Mv, vv = value_of(M), value_of(v)
    if Mv.shape[-1] != vv.shape[-1]:
        raise DimensionError(f"matvec shapes {Mv.shape} and {vv.shape} do not align")
    out = (Mv @ vv[..., None])[..., 0]
    return _emit(
        out,
        (M, v),
        (
            lambda g: _unbroadcast(g[..., :, None] * vv[..., None, :], Mv.shape),
            lambda g: _unbroadcast((np.swapaxes(Mv, -1, -2) @ g[..., None])[..., 0], vv.shape),
        ),
    )


def matmul(A, B):
    Av, Bv = value_of(A), value_of(B)
    if Av.ndim < 2 or Bv.ndim < 2 or Av.shape[-1] != Bv.shape[-2]:
        raise DimensionError(f"matmul shapes {Av.shape} and {Bv.shape} do not align")
    return _emit(
        Av @ Bv,
        (A, B),
        (
            lambda g: _unbroadcast(g @ np.swapaxes(Bv, -1, -2), Av.shape),
            lambda g: _unbroadcast(np.swapaxes(Av, -1, -2) @ g, Bv.shape),
        ),
    )


# structural ----------------------------------------------------------------


def concatenate(parts, axis=-1):
    vals = [value_of(p) for p in parts]
    out = np.concatenate(vals, axis=axis)
    bounds = np.cumsum([v.shape[axis] for v in vals])[:-1]

    def make(k):
        return lambda g: np.split(g, bounds, axis=axis)[k]

    return _emit(out, tuple(parts), tuple(make(k) for k in range(len(parts))))


def reshape(a, shape):
    av = value_of(a)
    return _emit(av.reshape(shape), (a,), (lambda g: g.reshape(av.shape),))


def getitem(a, idx):
    """Basic (slice/integer) indexing only."""
    av = value_of(a)

    def vjp(g):
        out = np.zeros_like(av)
        out[idx] = g
        return out

    return _emit(av[idx], (a,), (vjp,))
