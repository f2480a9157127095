"""Reverse-mode differentiation on a linear tape.

Variables hold float64 numpy arrays; every primitive records its output,
its parents, and a vector-Jacobian closure onto the owning tape, so the
backward sweep is a single reversed pass over the record in construction
order (deterministic by design). Primitives accept plain arrays as well:
with no tape variable among the arguments they just compute the forward
value, which gives a free gradient-less evaluation mode through the same
formulas.

Non-finite adjoints abort the sweep with a diagnostic naming the primitive
that produced them; subgradient conventions at kinks are: 0 at the zero
vector for norms, 0 at the origin for abs, and 0 outside the clamp
interval.
"""

from __future__ import annotations

import math

import numpy as np

from . import special

_SQRT_PI = math.sqrt(math.pi)
_erfcx_vec = np.vectorize(special.erfcx, otypes=[float])


class TapeError(RuntimeError):
    """Raised when backward produces a NaN or Inf adjoint."""


class Var:
    """A tape-tracked array."""

    __slots__ = ("value", "grad", "op", "parents", "vjp", "tape")

    # keep numpy from consuming Vars elementwise in mixed expressions like
    # ndarray * Var; returning NotImplemented routes them to the r-ops
    __array_ufunc__ = None

    def __init__(self, value, tape, op="leaf", parents=(), vjp=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self.op = op
        self.parents = parents
        self.vjp = vjp
        self.tape = tape

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Var(op={self.op!r}, shape={self.value.shape})"

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
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


class Tape:
    """Records primitives in construction order and replays them backward."""

    def __init__(self, check_finite: bool = True):
        self.nodes: list[Var] = []
        self.check_finite = check_finite

    def leaf(self, value) -> Var:
        v = Var(value, self)
        self.nodes.append(v)
        return v

    def record(self, op, value, parents, vjp) -> Var:
        v = Var(value, self, op=op, parents=tuple(parents), vjp=vjp)
        self.nodes.append(v)
        return v

    def zero_grads(self) -> None:
        for v in self.nodes:
            v.grad = None

    def backward(self, out: Var, seed=None) -> None:
        """Accumulate d(out)/d(leaf) into every reachable ``Var.grad``."""
        if out.tape is not self:
            raise ValueError("output does not belong to this tape")
        if seed is None:
            seed = np.ones_like(out.value)
        out.grad = np.asarray(seed, dtype=float) + (
            0.0 if out.grad is None else out.grad
        )
        for node in reversed(self.nodes):
            if node.grad is None or node.vjp is None:
                continue
            partials = node.vjp(node.grad)
            for parent, partial in zip(node.parents, partials):
                if partial is None or not isinstance(parent, Var):
                    continue
                if self.check_finite and not np.all(np.isfinite(partial)):
                    raise TapeError(
                        f"non-finite adjoint produced by backward of '{node.op}'"
                    )
                if parent.grad is None:
                    parent.grad = partial.copy() if partial is node.grad else partial
                else:
                    parent.grad = parent.grad + partial


def _val(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=float)


def _tape_of(*args):
    for a in args:
        if isinstance(a, Var):
            return a.tape
    return None


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum ``g`` back down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b):
    t = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av + bv
    if t is None:
        return out

    def vjp(g):
        return _unbroadcast(g, av.shape), _unbroadcast(g, bv.shape)

    return t.record("add", out, (a, b), vjp)


def sub(a, b):
    t = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av - bv
    if t is None:
        return out

    def vjp(g):
        return _unbroadcast(g, av.shape), _unbroadcast(-g, bv.shape)

    return t.record("sub", out, (a, b), vjp)


def neg(a):
    t = _tape_of(a)
    out = -_val(a)
    if t is None:
        return out
    return t.record("neg", out, (a,), lambda g: (-g,))


def mul(a, b):
    t = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av * bv
    if t is None:
        return out

    def vjp(g):
        return _unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)

    return t.record("mul", out, (a, b), vjp)


def div(a, b):
    t = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av / bv
    if t is None:
        return out

    def vjp(g):
        return (
            _unbroadcast(g / bv, av.shape),
            _unbroadcast(-g * av / (bv * bv), bv.shape),
        )

    return t.record("div", out, (a, b), vjp)


def matmul(a, b):
    t = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av @ bv
    if t is None:
        return out

    def vjp(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        if av.ndim == 1 and bv.ndim == 2:
            return bv @ g, np.outer(av, g)
        raise TapeError("matmul supports 1-D/2-D operands only")

    return t.record("matmul", out, (a, b), vjp)


def transpose(a):
    t = _tape_of(a)
    out = _val(a).T
    if t is None:
        return out
    return t.record("transpose", out, (a,), lambda g: (g.T,))


def tanh(a):
    t = _tape_of(a)
    out = np.tanh(_val(a))
    if t is None:
        return out
    return t.record("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def artanh(a):
    t = _tape_of(a)
    av = _val(a)
    out = np.arctanh(av)
    if t is None:
        return out
    return t.record("artanh", out, (a,), lambda g: (g / (1.0 - av * av),))


def arccos(a):
    t = _tape_of(a)
    av = _val(a)
    out = np.arccos(av)
    if t is None:
        return out
    return t.record("arccos", out, (a,), lambda g: (-g / np.sqrt(1.0 - av * av),))


def norm(a, axis=-1, keepdims=False):
    """Euclidean norm along ``axis``; subgradient 0 at the zero vector."""
    t = _tape_of(a)
    av = _val(a)
    out = np.linalg.norm(av, axis=axis, keepdims=keepdims)
    if t is None:
        return out
    r = out if keepdims else np.expand_dims(out, axis)

    def vjp(g):
        ge = g if keepdims else np.expand_dims(g, axis)
        return (np.where(r > 0.0, ge * av / np.where(r > 0.0, r, 1.0), 0.0),)

    return t.record("norm", out, (a,), vjp)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # stable in both tails
    e = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def logistic(a):
    t = _tape_of(a)
    out = _sigmoid(_val(a))
    if t is None:
        return out
    return t.record("logistic", out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a):
    t = _tape_of(a)
    av = _val(a)
    out = np.logaddexp(0.0, av)
    if t is None:
        return out
    s = _sigmoid(av)
    return t.record("softplus", out, (a,), lambda g: (g * s,))


def log(a):
    t = _tape_of(a)
    av = _val(a)
    out = np.log(av)
    if t is None:
        return out
    return t.record("log", out, (a,), lambda g: (g / av,))


def exp(a):
    t = _tape_of(a)
    out = np.exp(_val(a))
    if t is None:
        return out
    return t.record("exp", out, (a,), lambda g: (g * out,))


def sqrt(a):
    t = _tape_of(a)
    out = np.sqrt(_val(a))
    if t is None:
        return out
    return t.record("sqrt", out, (a,), lambda g: (g / (2.0 * out),))


def clamp(a, lo=None, hi=None):
    """Clip to [lo, hi]; gradient passes only strictly inside the interval."""
    t = _tape_of(a)
    av = _val(a)
    lo_ = -np.inf if lo is None else lo
    hi_ = np.inf if hi is None else hi
    out = np.clip(av, lo_, hi_)
    if t is None:
        return out
    mask = (av > lo_) & (av < hi_)
    return t.record("clamp", out, (a,), lambda g: (g * mask,))


def sum_(a, axis=None, keepdims=False):
    t = _tape_of(a)
    av = _val(a)
    out = np.sum(av, axis=axis, keepdims=keepdims)
    if t is None:
        return out

    def vjp(g):
        ge = np.asarray(g)
        if axis is not None and not keepdims:
            ge = np.expand_dims(ge, axis)
        return (np.broadcast_to(ge, av.shape).copy(),)

    return t.record("sum", out, (a,), vjp)


def mean(a, axis=None, keepdims=False):
    av = _val(a)
    n = av.size if axis is None else av.shape[axis]
    return div(sum_(a, axis=axis, keepdims=keepdims), float(n))


def softmax(a, axis=-1):
    t = _tape_of(a)
    av = _val(a)
    shifted = av - np.max(av, axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=axis, keepdims=True)
    if t is None:
        return out

    def vjp(g):
        inner = np.sum(g * out, axis=axis, keepdims=True)
        return (out * (g - inner),)

    return t.record("softmax", out, (a,), vjp)


def relu(a):
    t = _tape_of(a)
    av = _val(a)
    out = np.maximum(av, 0.0)
    if t is None:
        return out
    return t.record("relu", out, (a,), lambda g: (g * (av > 0.0),))


def absval(a):
    """Absolute value with subgradient 0 at the origin."""
    t = _tape_of(a)
    av = _val(a)
    out = np.abs(av)
    if t is None:
        return out
    return t.record("abs", out, (a,), lambda g: (g * np.sign(av),))


def gather_rows(a, idx):
    """Select rows by integer index; backward scatter-adds."""
    t = _tape_of(a)
    av = _val(a)
    idx = np.asarray(idx, dtype=int)
    out = av[idx]
    if t is None:
        return out

    def vjp(g):
        z = np.zeros_like(av)
        np.add.at(z, idx, g)
        return (z,)

    return t.record("gather_rows", out, (a,), vjp)


def take_cols(a, cols):
    """Select columns by integer index; indices must be unique."""
    t = _tape_of(a)
    av = _val(a)
    cols = np.asarray(cols, dtype=int)
    if np.unique(cols).size != cols.size:
        raise ValueError("take_cols requires unique column indices")
    out = av[:, cols]
    if t is None:
        return out

    def vjp(g):
        z = np.zeros_like(av)
        z[:, cols] = g
        return (z,)

    return t.record("take_cols", out, (a,), vjp)


def erfcx(a):
    """Scaled complementary error function, elementwise."""
    t = _tape_of(a)
    av = _val(a)
    out = _erfcx_vec(av)
    if t is None:
        return out

    def vjp(g):
        return (g * (2.0 * av * out - 2.0 / _SQRT_PI),)

    return t.record("erfcx", out, (a,), vjp)
