"""Minimal reverse-mode accumulation over numpy arrays.

A ``Var`` wraps a float64 ndarray and records how it was produced; calling
``backward()`` on a scalar output walks the recorded trace once in reverse
topological order and accumulates adjoints into every reachable leaf. The op
set is deliberately small: exactly what the loss pipelines of this package
need. Everything is single-threaded and deterministic (fixed traversal and
reduction order).

Non-Var operands are treated as constants; no gradient flows into them.
"""

from __future__ import annotations

import numpy as np

from .. import backend


def _val(x):
    if isinstance(x, Var):
        return x.value
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcasted adjoint back to the operand's shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _accum(x, g):
    if not isinstance(x, Var):
        return
    if x.grad is None:
        x.grad = np.array(g, dtype=np.float64)  # copy: g may be shared
    else:
        x.grad += g


def _accum_owned(x, g):
    """Accumulate an adjoint the caller freshly allocated (no defensive copy)."""
    if not isinstance(x, Var):
        return
    if x.grad is None:
        x.grad = g
    else:
        x.grad += g


class Var:
    __slots__ = ("value", "grad", "_parents", "_backward")

    # make ndarray <op> Var defer to Var's reflected operators
    __array_ufunc__ = None

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def backward(self, seed=None):
        """Accumulate adjoints of this output into every reachable Var."""
        self.grad = np.ones_like(self.value) if seed is None else np.asarray(seed, dtype=np.float64)
        order: list[Var] = []
        seen: set[int] = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator sugar -------------------------------------------------
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

    def __pow__(self, p):
        return pow_const(self, p)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


def _parents_of(*xs):
    return tuple(x for x in xs if isinstance(x, Var))


def add(a, b):
    av, bv = _val(a), _val(b)
    out = av + bv

    def bw(g):
        if isinstance(a, Var):
            _accum(a, _unbroadcast(g, av.shape))
        if isinstance(b, Var):
            _accum(b, _unbroadcast(g, bv.shape))

    return Var(out, _parents_of(a, b), bw)


def sub(a, b):
    av, bv = _val(a), _val(b)

    def bw(g):
        if isinstance(a, Var):
            _accum(a, _unbroadcast(g, av.shape))
        if isinstance(b, Var):
            _accum(b, _unbroadcast(-g, bv.shape))

    return Var(av - bv, _parents_of(a, b), bw)


def neg(a):
    def bw(g):
        _accum(a, -g)

    return Var(-_val(a), _parents_of(a), bw)


def mul(a, b):
    av, bv = _val(a), _val(b)

    def bw(g):
        if isinstance(a, Var):
            _accum_owned(a, _unbroadcast(g * bv, av.shape))
        if isinstance(b, Var):
            _accum_owned(b, _unbroadcast(g * av, bv.shape))

    return Var(av * bv, _parents_of(a, b), bw)


def div(a, b):
    av, bv = _val(a), _val(b)
    out = av / bv

    def bw(g):
        if isinstance(a, Var):
            _accum_owned(a, _unbroadcast(g / bv, av.shape))
        if isinstance(b, Var):
            _accum_owned(b, _unbroadcast(-g * out / bv, bv.shape))

    return Var(out, _parents_of(a, b), bw)


def pow_const(a, p):
    av = _val(a)
    out = av ** p

    def bw(g):
        _accum_owned(a, g * p * av ** (p - 1))

    return Var(out, _parents_of(a), bw)


def sqrt(a):
    av = _val(a)
    out = np.sqrt(av)

    def bw(g):
        _accum_owned(a, g * 0.5 / out)

    return Var(out, _parents_of(a), bw)


def act(a, code: int, order: int = 0):
    """Apply an activation derivative of the given order; backward uses order+1."""
    av = _val(a)

    def bw(g):
        _accum_owned(a, g * backend.act_eval(code, av, order + 1))

    return Var(backend.act_eval(code, av, order), _parents_of(a), bw)


def dense(y, w, b=None):
    """Affine map (B, i) @ (o, i)^T + (o,) -> (B, o); any operand may be a Var."""
    yv, wv = _val(y), _val(w)
    out = yv @ wv.T
    if b is not None:
        out = out + _val(b)

    def bw(g):
        if isinstance(y, Var):
            _accum_owned(y, g @ wv)
        if isinstance(w, Var):
            _accum_owned(w, g.T @ yv)
        if b is not None and isinstance(b, Var):
            _accum_owned(b, g.sum(axis=0))

    return Var(out, _parents_of(y, w, b), bw)


def linear_channels(y, w):
    """Channelwise affine map (B, i, D) x (o, i) -> (B, o, D) via broadcast matmul."""
    yv, wv = _val(y), _val(w)
    out = np.matmul(wv, yv)

    def bw(g):
        if isinstance(y, Var):
            _accum_owned(y, np.matmul(wv.T, g))
        if isinstance(w, Var):
            # contract batch and channel axes with one GEMM
            o = g.shape[1]
            i = yv.shape[1]
            g2 = np.ascontiguousarray(g.transpose(0, 2, 1)).reshape(-1, o)
            y2 = np.ascontiguousarray(yv.transpose(0, 2, 1)).reshape(-1, i)
            _accum_owned(w, g2.T @ y2)

    return Var(out, _parents_of(y, w), bw)


def jet_act(v, g, h, code: int):
    """Fused jet chain rule through an elementwise activation.

    Forward runs on the kernel backend; the three outputs carry independent
    backward closures so the trace stays correct even if only some of them
    feed the loss.
    """
    vv, gv, hv = _val(v), _val(g), _val(h)
    a, d1, d2, ag, ah = backend.jet_act_forward(code, vv, gv, hv)

    def bw_a(gr):
        _accum_owned(v, gr * d1)

    def bw_g(gr):
        vb, gb = backend.jet_bwg(gv, d1, d2, gr)
        _accum_owned(v, vb)
        _accum_owned(g, gb)

    def bw_h(gr):
        vb, gb, hb = backend.jet_bwh(code, vv, gv, hv, d1, d2, gr)
        _accum_owned(v, vb)
        _accum_owned(g, gb)
        _accum_owned(h, hb)

    pv = _parents_of(v)
    pvg = _parents_of(v, g)
    pvgh = _parents_of(v, g, h)
    return Var(a, pv, bw_a), Var(ag, pvg, bw_g), Var(ah, pvgh, bw_h)


def getitem(a, idx):
    """Basic (slice/int/tuple) indexing only; advanced indexing is unsupported."""
    av = _val(a)
    out = av[idx]

    def bw(g):
        buf = np.zeros_like(av)
        buf[idx] += g
        _accum(a, buf)

    return Var(out, _parents_of(a), bw)


def reshape(a, shape):
    av = _val(a)

    def bw(g):
        _accum(a, g.reshape(av.shape))

    return Var(av.reshape(shape), _parents_of(a), bw)


def expand_last(a):
    av = _val(a)
    return reshape(a, av.shape + (1,))


def concat(parts, axis=0):
    vals = [_val(p) for p in parts]
    sizes = [v.shape[axis] for v in vals]
    out = np.concatenate(vals, axis=axis)

    def bw(g):
        start = 0
        for p, n in zip(parts, sizes):
            if isinstance(p, Var):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(start, start + n)
                _accum(p, g[tuple(sl)])
            start += n

    return Var(out, _parents_of(*parts), bw)


def sum_(a):
    av = _val(a)

    def bw(g):
        _accum(a, np.broadcast_to(g, av.shape))

    return Var(av.sum(), _parents_of(a), bw)


def mean(a):
    av = _val(a)
    n = av.size

    def bw(g):
        _accum(a, np.broadcast_to(g / n, av.shape))

    return Var(av.mean(), _parents_of(a), bw)
