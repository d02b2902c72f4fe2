"""Second-order forward-mode jets.

A ``JetArray`` carries a value array of shape S together with first and pure
second derivatives with respect to the D input coordinates (shape S + (D,)).
Mixed second derivatives are never tracked: every PDE residual in this
package needs only the Laplacian diagonal.

Elements may be plain ndarrays (evaluation) or tape ``Var``s (training), so
the same expression code serves both; arithmetic never mutates operands.
"""

from __future__ import annotations

import numpy as np

from .. import backend
from . import activations, tape
from .tape import Var


def _is_var(x) -> bool:
    return isinstance(x, Var)


def _expand(x):
    """Append a trailing broadcast axis (S -> S+(1,))."""
    if _is_var(x):
        return tape.expand_last(x)
    return np.asarray(x)[..., None]


class JetArray:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @property
    def dim(self) -> int:
        g = self.grad.value if _is_var(self.grad) else self.grad
        return g.shape[-1]

    def arrays(self):
        """Concrete (val, grad, hess) ndarrays, unwrapping tape Vars."""
        unwrap = lambda x: x.value if _is_var(x) else np.asarray(x)
        return unwrap(self.val), unwrap(self.grad), unwrap(self.hess)

    # -- algebra ---------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, JetArray):
            return JetArray(self.val + other.val, self.grad + other.grad,
                            self.hess + other.hess)
        return JetArray(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, JetArray):
            return JetArray(self.val - other.val, self.grad - other.grad,
                            self.hess - other.hess)
        return JetArray(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return JetArray(-self.val, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, JetArray):
            fe, ge = _expand(self.val), _expand(other.val)
            return JetArray(
                self.val * other.val,
                self.grad * ge + fe * other.grad,
                self.hess * ge + 2.0 * self.grad * other.grad + fe * other.hess,
            )
        return JetArray(self.val * other, self.grad * _maybe_expand_const(other),
                        self.hess * _maybe_expand_const(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, JetArray):
            return self * (1.0 / np.asarray(other, dtype=np.float64))
        hv = self.val / other.val
        ge_inv = 1.0 / _expand(other.val)
        hg = (self.grad - _expand(hv) * other.grad) * ge_inv
        hh = (self.hess - 2.0 * hg * other.grad - _expand(hv) * other.hess) * ge_inv
        return JetArray(hv, hg, hh)

    def __rtruediv__(self, other):
        return constant(other, self).__truediv__(self)

    def __pow__(self, p):
        return power(self, p)

    def apply(self, kind: str) -> "JetArray":
        """Push the jet through a registered scalar activation."""
        code = activations.code_of(kind)
        if _is_var(self.val) or _is_var(self.grad) or _is_var(self.hess):
            a, ag, ah = tape.jet_act(self.val, self.grad, self.hess, code)
            return JetArray(a, ag, ah)
        a, _, _, ag, ah = backend.jet_act_forward(
            code, np.asarray(self.val, dtype=np.float64),
            np.asarray(self.grad, dtype=np.float64),
            np.asarray(self.hess, dtype=np.float64))
        return JetArray(a, ag, ah)


def _maybe_expand_const(c):
    """Expand a constant for grad/hess broadcast only when it is an array."""
    arr = np.asarray(c)
    if arr.ndim == 0:
        return arr
    return arr[..., None]


def constant(value, like: JetArray) -> JetArray:
    """A jet with zero derivatives, shaped to combine with ``like``."""
    _, g, _ = like.arrays()
    val = np.broadcast_to(np.asarray(value, dtype=np.float64), g.shape[:-1]).copy()
    return JetArray(val, np.zeros_like(g), np.zeros_like(g))


def coordinate_jets(X: np.ndarray) -> list[JetArray]:
    """Seed jets for a batch of points X (B, D): one jet per coordinate."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    b, d = X.shape
    out = []
    for k in range(d):
        grad = np.zeros((b, d))
        grad[:, k] = 1.0
        out.append(JetArray(X[:, k].copy(), grad, np.zeros((b, d))))
    return out


def power(j: JetArray, p) -> JetArray:
    """Jet of j**p for a constant real exponent."""
    if p == 2:
        return j * j
    fv = j.val
    fp = fv ** p
    fp1 = p * fv ** (p - 1)
    fp2 = p * (p - 1) * fv ** (p - 2)
    fe1 = _expand(fp1)
    return JetArray(fp, fe1 * j.grad,
                    _expand(fp2) * j.grad * j.grad + fe1 * j.hess)


def sqrt(j: JetArray) -> JetArray:
    return power(j, 0.5)


def sin(j):
    return j.apply("sin")


def cos(j):
    return j.apply("cos")


def exp(j):
    return j.apply("exp")


def tanh(j):
    return j.apply("tanh")


def sigmoid(j):
    return j.apply("sigmoid")


def gelu(j):
    return j.apply("gelu")
