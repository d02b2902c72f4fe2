"""Public derivative-engine operations.

A *predictor* is anything that yields scalar-field jets: either an object
with a ``jets(X)`` method returning a ``JetArray`` with value shape (B,), or
a plain callable ``f(x0, ..., xk)`` over coordinate jets built from
registered primitives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFinite
from .jets import JetArray, coordinate_jets
from .tape import Var


@dataclass
class Jet2:
    """Value, first derivatives, and pure second derivatives at one point."""

    value: float
    grad: np.ndarray
    hess_diag: np.ndarray


@dataclass
class ParamGradient:
    """Gradient entries aligned index-for-index with a parameter store."""

    entries: np.ndarray

    def __len__(self):
        return len(self.entries)


def predict_jets(predictor, X: np.ndarray) -> JetArray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if hasattr(predictor, "jets"):
        return predictor.jets(X)
    return predictor(*coordinate_jets(X))


def jet_batch(predictor, X: np.ndarray):
    """Evaluate jets over a batch; returns (value (B,), grad (B,D), hess (B,D))."""
    v, g, h = predict_jets(predictor, X).arrays()
    return np.asarray(v), np.asarray(g), np.asarray(h)


def predict_values(predictor, X: np.ndarray) -> np.ndarray:
    if hasattr(predictor, "values"):
        return np.asarray(predictor.values(np.atleast_2d(np.asarray(X, dtype=np.float64))))
    return jet_batch(predictor, X)[0]


def eval_jet2(predictor, point) -> Jet2:
    """Exact value/gradient/diagonal-hessian of a predictor at one point."""
    point = np.asarray(point, dtype=np.float64)
    v, g, h = jet_batch(predictor, point[None, :])
    out = Jet2(float(v[0]), g[0].copy(), h[0].copy())
    if not (np.isfinite(out.value) and np.isfinite(out.grad).all()
            and np.isfinite(out.hess_diag).all()):
        raise NonFinite(f"non-finite derivative at point {point.tolist()}")
    return out


def grad_params(loss, params) -> ParamGradient:
    """Exact gradient of ``loss`` with respect to every entry of a parameter store.

    ``loss`` receives a mapping from tensor name to tape Var (views of the
    flat parameter vector) and must return a scalar Var built from tape ops.
    """
    _, grad = value_and_grad(loss, params)
    return grad


def value_and_grad(loss, params):
    leaves = {slot.name: Var(params.tensor(slot.name)) for slot in params.layout}
    out = loss(leaves)
    if not isinstance(out, Var):
        raise TypeError("loss must return a tape Var; build it from tape operations")
    if out.value.size != 1:
        raise ValueError("loss must be scalar")
    out.backward()
    entries = np.zeros(params.size, dtype=np.float64)
    for slot in params.layout:
        g = leaves[slot.name].grad
        if g is not None:
            entries[slot.offset:slot.offset + slot.size] = g.ravel()
    if not np.isfinite(entries).all():
        raise NonFinite("parameter gradient contains NaN/Inf")
    value = float(out.value)
    if not np.isfinite(value):
        raise NonFinite("loss value is NaN/Inf")
    return value, ParamGradient(entries)


@dataclass
class DerivativeReport:
    """Engine-vs-central-finite-difference comparison at one point (report only)."""

    value: float
    first_engine: np.ndarray
    first_fd: np.ndarray
    second_engine: np.ndarray
    second_fd: np.ndarray
    first_abs: np.ndarray
    second_abs: np.ndarray
    first_rel: np.ndarray
    second_rel: np.ndarray

    @property
    def max_rel(self) -> float:
        return float(max(self.first_rel.max(), self.second_rel.max()))


def _rel(a, b):
    return np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def check_derivatives(predictor, point, fd_step: float) -> DerivativeReport:
    """Compare engine derivatives against central finite differences of the values."""
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    point = np.asarray(point, dtype=np.float64)
    d = point.shape[0]
    jet = eval_jet2(predictor, point)

    fd1 = np.zeros(d)
    fd2 = np.zeros(d)
    f0 = jet.value
    for k in range(d):
        step = np.zeros(d)
        step[k] = fd_step
        fp = float(predict_values(predictor, (point + step)[None, :])[0])
        fm = float(predict_values(predictor, (point - step)[None, :])[0])
        fd1[k] = (fp - fm) / (2.0 * fd_step)
        fd2[k] = (fp - 2.0 * f0 + fm) / (fd_step * fd_step)

    return DerivativeReport(
        value=f0,
        first_engine=jet.grad, first_fd=fd1,
        second_engine=jet.hess_diag, second_fd=fd2,
        first_abs=np.abs(jet.grad - fd1), second_abs=np.abs(jet.hess_diag - fd2),
        first_rel=_rel(jet.grad, fd1), second_rel=_rel(jet.hess_diag, fd2),
    )
