"""Numba-compiled kernels; drop-in replacements for ``_kernels_numpy``.

The jet-activation kernels fuse the elementwise chain rule for (value,
gradient, hessian-diagonal) triples into single loops; the Crank-Nicolson
march runs the whole time loop with a precomputed Thomas factorization.
No fastmath: results must be deterministic and reduction order fixed.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._kernels_numpy import (
    COS,
    ELU,
    ENHANCED_TANH,
    EXP,
    GELU,
    LEAKY_RELU,
    LEAKY_SLOPE,
    LINEAR,
    RELU,
    SIGMOID,
    SIN,
    TANH,
)

_HALF_PI = 0.5 * math.pi
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


@njit(cache=True, inline="always")
def _act_scalar(code, x, order):
    if code == LINEAR:
        if order == 0:
            return x
        if order == 1:
            return 1.0
        return 0.0
    if code == SIN:
        if order == 0:
            return math.sin(x)
        if order == 1:
            return math.cos(x)
        if order == 2:
            return -math.sin(x)
        return -math.cos(x)
    if code == COS:
        if order == 0:
            return math.cos(x)
        if order == 1:
            return -math.sin(x)
        if order == 2:
            return -math.cos(x)
        return math.sin(x)
    if code == TANH:
        t = math.tanh(x)
        s = 1.0 - t * t
        if order == 0:
            return t
        if order == 1:
            return s
        if order == 2:
            return -2.0 * t * s
        return -2.0 * s * (1.0 - 3.0 * t * t)
    if code == ENHANCED_TANH:
        c = _HALF_PI
        t = math.tanh(c * x)
        s = 1.0 - t * t
        if order == 0:
            return t
        if order == 1:
            return c * s
        if order == 2:
            return -2.0 * c * c * t * s
        return -2.0 * c * c * c * s * (1.0 - 3.0 * t * t)
    if code == SIGMOID:
        sig = 1.0 / (1.0 + math.exp(-x))
        if order == 0:
            return sig
        d1 = sig * (1.0 - sig)
        if order == 1:
            return d1
        if order == 2:
            return d1 * (1.0 - 2.0 * sig)
        return d1 * (1.0 - 2.0 * sig) * (1.0 - 2.0 * sig) - 2.0 * d1 * d1
    if code == EXP:
        return math.exp(x)
    if code == GELU:
        phi = _INV_SQRT2PI * math.exp(-0.5 * x * x)
        if order == 0:
            return x * 0.5 * (1.0 + math.erf(x * _INV_SQRT2))
        if order == 1:
            return 0.5 * (1.0 + math.erf(x * _INV_SQRT2)) + x * phi
        if order == 2:
            return (2.0 - x * x) * phi
        return (x * x * x - 4.0 * x) * phi
    if code == RELU:
        if order == 0:
            return x if x > 0.0 else 0.0
        if order == 1:
            return 1.0 if x > 0.0 else 0.0
        return 0.0
    if code == LEAKY_RELU:
        if order == 0:
            return x if x > 0.0 else LEAKY_SLOPE * x
        if order == 1:
            return 1.0 if x > 0.0 else LEAKY_SLOPE
        return 0.0
    if code == ELU:
        if x > 0.0:
            if order == 0:
                return x
            if order == 1:
                return 1.0
            return 0.0
        e = math.exp(x)
        if order == 0:
            return e - 1.0
        return e
    return np.nan


@njit(cache=True)
def act_eval(code, x, order):
    out = np.empty_like(x)
    flat_in = x.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.shape[0]):
        flat_out[i] = _act_scalar(code, flat_in[i], order)
    return out


@njit(cache=True)
def jet_act_forward(code, v, g, h):
    n, d = g.shape
    a = np.empty(n)
    d1 = np.empty(n)
    d2 = np.empty(n)
    ag = np.empty((n, d))
    ah = np.empty((n, d))
    for i in range(n):
        x = v[i]
        a[i] = _act_scalar(code, x, 0)
        f1 = _act_scalar(code, x, 1)
        f2 = _act_scalar(code, x, 2)
        d1[i] = f1
        d2[i] = f2
        for k in range(d):
            gk = g[i, k]
            ag[i, k] = f1 * gk
            ah[i, k] = f2 * gk * gk + f1 * h[i, k]
    return a, d1, d2, ag, ah



@njit(cache=True)
def cn_march(u0, fsum_half, left_type, left_c, right_type, right_c,
             lower, diag, upper, r, s):
    nt = fsum_half.shape[0]
    nx1 = u0.shape[0]
    # Thomas factorization of the step-invariant implicit matrix
    cp = np.empty(nx1)
    minv = np.empty(nx1)
    m = diag[0]
    if m == 0.0:
        return np.empty((0, 0))
    minv[0] = 1.0 / m
    cp[0] = upper[0] * minv[0]
    for i in range(1, nx1):
        m = diag[i] - lower[i] * cp[i - 1]
        if m == 0.0:
            return np.empty((0, 0))
        minv[i] = 1.0 / m
        cp[i] = upper[i] * minv[i]

    U = np.empty((nt + 1, nx1))
    U[0] = u0
    rhs = np.empty(nx1)
    two_r = 2.0 * r
    for n in range(nt):
        u = U[n]
        for i in range(1, nx1 - 1):
            rhs[i] = ((r + s) * u[i - 1] + (1.0 - two_r) * u[i]
                      + (r - s) * u[i + 1] + fsum_half[n, i])
        if left_type == 0:
            rhs[0] = left_c[n]
        else:
            rhs[0] = ((1.0 - two_r) * u[0] + two_r * u[1]
                      + left_c[n] + fsum_half[n, 0])
        if right_type == 0:
            rhs[nx1 - 1] = right_c[n]
        else:
            rhs[nx1 - 1] = ((1.0 - two_r) * u[nx1 - 1] + two_r * u[nx1 - 2]
                            + right_c[n] + fsum_half[n, nx1 - 1])
        out = U[n + 1]
        out[0] = rhs[0] * minv[0]
        for i in range(1, nx1):
            out[i] = (rhs[i] - lower[i] * out[i - 1]) * minv[i]
        for i in range(nx1 - 2, -1, -1):
            out[i] -= cp[i] * out[i + 1]
    return U

@njit(cache=True)
def jet_bwg(g, d1, d2, agb):
    n, d = g.shape
    vb = np.empty(n)
    gb = np.empty((n, d))
    for i in range(n):
        f1 = d1[i]
        f2 = d2[i]
        acc = 0.0
        for k in range(d):
            acc += agb[i, k] * f2 * g[i, k]
            gb[i, k] = agb[i, k] * f1
        vb[i] = acc
    return vb, gb


@njit(cache=True)
def jet_bwh(code, v, g, h, d1, d2, ahb):
    n, d = g.shape
    vb = np.empty(n)
    gb = np.empty((n, d))
    hb = np.empty((n, d))
    for i in range(n):
        f1 = d1[i]
        f2 = d2[i]
        f3 = _act_scalar(code, v[i], 3)
        acc = 0.0
        for k in range(d):
            gk = g[i, k]
            acc += ahb[i, k] * (f3 * gk * gk + f2 * h[i, k])
            gb[i, k] = 2.0 * ahb[i, k] * f2 * gk
            hb[i, k] = ahb[i, k] * f1
        vb[i] = acc
    return vb, gb, hb
