"""Pure-numpy reference kernels.

Every hot kernel in the package has two implementations with identical
signatures: this module (vectorized numpy) and ``_kernels_numba`` (njit
loops). ``adepinn.backend`` picks one at import time.

Activation codes are fixed integers shared by both lanes; the numpy lane
evaluates derivative orders 0..3 with vectorized expressions.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

# activation codes (shared with the numba lane; order is part of the ABI)
LINEAR = 0
SIN = 1
COS = 2
TANH = 3
ENHANCED_TANH = 4
SIGMOID = 5
EXP = 6
GELU = 7
RELU = 8
LEAKY_RELU = 9
ELU = 10

LEAKY_SLOPE = 0.01
_HALF_PI = 0.5 * np.pi
_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def act_eval(code: int, x: np.ndarray, order: int) -> np.ndarray:
    """Evaluate an activation's derivative of the given order (0..3) elementwise."""
    if code == LINEAR:
        if order == 0:
            return np.asarray(x, dtype=np.float64)
        if order == 1:
            return np.ones_like(x)
        return np.zeros_like(x)
    if code == SIN:
        return (np.sin, np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z))[order](x)
    if code == COS:
        return (np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z), np.sin)[order](x)
    if code == TANH:
        t = np.tanh(x)
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
        t = np.tanh(c * x)
        s = 1.0 - t * t
        if order == 0:
            return t
        if order == 1:
            return c * s
        if order == 2:
            return -2.0 * c * c * t * s
        return -2.0 * c * c * c * s * (1.0 - 3.0 * t * t)
    if code == SIGMOID:
        sig = 1.0 / (1.0 + np.exp(-x))
        if order == 0:
            return sig
        d1 = sig * (1.0 - sig)
        if order == 1:
            return d1
        if order == 2:
            return d1 * (1.0 - 2.0 * sig)
        return d1 * (1.0 - 2.0 * sig) ** 2 - 2.0 * d1 * d1
    if code == EXP:
        return np.exp(x)
    if code == GELU:
        phi = _INV_SQRT2PI * np.exp(-0.5 * x * x)
        if order == 0:
            return x * 0.5 * (1.0 + erf(x * _INV_SQRT2))
        if order == 1:
            return 0.5 * (1.0 + erf(x * _INV_SQRT2)) + x * phi
        if order == 2:
            return (2.0 - x * x) * phi
        return (x * x * x - 4.0 * x) * phi
    if code == RELU:
        pos = x > 0.0
        if order == 0:
            return np.where(pos, x, 0.0)
        if order == 1:
            return np.where(pos, 1.0, 0.0)
        # second/third derivative at the kink defined as 0
        return np.zeros_like(x)
    if code == LEAKY_RELU:
        pos = x > 0.0
        if order == 0:
            return np.where(pos, x, LEAKY_SLOPE * x)
        if order == 1:
            return np.where(pos, 1.0, LEAKY_SLOPE)
        return np.zeros_like(x)
    if code == ELU:
        pos = x > 0.0
        e = np.exp(np.minimum(x, 0.0))
        if order == 0:
            return np.where(pos, x, e - 1.0)
        if order == 1:
            return np.where(pos, 1.0, e)
        return np.where(pos, 0.0, e)
    raise ValueError(f"unknown activation code {code}")


def jet_act_forward(code, v, g, h):
    """Push a (value, grad, hess-diag) jet through an elementwise activation.

    v: (N,), g/h: (N, D). Returns (a, d1, d2, ag, ah); d1/d2 are cached for
    the backward pass.
    """
    a = act_eval(code, v, 0)
    d1 = act_eval(code, v, 1)
    d2 = act_eval(code, v, 2)
    d1e = d1[:, None]
    ag = d1e * g
    ah = d2[:, None] * g * g + d1e * h
    return a, d1, d2, ag, ah



def cn_march(u0, fsum_half, left_type, left_c, right_type, right_c,
             lower, diag, upper, r, s):
    """Crank-Nicolson time march for the 1D advection-diffusion operator.

    u0: (nx+1,) initial values; fsum_half: (nt, nx+1) rows of (dt/2)(f^n+f^{n+1});
    *_type: 0 Dirichlet / 1 Neumann; *_c: (nt,) per-step boundary constants
    (pinned value for Dirichlet, ghost-point constant for Neumann).
    lower/diag/upper: (nx+1,) tridiagonal bands of the implicit matrix.
    Returns U with shape (nt+1, nx+1) or None if the solve breaks down.

    This lane assembles the right-hand side with numpy slicing and solves the
    banded system with LAPACK; the numba lane runs a cached Thomas sweep.
    """
    from scipy.linalg import LinAlgError, solve_banded

    nt = fsum_half.shape[0]
    nx1 = u0.shape[0]
    ab = np.zeros((3, nx1))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    U = np.empty((nt + 1, nx1))
    U[0] = u0
    rhs = np.empty(nx1)
    two_r = 2.0 * r
    for n in range(nt):
        u = U[n]
        rhs[1:-1] = ((r + s) * u[:-2] + (1.0 - two_r) * u[1:-1]
                     + (r - s) * u[2:] + fsum_half[n, 1:-1])
        if left_type == 0:
            rhs[0] = left_c[n]
        else:
            rhs[0] = ((1.0 - two_r) * u[0] + two_r * u[1]
                      + left_c[n] + fsum_half[n, 0])
        if right_type == 0:
            rhs[-1] = right_c[n]
        else:
            rhs[-1] = ((1.0 - two_r) * u[-1] + two_r * u[-2]
                       + right_c[n] + fsum_half[n, -1])
        try:
            U[n + 1] = solve_banded((1, 1), ab, rhs)
        except LinAlgError:
            return None
    return U

def jet_bwg(g, d1, d2, agb):
    """Adjoint pieces for the first-derivative output of jet_act_forward."""
    vb = np.einsum("nd,nd->n", agb, d2[:, None] * g)
    gb = agb * d1[:, None]
    return vb, gb


def jet_bwh(code, v, g, h, d1, d2, ahb):
    """Adjoint pieces for the second-derivative output of jet_act_forward."""
    d3 = act_eval(code, v, 3)
    vb = np.einsum("nd,nd->n", ahb, d3[:, None] * g * g + d2[:, None] * h)
    gb = 2.0 * ahb * d2[:, None] * g
    hb = ahb * d1[:, None]
    return vb, gb, hb
