"""Independent 1D finite-difference reference: Crank-Nicolson in time,
central differences in space.

Used to verify trained networks (and exact solutions) against a numerical
method with a completely different error structure. Dirichlet rows are
pinned to the prescribed values; Neumann faces use second-order ghost
points; the tridiagonal system is solved once per step.

Advection is discretized centrally without stabilization: the Peclet
numbers of every bundled problem are far below the oscillation threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import backend, metrics
from .diffengine.api import predict_values
from .errors import ShapeMismatch, SingularSystem
from .metrics import ErrorSummary
from .pde import AdeProblem


@dataclass
class FdGrid:
    """Uniform space-time grid with the computed solution u[time, space]."""

    x: np.ndarray   # (nx+1,)
    t: np.ndarray   # (nt+1,)
    u: np.ndarray   # (nt+1, nx+1)

    def mesh_points(self) -> np.ndarray:
        T, X = np.meshgrid(self.t, self.x, indexing="ij")
        return np.column_stack([X.ravel(), T.ravel()])


def _forcing_rows(problem: AdeProblem, xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """f on the full grid, evaluated row by row to bound memory."""
    out = np.empty((ts.size, xs.size))
    for j, tj in enumerate(ts):
        P = np.column_stack([xs, np.full(xs.size, tj)])
        out[j] = problem.forcing.values(P)
    return out


def crank_nicolson_1d(problem: AdeProblem, nx: int, nt: int) -> FdGrid:
    """Second-order-in-space-and-time solve of a 1D problem on an (nx, nt) grid."""
    if problem.dim != 1:
        raise ShapeMismatch("the finite-difference oracle is 1D only")
    if nx < 3 or nt < 3:
        raise ValueError("need nx >= 3 and nt >= 3")
    (a, b), = problem.domain.bounding_box()
    t0, t1 = problem.bc.time_range
    xs = np.linspace(a, b, nx + 1)
    ts = np.linspace(t0, t1, nt + 1)
    dx = (b - a) / nx
    dt = (t1 - t0) / nt
    p = problem.coeffs.diffusion
    q = problem.coeffs.advection[0]
    r = p * dt / (2.0 * dx * dx)
    s = q * dt / (4.0 * dx)

    f = _forcing_rows(problem, xs, ts)
    fsum_half = 0.5 * dt * (f[:-1] + f[1:])

    u0 = np.asarray(problem.bc.initial.values(
        np.column_stack([xs, np.full(xs.size, t0)])))

    faces = problem.domain.faces()
    left, right = faces[0], faces[1]

    def bc_values(face):
        cond = problem.bc.conditions[face.id]
        P = np.column_stack([np.full(ts.size, face.value), ts])
        vals = np.asarray(cond.data.values(P))
        return cond.kind, vals

    left_kind, left_vals = bc_values(left)
    right_kind, right_vals = bc_values(right)

    lower = np.full(nx + 1, -(r + s))
    diag = np.full(nx + 1, 1.0 + 2.0 * r)
    upper = np.full(nx + 1, -(r - s))
    if left_kind == "dirichlet":
        diag[0], upper[0] = 1.0, 0.0
        left_type, left_c = 0, left_vals[1:]
    else:
        upper[0] = -2.0 * r
        left_type = 1
        left_c = -(r + s) * 2.0 * dx * (left_vals[:-1] + left_vals[1:])
    if right_kind == "dirichlet":
        diag[-1], lower[-1] = 1.0, 0.0
        right_type, right_c = 0, right_vals[1:]
    else:
        lower[-1] = -2.0 * r
        right_type = 1
        right_c = (r - s) * 2.0 * dx * (right_vals[:-1] + right_vals[1:])
    lower[0] = 0.0
    upper[-1] = 0.0

    U = backend.cn_march(u0, fsum_half, left_type, np.asarray(left_c, dtype=np.float64),
                         right_type, np.asarray(right_c, dtype=np.float64),
                         lower, diag, upper, r, s)
    if U is None:
        raise SingularSystem("tridiagonal factorization broke down")
    return FdGrid(xs, ts, U)


def grid_predictor(grid: FdGrid):
    """Bilinear interpolant of a grid; exact at the grid's own nodes."""

    class _Interp:
        def __init__(self, g: FdGrid):
            self._f = RegularGridInterpolator((g.t, g.x), g.u, method="linear",
                                              bounds_error=False, fill_value=None)

        def values(self, X):
            X = np.atleast_2d(np.asarray(X, dtype=np.float64))
            return self._f(np.column_stack([X[:, 1], X[:, 0]]))

        __call__ = values

    return _Interp(grid)


def cross_check(predictor, grid: FdGrid, chunk: int = 200_000) -> ErrorSummary:
    """MSE/REL of a predictor sampled at every node of the grid."""
    P = grid.mesh_points()
    vals = np.empty(P.shape[0])
    for i in range(0, P.shape[0], chunk):
        vals[i:i + chunk] = predict_values(predictor, P[i:i + chunk])
    return metrics.summarize(vals, grid.u.ravel())


def convergence_orders(problem: AdeProblem, sizes=((50, 50), (100, 100), (200, 200))):
    """Empirical orders from relative L2 *norms* against the exact solution.

    Note the package's REL metric is the squared norm; a second-order scheme
    divides the norm by ~4 per refinement (and the squared REL by ~16), so
    orders are computed from sqrt(REL).
    """
    if problem.exact is None:
        raise ValueError("convergence study needs an exact solution")
    norms = []
    for nx, nt in sizes:
        grid = crank_nicolson_1d(problem, nx, nt)
        summary = cross_check(problem.exact, grid)
        norms.append(np.sqrt(summary.rel))
    orders = [float(np.log2(norms[i] / norms[i + 1])) for i in range(len(norms) - 1)]
    return norms, orders
