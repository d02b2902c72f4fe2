"""Advection-diffusion problems: geometry, boundary data, residuals.

The governing operator is u_t - p*laplace(u) + q . grad(u) - f with scalar
diffusion p > 0 and an advection vector q. Forcing terms are never written
by hand: they are derived mechanically from a problem's exact solution, so
the exact solution's residual vanishes identically by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .diffengine import jets as jm
from .diffengine.api import predict_jets
from .diffengine.jets import JetArray, coordinate_jets
from .errors import FaceMismatch, NonFinite, ShapeMismatch

ON_FACE_TOL = 1e-9


# -- scalar fields -------------------------------------------------------------

class ScalarField:
    """A scalar function of (x..., t) built from engine primitives.

    ``fn`` receives one coordinate jet per input dimension and returns a
    JetArray, so the field is differentiable end to end.
    """

    def __init__(self, fn: Callable[..., JetArray], dim: int, name: str = ""):
        self.fn = fn
        self.dim = dim
        self.name = name

    def jets(self, X: np.ndarray) -> JetArray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ShapeMismatch(f"field {self.name!r} expects dim {self.dim}, got {X.shape[1]}")
        out = self.fn(*coordinate_jets(X))
        if isinstance(out, JetArray):
            return out
        # constant-valued expression (no jet ops used)
        b, d = X.shape
        return JetArray(np.full(b, float(out)), np.zeros((b, d)), np.zeros((b, d)))

    def values(self, X: np.ndarray) -> np.ndarray:
        return self.jets(X).arrays()[0]

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.values(X)


# -- geometry ------------------------------------------------------------------

@dataclass(frozen=True)
class Face:
    """One boundary component: an axis-aligned box face or a shell sphere."""

    id: int
    name: str
    axis: Optional[int]  # fixed-coordinate axis; None for spherical faces
    side: Optional[int]  # 0 low, 1 high; None for spherical faces
    value: float         # fixed coordinate, or sphere radius


class Box:
    """Axis-aligned product of intervals."""

    kind = "box"

    def __init__(self, bounds: Sequence[tuple[float, float]]):
        self.bounds = tuple((float(a), float(b)) for a, b in bounds)
        for a, b in self.bounds:
            if not a < b:
                raise ValueError("box bounds must satisfy lo < hi")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def bounding_box(self) -> tuple[tuple[float, float], ...]:
        return self.bounds

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        ok = np.ones(X.shape[0], dtype=bool)
        for k, (a, b) in enumerate(self.bounds):
            ok &= (X[:, k] >= a) & (X[:, k] <= b)
        return ok

    def faces(self) -> tuple[Face, ...]:
        names = "xyz"
        out = []
        fid = 0
        for k, (a, b) in enumerate(self.bounds):
            out.append(Face(fid, f"{names[k]}_min", k, 0, a))
            out.append(Face(fid + 1, f"{names[k]}_max", k, 1, b))
            fid += 2
        return tuple(out)

    def face_measure(self, f: Face) -> float:
        m = 1.0
        for k, (a, b) in enumerate(self.bounds):
            if k != f.axis:
                m *= (b - a)
        return m

    def sample_face(self, f: Face, n: int, rng: np.random.Generator) -> np.ndarray:
        X = np.empty((n, self.dim))
        for k, (a, b) in enumerate(self.bounds):
            X[:, k] = f.value if k == f.axis else rng.uniform(a, b, n)
        return X

    def on_face(self, f: Face, X: np.ndarray, tol: float = ON_FACE_TOL) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.abs(X[:, f.axis] - f.value) <= tol


class Interval(Box):
    kind = "interval"

    def __init__(self, a: float, b: float):
        super().__init__([(a, b)])


class PorousBox(Box):
    """Box minus circular/spherical holes.

    Holes carry no boundary conditions; they only exclude regions from
    membership (and hence from test slices). A 3D instance is the holed
    cube geometry.
    """

    def __init__(self, bounds, holes: Sequence[tuple[Sequence[float], float]]):
        super().__init__(bounds)
        self.holes = tuple((np.asarray(c, dtype=np.float64), float(r)) for c, r in holes)
        for c, r in self.holes:
            if c.shape != (self.dim,) or r <= 0:
                raise ValueError("hole centers must match dim and radii be positive")

    @property
    def kind(self):  # type: ignore[override]
        return "holed_cube" if self.dim == 3 else "porous_box"

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        ok = super().contains(X)
        for c, r in self.holes:
            ok &= np.linalg.norm(X - c, axis=1) >= r
        return ok


class SphericalShell:
    """Region between two concentric spheres, 0 < r1 < r2."""

    kind = "spherical_shell"

    def __init__(self, r1: float, r2: float):
        if not 0 < r1 < r2:
            raise ValueError("need 0 < r1 < r2")
        self.r1 = float(r1)
        self.r2 = float(r2)

    dim = 3

    def bounding_box(self):
        r = self.r2
        return ((-r, r), (-r, r), (-r, r))

    def contains(self, X: np.ndarray) -> np.ndarray:
        nrm = np.linalg.norm(np.atleast_2d(X), axis=1)
        return (nrm >= self.r1) & (nrm <= self.r2)

    def faces(self) -> tuple[Face, ...]:
        return (Face(0, "inner", None, None, self.r1),
                Face(1, "outer", None, None, self.r2))

    def face_measure(self, f: Face) -> float:
        return 4.0 * np.pi * f.value ** 2

    def sample_face(self, f: Face, n: int, rng: np.random.Generator) -> np.ndarray:
        d = rng.standard_normal((n, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return f.value * d

    def on_face(self, f: Face, X: np.ndarray, tol: float = ON_FACE_TOL) -> np.ndarray:
        return np.abs(np.linalg.norm(np.atleast_2d(X), axis=1) - f.value) <= tol


Domain = Box  # nominal base for annotations; shell duck-types the same API


# -- problem definition --------------------------------------------------------

@dataclass(frozen=True)
class AdeCoefficients:
    diffusion: float
    advection: tuple[float, ...]

    def __post_init__(self):
        if self.diffusion <= 0:
            raise ValueError("diffusion coefficient must be positive")
        object.__setattr__(self, "advection", tuple(float(v) for v in self.advection))


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str     # "dirichlet" | "neumann"
    data: object  # value field g(x, t), or axis-directional flux field N(x, t)

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")


@dataclass
class BoundarySpec:
    conditions: dict[int, BoundaryCondition]  # face id -> condition
    initial: ScalarField                      # evaluated at t = t0
    time_range: tuple[float, float]

    def faces_of_kind(self, domain, kind: str) -> list[Face]:
        return [f for f in domain.faces() if self.conditions[f.id].kind == kind]


@dataclass
class AdeProblem:
    name: str
    coeffs: AdeCoefficients
    domain: object
    bc: BoundarySpec
    forcing: object                      # value-only field f(x, t)
    exact: Optional[ScalarField] = None
    collocation_domain: object = None    # where residual points are drawn; defaults to domain

    def __post_init__(self):
        if len(self.coeffs.advection) != self.domain.dim:
            raise ShapeMismatch("advection vector length must equal spatial dim")
        if self.collocation_domain is None:
            self.collocation_domain = self.domain

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def input_dim(self) -> int:
        return self.domain.dim + 1


# -- operators -----------------------------------------------------------------

def residual_from_jet(jet: JetArray, fvals, coeffs: AdeCoefficients, dim: int):
    """u_t - p*laplace(u) + q.grad(u) - f from an output jet (element-generic)."""
    from .diffengine.tape import Var, getitem

    def col(x, j):
        return getitem(x, (slice(None), j)) if isinstance(x, Var) else x[:, j]

    r = col(jet.grad, dim)  # time derivative
    lap = col(jet.hess, 0)
    for i in range(1, dim):
        lap = lap + col(jet.hess, i)
    r = r - coeffs.diffusion * lap
    for i, qi in enumerate(coeffs.advection):
        if qi != 0.0:
            r = r + qi * col(jet.grad, i)
    return r - fvals


def residual(predictor, X: np.ndarray, problem: AdeProblem) -> np.ndarray:
    """Pointwise PDE residual of a predictor at interior space-time points."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    jet = predict_jets(predictor, X)
    v, g, h = jet.arrays()
    f = np.asarray(problem.forcing.values(X))
    r = residual_from_jet(JetArray(v, g, h), f, problem.coeffs, problem.dim)
    if not np.isfinite(r).all():
        raise NonFinite("PDE residual is NaN/Inf")
    return r


class ForcingField:
    """f = u*_t - p*laplace(u*) + q.grad(u*), evaluated through the derivative engine."""

    def __init__(self, exact: ScalarField, coeffs: AdeCoefficients):
        self.exact = exact
        self.coeffs = coeffs
        self.dim = exact.dim

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        v, g, h = self.exact.jets(X).arrays()
        d = self.dim - 1
        out = g[:, d] - self.coeffs.diffusion * h[:, :d].sum(axis=1)
        for i, qi in enumerate(self.coeffs.advection):
            if qi != 0.0:
                out = out + qi * g[:, i]
        return out

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.values(X)


def manufactured_forcing(exact: ScalarField, coeffs: AdeCoefficients) -> ForcingField:
    return ForcingField(exact, coeffs)


def neumann_residual(predictor, X: np.ndarray, face: Face, problem: AdeProblem) -> np.ndarray:
    """Axis-directional derivative of the predictor minus the prescribed flux."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    cond = problem.bc.conditions.get(face.id)
    if cond is None or cond.kind != "neumann":
        raise FaceMismatch(f"face {face.name!r} carries no Neumann condition")
    if face.axis is None:
        raise FaceMismatch("axis-directional Neumann flux needs an axis-aligned face")
    if not problem.domain.on_face(face, X[:, :problem.dim]).all():
        raise FaceMismatch(f"points not on declared Neumann face {face.name!r}")
    jet = predict_jets(predictor, X)
    _, g, _ = jet.arrays()
    return g[:, face.axis] - np.asarray(cond.data.values(X))


class AxisFluxField:
    """Value-only field: the axis-directional derivative of an exact solution."""

    def __init__(self, exact: ScalarField, axis: int, name: str = ""):
        self.exact = exact
        self.axis = axis
        self.dim = exact.dim
        self.name = name or f"{exact.name}_flux_ax{axis}"

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        _, g, _ = self.exact.jets(X).arrays()
        return g[:, self.axis]

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.values(X)


def boundary_data_from_exact(exact: ScalarField, domain, kinds: dict[int, str]) -> dict[int, BoundaryCondition]:
    """Derive per-face Dirichlet values or Neumann axis-fluxes from an exact solution."""
    conditions = {}
    for f in domain.faces():
        kind = kinds[f.id]
        if kind == "dirichlet":
            conditions[f.id] = BoundaryCondition("dirichlet", exact)
        else:
            if f.axis is None:
                raise FaceMismatch("Neumann data needs an axis-aligned face")
            conditions[f.id] = BoundaryCondition("neumann", AxisFluxField(exact, f.axis))
    return conditions
