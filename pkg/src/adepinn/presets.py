"""Problem presets ex1..ex7 and the registered exact-solution expressions.

Each preset bundles the PDE (coefficients, domain, boundary layout, forcing
manufactured from the exact solution), a default analytic distance/extension
pair for the hard-constraint ansatz, and the designated test slice.

Where a published distance/extension formula fails to vanish (or match the
data) on its own constrained set, the default here is the consistent form
and the stated one remains available as the "literal" variant; see
``ProblemPreset.constraints(literal=True)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import DistanceFn, ExtensionFn, VanishingSet, analytic_distance, analytic_extension
from .diffengine import jets as jm
from .errors import UnknownPreset
from .pde import (
    AdeCoefficients,
    AdeProblem,
    BoundarySpec,
    Box,
    Interval,
    PorousBox,
    ScalarField,
    SphericalShell,
    boundary_data_from_exact,
    manufactured_forcing,
)

PI = np.pi


# -- registered exact-solution expressions ------------------------------------

def _sine_mix(x, amps, betas):
    acc = None
    for a, b in zip(amps, betas):
        term = a * jm.sin((b * PI) * x)
        acc = term if acc is None else acc + term
    return acc


def _sine_product(xs, amps, modes):
    acc = None
    for a, m in zip(amps, modes):
        prod = None
        for xi in xs:
            s = jm.sin((m * PI) * xi)
            prod = s if prod is None else prod * s
        term = a * prod
        acc = term if acc is None else acc + term
    return acc


def _bump2(x, y, side):
    return x * (side - x) * y * (side - y)


def decaying_sine_mix_1d(alpha: float, amps, betas) -> ScalarField:
    """u(x,t) = exp(-alpha t) * sum_k amps_k sin(betas_k pi x)."""
    amps, betas = tuple(amps), tuple(betas)

    def fn(x, t):
        return jm.exp((-alpha) * t) * _sine_mix(x, amps, betas)

    return ScalarField(fn, 2, name=f"decaying_sine_mix_1d(a={alpha},b={betas})")


def decaying_poly_bump_2d(alpha: float, side: float) -> ScalarField:
    """u(x,y,t) = exp(-alpha t) * x (side-x) y (side-y)."""

    def fn(x, y, t):
        return jm.exp((-alpha) * t) * _bump2(x, y, side)

    return ScalarField(fn, 3, name=f"decaying_poly_bump_2d(a={alpha},L={side})")


def decaying_sine_product(alpha: float, amps, modes, spatial_dim: int) -> ScalarField:
    """u(x..,t) = exp(-alpha t) * sum_k amps_k prod_i sin(modes_k pi x_i)."""
    amps, modes = tuple(amps), tuple(modes)

    def fn(*coords):
        xs, t = coords[:-1], coords[-1]
        return jm.exp((-alpha) * t) * _sine_product(xs, amps, modes)

    return ScalarField(fn, spatial_dim + 1,
                       name=f"decaying_sine_product(d={spatial_dim},m={modes})")


EXPRESSIONS = {
    "decaying_sine_mix_1d": decaying_sine_mix_1d,
    "decaying_poly_bump_2d": decaying_poly_bump_2d,
    "decaying_sine_product": decaying_sine_product,
}


def expression(name: str, **params) -> ScalarField:
    try:
        builder = EXPRESSIONS[name]
    except KeyError:
        raise UnknownPreset(
            f"unknown expression {name!r}; registered: {sorted(EXPRESSIONS)}") from None
    return builder(**params)


# -- test slices ---------------------------------------------------------------

@dataclass(frozen=True)
class GridSlice:
    """Regular grid over the free axes after fixing some coordinates.

    ``fixed`` maps axis index (0..d-1 spatial, d = time) to its value; at
    most two axes may remain free. Points outside the domain (holes) are
    dropped.
    """

    fixed: tuple[tuple[int, float], ...]
    resolution: int = 100


@dataclass(frozen=True)
class SphereSlice:
    """Angular mesh grid on a sphere of given radius at a fixed time."""

    radius: float
    t: float
    n_theta: int = 80
    n_phi: int = 100


# -- preset bundles -------------------------------------------------------------

@dataclass
class ProblemPreset:
    id: str
    problem: AdeProblem
    hard_bc: str  # which hard-loss routing applies: dirichlet | neumann | mixed
    distance: DistanceFn
    extension: ExtensionFn
    distance_literal: DistanceFn
    extension_literal: ExtensionFn
    test_slice: object
    desc: str = ""

    def constraints(self, literal: bool = False) -> tuple[DistanceFn, ExtensionFn]:
        if literal:
            return self.distance_literal, self.extension_literal
        return self.distance, self.extension


def _problem(name, domain, time_range, diffusion, advection, exact, kinds,
             collocation_domain=None) -> AdeProblem:
    coeffs = AdeCoefficients(diffusion, advection)
    bc = BoundarySpec(boundary_data_from_exact(exact, domain, kinds), exact, time_range)
    return AdeProblem(name, coeffs, domain, bc, manufactured_forcing(exact, coeffs),
                      exact=exact, collocation_domain=collocation_domain)


def _ex1() -> ProblemPreset:
    # 1D Dirichlet with a beta=30 high-frequency component
    domain = Interval(0.0, 2.0)
    exact = decaying_sine_mix_1d(0.1, (1.0, 0.1), (1.0, 30.0))
    problem = _problem("ex1", domain, (0.0, 5.0), 0.02, (0.01,), exact,
                       {0: "dirichlet", 1: "dirichlet"})
    vset = VanishingSet(domain, (0.0, 5.0), (0, 1), True)
    D = analytic_distance(lambda x, t: x * (x - 2.0) * t * (1.0 / 20.0), 2, vset,
                          name="x(x-2)t/20")
    G = analytic_extension(
        ScalarField(lambda x, t: _sine_mix(x, (1.0, 0.1), (1.0, 30.0)), 2, name="S(x)"))
    return ProblemPreset("ex1", problem, "dirichlet", D, G, D, G,
                         GridSlice((), 100), "1D Dirichlet, high-frequency mode")


def _ex2() -> ProblemPreset:
    # 1D multiscale with Neumann flux data on both endpoints
    domain = Interval(0.0, 1.0)
    exact = decaying_sine_mix_1d(0.25, (1.0, 0.1), (1.0, 10.0))
    problem = _problem("ex2", domain, (0.0, 1.0), 0.002, (0.001,), exact,
                       {0: "neumann", 1: "neumann"})
    vset = VanishingSet(domain, (0.0, 1.0), (0, 1), True)
    D = analytic_distance(lambda x, t: x * (1.0 - x) * t, 2, vset, name="x(1-x)t")
    G = analytic_extension(
        ScalarField(lambda x, t: _sine_mix(x, (1.0, 0.1), (1.0, 10.0)), 2, name="h(x)"))
    # stated extension sin(x) does not match the initial data; kept as literal
    G_lit = analytic_extension(lambda x, t: jm.sin(x), 2, name="sin(x)")
    return ProblemPreset("ex2", problem, "neumann", D, G, D, G_lit,
                         GridSlice((), 100), "1D Neumann, multiscale")


def _ex3() -> ProblemPreset:
    # 1D low-frequency, Dirichlet left / Neumann right
    domain = Interval(0.0, 1.0)
    exact = decaying_sine_mix_1d(0.25, (1.0,), (2.0,))
    problem = _problem("ex3", domain, (0.0, 1.0), 0.002, (0.001,), exact,
                       {0: "dirichlet", 1: "neumann"})
    vset = VanishingSet(domain, (0.0, 1.0), (0, 1), True)
    D = analytic_distance(lambda x, t: x * (1.0 - x) * t, 2, vset, name="x(1-x)t")
    G = analytic_extension(
        ScalarField(lambda x, t: _sine_mix(x, (1.0,), (2.0,)), 2, name="sin(2pi x)"))
    G_lit = analytic_extension(lambda x, t: jm.sin(x), 2, name="sin(x)")
    return ProblemPreset("ex3", problem, "mixed", D, G, D, G_lit,
                         GridSlice((), 100), "1D mixed boundary, low-frequency")


_EX4_HOLES = (((1.0, 1.0), 0.5), ((2.8, 2.2), 0.6), ((1.5, 3.1), 0.4))


def _ex4(holes=_EX4_HOLES) -> ProblemPreset:
    # 2D Dirichlet on a porous square; training runs on the full bounding box
    domain = PorousBox([(0.0, 4.0), (0.0, 4.0)], holes)
    box = Box([(0.0, 4.0), (0.0, 4.0)])
    exact = decaying_poly_bump_2d(0.25, 4.0)
    problem = _problem("ex4", domain, (0.0, 5.0), 1.0, (4.0, 4.0), exact,
                       {i: "dirichlet" for i in range(4)}, collocation_domain=box)
    vset = VanishingSet(box, (0.0, 5.0), (0, 1, 2, 3), True)
    D = analytic_distance(
        lambda x, y, t: (t * 0.2) * jm.sin((PI / 4.0) * x) * jm.sin((PI / 4.0) * y),
        3, vset, name="(t/5)sin(pi x/4)sin(pi y/4)")
    # stated form sin(0.25x)sin(0.25y) does not vanish at x=4 or y=4
    D_lit = analytic_distance(
        lambda x, y, t: (t * 0.2) * jm.sin(0.25 * x) * jm.sin(0.25 * y),
        3, vset, name="(t/5)sin(x/4)sin(y/4)")
    G = analytic_extension(ScalarField(lambda x, y, t: _bump2(x, y, 4.0), 3, name="bump"))
    return ProblemPreset("ex4", problem, "dirichlet", D, G, D_lit, G,
                         GridSlice(((2, 2.5),), 150), "2D porous Dirichlet")


def _ex5() -> ProblemPreset:
    # 2D Neumann multiscale on the unit square
    domain = Box([(0.0, 1.0), (0.0, 1.0)])
    exact = decaying_sine_product(0.25, (1.0, 0.1), (1.0, 10.0), 2)
    problem = _problem("ex5", domain, (0.0, 1.0), 1.0, (4.0, 4.0), exact,
                       {i: "neumann" for i in range(4)})
    vset = VanishingSet(domain, (0.0, 1.0), (), True)
    D = analytic_distance(lambda x, y, t: t, 3, vset, name="t")
    # stated form 1 - t does not vanish at t = 0
    D_lit = analytic_distance(lambda x, y, t: 1.0 - t, 3, vset, name="1-t")
    G = analytic_extension(
        ScalarField(lambda x, y, t: _sine_product((x, y), (1.0, 0.1), (1.0, 10.0)),
                    3, name="S2(x,y)"))
    return ProblemPreset("ex5", problem, "neumann", D, G, D_lit, G,
                         GridSlice(((2, 0.5),), 128), "2D Neumann, multiscale")


_EX6_HOLES = tuple(
    [((0.5, 0.5, 0.5), 0.2)]
    + [((cx, cy, cz), 0.1) for cx in (0.25, 0.75) for cy in (0.25, 0.75) for cz in (0.25, 0.75)]
)


def _ex6(holes=_EX6_HOLES) -> ProblemPreset:
    # 3D Dirichlet on the unit cube with one central and eight corner holes
    domain = PorousBox([(0.0, 1.0)] * 3, holes)
    box = Box([(0.0, 1.0)] * 3)
    exact = decaying_sine_product(0.25, (1.0,), (1.0,), 3)
    problem = _problem("ex6", domain, (0.0, 5.0), 1.0, (1.0, 1.0, 1.0), exact,
                       {i: "dirichlet" for i in range(6)}, collocation_domain=box)
    vset = VanishingSet(box, (0.0, 5.0), tuple(range(6)), True)
    D = analytic_distance(
        lambda x, y, z, t: (1.0 / 5.0) * x * y * z * (1.0 - x) * (1.0 - y) * (1.0 - z) * t,
        4, vset, name="xyz(1-x)(1-y)(1-z)t/5")
    G = analytic_extension(
        ScalarField(lambda x, y, z, t: _sine_product((x, y, z), (1.0,), (1.0,)),
                    4, name="S3(x,y,z)"))
    return ProblemPreset("ex6", problem, "dirichlet", D, G, D, G,
                         GridSlice(((2, 0.5), (3, 0.5)), 150), "3D holed-cube Dirichlet")


def _ex7() -> ProblemPreset:
    # 3D Dirichlet between two spheres; two-frequency solution
    domain = SphericalShell(0.1, 1.0)
    exact = decaying_sine_product(0.25, (1.0, 0.1), (1.0, 10.0), 3)
    problem = _problem("ex7", domain, (0.0, 1.0), 1.0, (1.0, 1.0, 1.0), exact,
                       {0: "dirichlet", 1: "dirichlet"})
    vset = VanishingSet(domain, (0.0, 1.0), (0, 1), True)
    r1, r2 = 0.1, 1.0
    inv = 1.0 / (r2 - r1) ** 2

    def dist(x, y, z, t):
        r = jm.sqrt(x * x + y * y + z * z)
        return (r - r1) * (r2 - r) * t * inv

    D = analytic_distance(dist, 4, vset, name="(r-r1)(r2-r)t/(r2-r1)^2")
    # the boundary value decays in time, so the consistent extension is the
    # time-dependent solution itself; the stated time-constant form is literal
    G = analytic_extension(exact, name="exact extension")
    G_lit = analytic_extension(
        ScalarField(lambda x, y, z, t: _sine_product((x, y, z), (1.0, 0.1), (1.0, 10.0)),
                    4, name="S3+0.1S3(10)"))
    return ProblemPreset("ex7", problem, "dirichlet", D, G, D, G_lit,
                         SphereSlice(0.45, 0.5, 80, 100), "3D spherical-shell Dirichlet")


_BUILDERS = {f.__name__[1:]: f for f in (_ex1, _ex2, _ex3, _ex4, _ex5, _ex6, _ex7)}
PRESET_IDS = tuple(sorted(_BUILDERS))


def preset(problem_id: str) -> ProblemPreset:
    """Fully populated problem + constraint pair + test slice for ex1..ex7."""
    try:
        builder = _BUILDERS[problem_id]
    except KeyError:
        raise UnknownPreset(
            f"unknown preset {problem_id!r}; available: {', '.join(PRESET_IDS)}") from None
    return builder()


def problem_from_config(cfg: dict) -> AdeProblem:
    """Build a custom box problem from a config mapping.

    Expected keys: box (list of [lo, hi]), time ([t0, T]), diffusion,
    advection (list), exact ({name, params}), boundary (face name -> kind).
    The exact solution must come from the registered expression set; forcing
    and boundary data are derived from it.
    """
    box = Box([tuple(b) for b in cfg["box"]])
    exact = expression(cfg["exact"]["name"], **cfg["exact"].get("params", {}))
    kinds_by_name = cfg.get("boundary", {})
    kinds = {}
    for f in box.faces():
        kinds[f.id] = kinds_by_name.get(f.name, "dirichlet")
    return _problem(cfg.get("name", "custom"), box, tuple(cfg["time"]),
                    float(cfg["diffusion"]), tuple(cfg["advection"]), exact, kinds)
