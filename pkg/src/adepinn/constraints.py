"""Hard initial/boundary constraints: ansatz u = G + D * core.

D is a smooth distance-like function vanishing exactly on the constrained
set (boundary faces and/or t = t0); G is a smooth extension matching the
prescribed data there. Wherever D = 0 the ansatz reproduces G regardless of
the core network, so those conditions drop out of the training loss.

Both functions may be analytic (preset expressions) or small fitted
networks; fitted variants satisfy the constraints only approximately, which
is recorded as a diagnostic rather than asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diffengine import jets as jm
from .diffengine.api import predict_jets, value_and_grad
from .diffengine.jets import JetArray
from .errors import EmptySampleSet, NonFinite
from .pde import ScalarField


@dataclass
class VanishingSet:
    """Where a distance function must be zero: boundary faces and/or t = t0."""

    domain: object
    time_range: tuple[float, float]
    face_ids: tuple[int, ...] = ()
    include_initial: bool = True

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Points of the constrained set, faces and initial slab weighted by measure."""
        t0, t1 = self.time_range
        faces = [f for f in self.domain.faces() if f.id in self.face_ids]
        weights = [self.domain.face_measure(f) * (t1 - t0) for f in faces]
        if self.include_initial:
            bb = self.domain.bounding_box()
            weights.append(float(np.prod([b - a for a, b in bb])))
        if not weights:
            raise EmptySampleSet("vanishing set has no components")
        w = np.asarray(weights) / np.sum(weights)
        counts = rng.multinomial(n, w)
        parts = []
        for f, c in zip(faces, counts[:len(faces)]):
            if c == 0:
                continue
            Xs = self.domain.sample_face(f, int(c), rng)
            ts = rng.uniform(t0, t1, int(c))
            parts.append(np.column_stack([Xs, ts]))
        if self.include_initial and counts[-1] > 0:
            c = int(counts[-1])
            bb = self.domain.bounding_box()
            Xs = np.column_stack([rng.uniform(a, b, c) for a, b in bb])
            keep = self.domain.contains(Xs)
            # resample rejected hole points onto the box uniformly until full
            while not keep.all():
                bad = ~keep
                Xs[bad] = np.column_stack([rng.uniform(a, b, int(bad.sum())) for a, b in bb])
                keep = self.domain.contains(Xs)
            parts.append(np.column_stack([Xs, np.full(c, t0)]))
        return np.concatenate(parts, axis=0)

    def contains(self, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        X = np.atleast_2d(X)
        t0 = self.time_range[0]
        hit = np.zeros(X.shape[0], dtype=bool)
        if self.include_initial:
            hit |= np.abs(X[:, -1] - t0) <= tol
        for f in self.domain.faces():
            if f.id in self.face_ids:
                hit |= self.domain.on_face(f, X[:, :-1], tol)
        return hit


@dataclass
class DistanceFn:
    """Smooth function vanishing on its declared constrained set."""

    evaluator: object          # predictor protocol: .jets / .values
    vanishing: VanishingSet
    name: str = "D"
    fitted: bool = False
    boundary_max_abs: Optional[float] = None  # diagnostic for fitted variants

    def jets(self, X):
        return predict_jets(self.evaluator, X)

    def values(self, X):
        return np.asarray(self.evaluator.values(X)) if hasattr(self.evaluator, "values") \
            else self.jets(X).arrays()[0]


@dataclass
class ExtensionFn:
    """Smooth function matching the prescribed I/BC data on the constrained set."""

    evaluator: object
    name: str = "G"
    fitted: bool = False
    fit_loss: Optional[float] = None

    def jets(self, X):
        return predict_jets(self.evaluator, X)

    def values(self, X):
        return np.asarray(self.evaluator.values(X)) if hasattr(self.evaluator, "values") \
            else self.jets(X).arrays()[0]


class HardAnsatz:
    """Composed predictor G + D * core.

    Differentiable end to end: G and D contribute their own jets, the core
    network contributes jets (and parameter gradients on the training path).
    """

    def __init__(self, G: ExtensionFn, D: DistanceFn, core):
        self.G = G
        self.D = D
        self.core = core

    def _compose(self, X, core_jet: JetArray) -> JetArray:
        return self.G.jets(X) + self.D.jets(X) * core_jet

    def jets(self, X) -> JetArray:
        return self._compose(X, predict_jets(self.core, X))

    def values(self, X) -> np.ndarray:
        g = self.G.values(X)
        d = self.D.values(X)
        core = self.core.values(X) if hasattr(self.core, "values") \
            else predict_jets(self.core, X).arrays()[0]
        return g + d * core

    def jets_with(self, leaves, X) -> JetArray:
        return self._compose(X, self.core.jets_with(leaves, X))


def hard_ansatz_eval(ansatz: HardAnsatz, point) -> float:
    """G(point) + D(point) * core(point) at a single space-time point."""
    point = np.asarray(point, dtype=np.float64)
    return float(ansatz.values(point[None, :])[0])


def min_distance_estimate(point, boundary_samples) -> float:
    """Shortest Euclidean distance from a point to a sampled constrained set."""
    samples = np.atleast_2d(np.asarray(boundary_samples, dtype=np.float64))
    if samples.size == 0:
        raise EmptySampleSet("no boundary samples")
    point = np.asarray(point, dtype=np.float64)
    return float(np.min(np.linalg.norm(samples - point, axis=1)))


def min_distance_estimates(points, boundary_samples) -> np.ndarray:
    samples = np.atleast_2d(np.asarray(boundary_samples, dtype=np.float64))
    if samples.size == 0:
        raise EmptySampleSet("no boundary samples")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    # chunked pairwise distances; sample sets stay modest (<= a few thousand)
    out = np.empty(points.shape[0])
    step = 2048
    for i in range(0, points.shape[0], step):
        d = np.linalg.norm(points[i:i + step, None, :] - samples[None, :, :], axis=2)
        out[i:i + step] = d.min(axis=1)
    return out


def indicator_distance(point, vanishing: VanishingSet) -> float:
    """The extreme variant: 0 on the constrained set, 1 elsewhere."""
    point = np.asarray(point, dtype=np.float64)
    return 0.0 if bool(vanishing.contains(point[None, :])[0]) else 1.0


@dataclass
class FitOptions:
    steps: int = 2000
    lr0: float = 0.01
    lr_decay: float = 0.975
    lr_every: int = 100
    seed: int = 0


def _default_fit_spec(input_dim: int):
    from .network import MlpSpec

    # one hidden layer of 20 neurons: small enough to fit before training starts
    return MlpSpec(input_dim, (20,), hidden_activation="sin", first_layer_activation="sin")


def _fit_network(X, y, net_spec, opts: FitOptions):
    """Adam regression of a small network onto (X, y); returns predictor + final loss."""
    from .diffengine import tape
    from .network import NetworkPredictor, init_params
    from .training import AdamState, adam_step

    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise EmptySampleSet("cannot fit a network to zero samples")
    if net_spec is None:
        net_spec = _default_fit_spec(X.shape[1])
    params = init_params(net_spec, opts.seed)
    pred = NetworkPredictor(net_spec, params)
    state = AdamState.fresh(params.size)

    def loss(leaves):
        out = pred.values_with(leaves, X)
        r = out - y
        return tape.mean(r * r)

    final = np.inf
    for step in range(opts.steps):
        lr = opts.lr0 * opts.lr_decay ** (step // opts.lr_every)
        final, grad = value_and_grad(loss, params)
        if not np.isfinite(final):
            raise NonFinite("fit loss became non-finite")
        adam_step(state, params, grad, lr)
    final, _ = value_and_grad(loss, params)
    return pred, float(final)


def fit_extension(X, g_values, net_spec=None, opts: FitOptions | None = None) -> ExtensionFn:
    """Train a small network to match sampled I/BC data (mean-squared loss)."""
    opts = opts or FitOptions()
    pred, final = _fit_network(X, g_values, net_spec, opts)
    return ExtensionFn(pred, name="G_fit", fitted=True, fit_loss=final)


def fit_distance(boundary_X, interior_X, vanishing: VanishingSet,
                 net_spec=None, opts: FitOptions | None = None) -> DistanceFn:
    """Train a small network toward min-distance targets: 0 on the constrained set."""
    opts = opts or FitOptions()
    boundary_X = np.atleast_2d(np.asarray(boundary_X, dtype=np.float64))
    interior_X = np.atleast_2d(np.asarray(interior_X, dtype=np.float64))
    if boundary_X.shape[0] == 0 or interior_X.shape[0] == 0:
        raise EmptySampleSet("need boundary and interior samples")
    targets_int = min_distance_estimates(interior_X, boundary_X)
    X = np.concatenate([boundary_X, interior_X], axis=0)
    y = np.concatenate([np.zeros(boundary_X.shape[0]), targets_int])
    pred, _ = _fit_network(X, y, net_spec, opts)
    max_abs = float(np.max(np.abs(pred.values(boundary_X))))
    return DistanceFn(pred, vanishing, name="D_fit", fitted=True,
                      boundary_max_abs=max_abs)


def analytic_distance(fn, dim: int, vanishing: VanishingSet, name: str = "D") -> DistanceFn:
    return DistanceFn(ScalarField(fn, dim, name=name), vanishing, name=name)


def analytic_extension(field_or_fn, dim: int | None = None, name: str = "G") -> ExtensionFn:
    if isinstance(field_or_fn, ScalarField):
        return ExtensionFn(field_or_fn, name=name)
    return ExtensionFn(ScalarField(field_or_fn, dim, name=name), name=name)
