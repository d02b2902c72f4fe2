"""Loss assembly, penalty/learning-rate schedules, Adam, and the training loop.

Soft mode penalizes boundary and initial mismatches with staircase weights;
hard mode trains the composed ansatz on the PDE residual alone (plus a flux
penalty when Neumann faces are present). One full-batch Adam step is taken
per epoch on freshly resampled collocation points.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import metrics, sampling
from .constraints import FitOptions, HardAnsatz, VanishingSet, fit_distance, fit_extension
from .diffengine import tape
from .diffengine.api import ParamGradient, predict_jets, value_and_grad
from .diffengine.tape import Var
from .errors import ConfigError, EmptySampleSet, FaceMismatch, NonFinite
from .network import EnsembleSpec, MlpSpec, NetworkPredictor, ParamStore, init_params
from .pde import AdeProblem, residual_from_jet
from .presets import ProblemPreset, preset

MODELS = ("pinn", "sfpinn", "sfhcpinn", "sfhcpinn_nn")


# -- schedules -----------------------------------------------------------------

def gamma_schedule(epoch: int, t_max: int, gamma0: float = 20.0) -> float:
    """Six-band staircase boundary penalty: gamma0 * {1,10,50,100,200,500}.

    Band edges are at {0.1, 0.2, 0.25, 0.5, 0.75} of t_max; comparisons are
    done in integer arithmetic so the edges are exact.
    """
    e, T = int(epoch), int(t_max)
    if T <= 0 or 10 * e < T:
        m = 1
    elif 5 * e < T:
        m = 10
    elif 4 * e < T:
        m = 50
    elif 2 * e < T:
        m = 100
    elif 4 * e < 3 * T:
        m = 200
    else:
        m = 500
    return gamma0 * m


def lr_schedule(epoch: int, lr0: float = 0.01, decay: float = 0.025, every: int = 100) -> float:
    """Step learning rate: lr0 decayed by `decay` every `every` epochs."""
    return lr0 * (1.0 - decay) ** (epoch // every)


@dataclass
class LossWeights:
    gamma0: float = 20.0
    omega0: float = 20.0  # initial-condition weight (soft mode), same staircase

    def gamma(self, epoch, t_max):
        return gamma_schedule(epoch, t_max, self.gamma0)

    def omega(self, epoch, t_max):
        return gamma_schedule(epoch, t_max, self.omega0)


# -- optimizer -----------------------------------------------------------------

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n))


def adam_step(state: AdamState, params: ParamStore, grad: ParamGradient, lr: float,
              mask: Optional[np.ndarray] = None):
    """One Adam update (bias-corrected); mutates state and params in place."""
    g = grad.entries
    state.step_count += 1
    t = state.step_count
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * g * g
    mhat = state.m / (1.0 - state.beta1 ** t)
    vhat = state.v / (1.0 - state.beta2 ** t)
    update = lr * mhat / (np.sqrt(vhat) + state.eps)
    if not np.isfinite(update).all():
        raise NonFinite("Adam update is NaN/Inf")
    if mask is not None:
        update = np.where(mask, update, 0.0)
    params.flat -= update
    return state, params


# -- loss terms (element-generic: ndarray for evaluation, Var for training) -----

def _mean_sq(x):
    if isinstance(x, Var):
        return tape.mean(x * x)
    return float(np.mean(np.square(x)))


def _sum_sq(x):
    if isinstance(x, Var):
        return tape.sum_(x * x)
    return float(np.sum(np.square(x)))


def _col(x, j):
    if isinstance(x, Var):
        return tape.getitem(x, (slice(None), j))
    return x[:, j]


def _require(batch, what):
    if batch is None or len(batch) == 0:
        raise EmptySampleSet(f"{what} batch is empty")
    return batch


def _pde_term(jets_fn, batch, problem: AdeProblem):
    X = batch.points
    jet = jets_fn(X)
    f = np.asarray(problem.forcing.values(X))
    return _mean_sq(residual_from_jet(jet, f, problem.coeffs, problem.dim))


def _boundary_sq_sum(jets_fn, batch, problem: AdeProblem, neumann_only: bool = False):
    total = None
    for f in problem.domain.faces():
        idx = batch.faces == f.id
        if not idx.any():
            continue
        cond = problem.bc.conditions[f.id]
        if neumann_only and cond.kind != "neumann":
            raise FaceMismatch(f"face {f.name!r} is not Neumann")
        Xf = batch.points[idx]
        jet = jets_fn(Xf)
        data = np.asarray(cond.data.values(Xf))
        if cond.kind == "dirichlet":
            mismatch = jet.val - data
        else:
            mismatch = _col(jet.grad, f.axis) - data
        term = _sum_sq(mismatch)
        total = term if total is None else total + term
    if total is None:
        raise EmptySampleSet("boundary batch matched no faces")
    return total


def _initial_term(jets_fn, batch, problem: AdeProblem):
    jet = jets_fn(batch.points)
    return _mean_sq(jet.val - np.asarray(problem.bc.initial.values(batch.points)))


def _soft_total(jets_fn, batches, problem, weights, epoch, t_max):
    pde = _pde_term(jets_fn, _require(batches.get("interior"), "interior"), problem)
    bc_batch = _require(batches.get("boundary"), "boundary")
    ic_batch = _require(batches.get("initial"), "initial")
    gamma = weights.gamma(epoch, t_max)
    omega = weights.omega(epoch, t_max)
    bc = (gamma / len(bc_batch)) * _boundary_sq_sum(jets_fn, bc_batch, problem)
    ic = omega * _initial_term(jets_fn, ic_batch, problem)
    total = pde + bc + ic
    return total, {"loss_pde": pde, "loss_bc": bc, "loss_ic": ic,
                   "gamma": gamma, "omega": omega}


def _hard_neumann_total(jets_fn, interior, boundary, problem, weights, epoch, t_max):
    pde = _pde_term(jets_fn, _require(interior, "interior"), problem)
    bc_batch = _require(boundary, "boundary")
    gamma = weights.gamma(epoch, t_max)
    bc = (gamma / len(bc_batch)) * _boundary_sq_sum(jets_fn, bc_batch, problem,
                                                    neumann_only=True)
    total = pde + bc
    return total, {"loss_pde": pde, "loss_bc": bc, "loss_ic": 0.0, "gamma": gamma}


def soft_loss(predictor, batches, problem, weights: LossWeights, epoch: int, t_max: int):
    """PDE residual + staircase-weighted boundary and initial penalties (floats)."""
    jets_fn = lambda X: predict_jets(predictor, X)
    total, comps = _soft_total(jets_fn, batches, problem, weights, epoch, t_max)
    _check_finite(total)
    return total, comps


def hard_loss_dirichlet(ansatz, interior_batch, problem) -> float:
    """Mean-squared PDE residual only; boundary/initial sets never enter."""
    jets_fn = lambda X: predict_jets(ansatz, X)
    val = _pde_term(jets_fn, _require(interior_batch, "interior"), problem)
    _check_finite(val)
    return val


def hard_loss_neumann(ansatz, interior_batch, boundary_batch, problem,
                      weights: LossWeights, epoch: int, t_max: int):
    """Residual plus staircase-weighted Neumann flux mismatch (floats)."""
    jets_fn = lambda X: predict_jets(ansatz, X)
    total, comps = _hard_neumann_total(jets_fn, interior_batch, boundary_batch,
                                       problem, weights, epoch, t_max)
    _check_finite(total)
    return total, comps


def _check_finite(x):
    if not np.isfinite(x):
        raise NonFinite("loss is NaN/Inf")


# -- configuration and records ---------------------------------------------------

@dataclass
class TrainConfig:
    problem: object = "ex1"            # preset id or ProblemPreset
    model: str = "sfhcpinn"
    epochs: int = 5000
    n_interior: int = 2000
    n_boundary: int = 500
    n_initial: int = 500
    seed: int = 0
    eval_every: int = 1000
    hidden_sizes: tuple = (10, 20, 10)
    activation: Optional[str] = None    # None: tanh for pinn, sin otherwise
    scale_factors: tuple = (1.0, 2.0, 3.0, 4.0)
    fourier_first: bool = True
    trainable_fourier: bool = True
    combine: str = "average"
    lr0: float = 0.01
    lr_decay: float = 0.025
    lr_every: int = 20   # desk-scale anneal; the published cadence is 100 at 50k epochs
    weights: LossWeights = field(default_factory=LossWeights)
    literal_constraints: bool = False
    fixed_batches: bool = False         # debug: sample once and reuse every epoch
    fit_steps: int = 2000               # sfhcpinn_nn distance/extension fitting
    n_fit: int = 2000
    test_resolution: Optional[int] = None
    initial_params: Optional[ParamStore] = None

    def validate(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        for name in ("n_interior", "n_boundary", "n_initial"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        return self


@dataclass
class EpochRecord:
    epoch: int
    loss_total: float
    loss_pde: float
    loss_bc: float
    loss_ic: float
    lr: float
    gamma: float


@dataclass
class TrainRecord:
    epoch: int
    loss_total: float
    loss_pde: float
    loss_bc: float
    loss_ic: float
    mse: float
    rel: float
    lr: float
    gamma: float


@dataclass
class TrainResult:
    records: list            # TrainRecord evaluations
    epoch_records: list      # per-epoch losses
    params: ParamStore
    predictor: object
    bundle: ProblemPreset
    aborted: bool = False
    abort_epoch: Optional[int] = None

    @property
    def final_rel(self) -> float:
        return self.records[-1].rel if self.records else float("inf")

    @property
    def final_mse(self) -> float:
        return self.records[-1].mse if self.records else float("inf")


# -- model assembly ---------------------------------------------------------------

def network_spec(cfg: TrainConfig, input_dim: int):
    act = cfg.activation or ("tanh" if cfg.model == "pinn" else "sin")
    if cfg.model == "pinn":
        return MlpSpec(input_dim, tuple(cfg.hidden_sizes), act, act)
    first = "fourier_pair" if cfg.fourier_first else act
    sub = MlpSpec(input_dim, tuple(cfg.hidden_sizes), act, first,
                  trainable_first_layer=cfg.trainable_fourier)
    return EnsembleSpec(sub, tuple(cfg.scale_factors), cfg.combine)


def _fit_constraints(bundle: ProblemPreset, cfg: TrainConfig):
    """SFHCPINN_NN variant: replace analytic D and G by small fitted networks."""
    problem = bundle.problem
    t0, t1 = problem.bc.time_range
    domain = problem.collocation_domain
    dirichlet_ids = tuple(f.id for f in domain.faces()
                          if problem.bc.conditions[f.id].kind == "dirichlet")
    vset = VanishingSet(domain, (t0, t1), dirichlet_ids, True)
    rng = sampling.rng_stream(cfg.seed, "fit")
    opts = FitOptions(steps=cfg.fit_steps, seed=cfg.seed)

    # constrained points with their prescribed values
    Xc_parts, yc_parts = [], []
    per_face = max(1, cfg.n_fit // (len(dirichlet_ids) + 1))
    for f in domain.faces():
        if f.id not in dirichlet_ids:
            continue
        Xs = domain.sample_face(f, per_face, rng)
        ts = rng.uniform(t0, t1, per_face)
        P = np.column_stack([Xs, ts])
        Xc_parts.append(P)
        yc_parts.append(np.asarray(problem.bc.conditions[f.id].data.values(P)))
    P0 = sampling.sample_initial(domain, (t0, t1), cfg.n_fit, cfg.seed).points
    Xc_parts.append(P0)
    yc_parts.append(np.asarray(problem.bc.initial.values(P0)))
    Xc = np.concatenate(Xc_parts)
    yc = np.concatenate(yc_parts)

    interior = sampling.sample_interior(domain, (t0, t1), cfg.n_fit, cfg.seed,
                                        epoch=1).points
    G = fit_extension(Xc, yc, opts=opts)
    D = fit_distance(Xc, interior, vset, opts=opts)
    return D, G


def build_predictor(bundle: ProblemPreset, cfg: TrainConfig, params: ParamStore):
    core = NetworkPredictor(params.spec, params)
    if cfg.model in ("pinn", "sfpinn"):
        return core
    if cfg.model == "sfhcpinn_nn":
        D, G = _fit_constraints(bundle, cfg)
    else:
        D, G = bundle.constraints(literal=cfg.literal_constraints)
    return HardAnsatz(G, D, core)


def build_test_set(bundle: ProblemPreset, resolution: Optional[int] = None):
    slice_spec = bundle.test_slice
    if resolution is not None and hasattr(slice_spec, "resolution"):
        slice_spec = replace(slice_spec, resolution=resolution)
    batch = sampling.test_grid(bundle.problem.domain, bundle.problem.bc.time_range,
                               slice_spec)
    exact = np.asarray(bundle.problem.exact.values(batch.points))
    return batch, exact


# -- the training loop -------------------------------------------------------------

def train(cfg: TrainConfig) -> TrainResult:
    """Run the full loop: sample, assemble the variant loss, one Adam step per epoch.

    Evaluates test MSE/REL every ``eval_every`` epochs (and at the end);
    a non-finite loss or update aborts gracefully with the last good
    parameters and the history so far.
    """
    cfg.validate()
    bundle = preset(cfg.problem) if isinstance(cfg.problem, str) else cfg.problem
    problem = bundle.problem
    t0t1 = problem.bc.time_range
    domain_c = problem.collocation_domain

    spec = network_spec(cfg, problem.input_dim)
    params = cfg.initial_params.copy() if cfg.initial_params is not None \
        else init_params(spec, cfg.seed)
    predictor = build_predictor(bundle, cfg, params)
    mask = params.trainable_mask()
    mask_arg = None if mask.all() else mask
    state = AdamState.fresh(params.size)

    mode = "soft" if cfg.model in ("pinn", "sfpinn") else bundle.hard_bc
    neumann_faces = [f.id for f in problem.domain.faces()
                     if problem.bc.conditions[f.id].kind == "neumann"]

    test_batch, test_exact = build_test_set(bundle, cfg.test_resolution)

    records: list[TrainRecord] = []
    epoch_records: list[EpochRecord] = []
    comps: dict = {}

    def loss_fn(leaves):
        jets_fn = lambda X: predictor.jets_with(leaves, X)
        if mode == "soft":
            total, c = _soft_total(jets_fn, batches, problem, cfg.weights,
                                   epoch, cfg.epochs)
        elif mode == "dirichlet":
            total = _pde_term(jets_fn, batches["interior"], problem)
            c = {"loss_pde": total, "loss_bc": 0.0, "loss_ic": 0.0,
                 "gamma": cfg.weights.gamma(epoch, cfg.epochs)}
        else:  # neumann or mixed: flux penalty on Neumann faces
            total, c = _hard_neumann_total(jets_fn, batches["interior"],
                                           batches["boundary"], problem,
                                           cfg.weights, epoch, cfg.epochs)
        comps.clear()
        comps.update({k: float(v.value) if isinstance(v, Var) else float(v)
                      for k, v in c.items()})
        return total

    def sample_epoch(ep):
        b = {"interior": sampling.sample_interior(domain_c, t0t1, cfg.n_interior,
                                                  cfg.seed, epoch=ep)}
        if mode == "soft":
            b["boundary"] = sampling.sample_boundary(problem.domain, t0t1,
                                                     cfg.n_boundary, cfg.seed, epoch=ep)
            b["initial"] = sampling.sample_initial(domain_c, t0t1, cfg.n_initial,
                                                   cfg.seed, epoch=ep)
        elif mode in ("neumann", "mixed"):
            b["boundary"] = sampling.sample_boundary(problem.domain, t0t1,
                                                     cfg.n_boundary, cfg.seed,
                                                     face_filter=neumann_faces, epoch=ep)
        return b

    def evaluate(after_epoch):
        pv = predictor.values(test_batch.points)
        m = metrics.mse(pv, test_exact)
        r = metrics.rel(pv, test_exact)
        records.append(TrainRecord(after_epoch, comps.get("loss_total", np.nan),
                                   comps.get("loss_pde", np.nan),
                                   comps.get("loss_bc", np.nan),
                                   comps.get("loss_ic", np.nan),
                                   m, r,
                                   comps.get("lr", np.nan),
                                   comps.get("gamma", np.nan)))

    fixed = sample_epoch(0) if cfg.fixed_batches else None
    for epoch in range(cfg.epochs):
        lr = lr_schedule(epoch, cfg.lr0, cfg.lr_decay, cfg.lr_every)
        batches = fixed if cfg.fixed_batches else sample_epoch(epoch)
        try:
            value, grad = value_and_grad(loss_fn, params)
            comps["loss_total"] = value
            comps["lr"] = lr
            epoch_records.append(EpochRecord(epoch, value, comps["loss_pde"],
                                             comps["loss_bc"], comps["loss_ic"],
                                             lr, comps["gamma"]))
            adam_step(state, params, grad, lr, mask_arg)
        except NonFinite:
            return TrainResult(records, epoch_records, params, predictor, bundle,
                               aborted=True, abort_epoch=epoch)
        done = epoch + 1
        if done % cfg.eval_every == 0 or done == cfg.epochs:
            evaluate(done)
    return TrainResult(records, epoch_records, params, predictor, bundle)


# -- history serialization -----------------------------------------------------------

HISTORY_HEADER = "epoch,loss_total,loss_pde,loss_bc,loss_ic,mse,rel,lr,gamma"


def write_history(path, result: TrainResult) -> None:
    """Per-epoch loss rows plus evaluation rows (with mse/rel) in epoch order."""
    lines = [HISTORY_HEADER]
    evals = {r.epoch: r for r in result.records}
    for er in result.epoch_records:
        lines.append(f"{er.epoch},{er.loss_total!r},{er.loss_pde!r},{er.loss_bc!r},"
                     f"{er.loss_ic!r},,,{er.lr!r},{er.gamma!r}")
        if er.epoch + 1 in evals:
            r = evals[er.epoch + 1]
            lines.append(f"{r.epoch},{r.loss_total!r},{r.loss_pde!r},{r.loss_bc!r},"
                         f"{r.loss_ic!r},{r.mse!r},{r.rel!r},{r.lr!r},{r.gamma!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_history(path) -> list[dict]:
    import csv as _csv

    with open(path) as fh:
        return list(_csv.DictReader(fh))
