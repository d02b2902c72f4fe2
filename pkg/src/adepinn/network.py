"""Plain MLPs and Fourier-feature sub-network ensembles.

The ensemble feeds each subnetwork an input scaled by its factor a_n, maps
the first layer through [cos(W1 z); sin(W1 z)], and combines the subnet
outputs either as the fixed average (1/N) sum F_n / a_n (default) or with a
learned linear head over the concatenated last hidden layers (config switch).

Forward passes are written once over generic elements: plain ndarrays for
evaluation, tape Vars for training, dispatched per operand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import backend
from .diffengine import activations, tape
from .diffengine.jets import JetArray
from .diffengine.tape import Var
from .errors import ShapeMismatch, UnsupportedPrimitive


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_sizes: tuple[int, ...]
    hidden_activation: str = "sin"
    first_layer_activation: str = "sin"
    output_dim: int = 1
    trainable_first_layer: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.input_dim < 1 or self.output_dim != 1 or not self.hidden_sizes:
            raise ShapeMismatch("need input_dim >= 1, at least one hidden layer, output_dim == 1")
        if any(h < 1 for h in self.hidden_sizes):
            raise ShapeMismatch("hidden sizes must be >= 1")
        if self.first_layer_activation == activations.FOURIER_PAIR:
            if self.hidden_sizes[0] % 2 != 0:
                raise ShapeMismatch("fourier_pair first layer needs an even width (cos half + sin half)")
        else:
            activations.code_of(self.first_layer_activation)
        activations.code_of(self.hidden_activation)


@dataclass(frozen=True)
class EnsembleSpec:
    subnet: MlpSpec
    scale_factors: tuple[float, ...]
    combine: str = "average"  # "average" | "linear_head"

    def __post_init__(self):
        object.__setattr__(self, "scale_factors", tuple(float(a) for a in self.scale_factors))
        if not self.scale_factors or any(a <= 0 for a in self.scale_factors):
            raise ShapeMismatch("need at least one positive scale factor")
        if self.combine not in ("average", "linear_head"):
            raise ValueError(f"unknown combine mode {self.combine!r}")


NetSpec = Union[MlpSpec, EnsembleSpec]


@dataclass(frozen=True)
class Slot:
    name: str
    shape: tuple[int, ...]
    offset: int
    size: int
    trainable: bool


def _subnet_slots(spec: MlpSpec, prefix: str, with_output: bool, start: int):
    slots = []
    off = start
    fan_in = spec.input_dim

    def add(name, shape, trainable=True):
        nonlocal off
        size = int(np.prod(shape))
        slots.append(Slot(name, tuple(shape), off, size, trainable))
        off += size

    fourier = spec.first_layer_activation == activations.FOURIER_PAIR
    w0_rows = spec.hidden_sizes[0] // 2 if fourier else spec.hidden_sizes[0]
    add(f"{prefix}L0.W", (w0_rows, fan_in), spec.trainable_first_layer)
    if not fourier:
        add(f"{prefix}L0.b", (spec.hidden_sizes[0],), spec.trainable_first_layer)
    prev = spec.hidden_sizes[0]
    for i, h in enumerate(spec.hidden_sizes[1:], start=1):
        add(f"{prefix}L{i}.W", (h, prev))
        add(f"{prefix}L{i}.b", (h,))
        prev = h
    if with_output:
        add(f"{prefix}out.W", (1, prev))
        add(f"{prefix}out.b", (1,))
    return slots, off


def build_layout(spec: NetSpec) -> tuple[Slot, ...]:
    if isinstance(spec, MlpSpec):
        slots, _ = _subnet_slots(spec, "", with_output=True, start=0)
        return tuple(slots)
    slots: list[Slot] = []
    off = 0
    per_out = spec.combine == "average"
    for n in range(len(spec.scale_factors)):
        sub, off = _subnet_slots(spec.subnet, f"s{n}.", with_output=per_out, start=off)
        slots.extend(sub)
    if spec.combine == "linear_head":
        hlast = spec.subnet.hidden_sizes[-1]
        n_in = hlast * len(spec.scale_factors)
        slots.append(Slot("head.W", (1, n_in), off, n_in, True))
        off += n_in
        slots.append(Slot("head.b", (1,), off, 1, True))
    return tuple(slots)


@dataclass
class ParamStore:
    """All trainable weights/biases as one flat float64 vector plus layout metadata."""

    spec: NetSpec
    flat: np.ndarray
    layout: tuple[Slot, ...] = field(repr=False)

    @classmethod
    def from_flat(cls, spec: NetSpec, flat: np.ndarray) -> "ParamStore":
        layout = build_layout(spec)
        total = layout[-1].offset + layout[-1].size if layout else 0
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (total,):
            raise ShapeMismatch(f"flat length {flat.shape} does not match layout size {total}")
        return cls(spec, flat, layout)

    @property
    def size(self) -> int:
        return self.flat.size

    def tensor(self, name: str) -> np.ndarray:
        for slot in self.layout:
            if slot.name == name:
                return self.flat[slot.offset:slot.offset + slot.size].reshape(slot.shape)
        raise KeyError(name)

    def views(self) -> dict[str, np.ndarray]:
        return {s.name: self.flat[s.offset:s.offset + s.size].reshape(s.shape)
                for s in self.layout}

    def trainable_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        for s in self.layout:
            if s.trainable:
                mask[s.offset:s.offset + s.size] = True
        return mask

    def copy(self) -> "ParamStore":
        return ParamStore(self.spec, self.flat.copy(), self.layout)


def init_params(spec: NetSpec, seed: int) -> ParamStore:
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    layout = build_layout(spec)
    total = layout[-1].offset + layout[-1].size
    flat = np.zeros(total, dtype=np.float64)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    for slot in layout:
        if len(slot.shape) == 2:
            fan_out, fan_in = slot.shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            flat[slot.offset:slot.offset + slot.size] = rng.uniform(
                -bound, bound, size=slot.size)
        # biases stay zero
    return ParamStore(spec, flat, layout)


# -- element-generic helpers ------------------------------------------------

def _any_var(*xs) -> bool:
    return any(isinstance(x, Var) for x in xs)


def _dense(y, w, b=None):
    if _any_var(y, w, b):
        return tape.dense(y, w, b)
    out = y @ w.T
    return out if b is None else out + b


def _linchan(y, w):
    if _any_var(y, w):
        return tape.linear_channels(y, w)
    return np.matmul(w, y)


def _concat(parts, axis):
    if _any_var(*parts):
        return tape.concat(parts, axis=axis)
    return np.concatenate(parts, axis=axis)


def _col(x, j):
    if isinstance(x, Var):
        return tape.getitem(x, (slice(None), j))
    return x[:, j]


def _act_values(x, kind):
    code = activations.code_of(kind)
    if isinstance(x, Var):
        return tape.act(x, code, 0)
    return backend.act_eval(code, x, 0)


def fourier_features(z: np.ndarray, W1: np.ndarray) -> np.ndarray:
    """First-layer Fourier mapping: concatenation [cos(W1 z); sin(W1 z)].

    z may be a single vector (d,) or a batch (B, d); every output component
    lies in [-1, 1].
    """
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    zz = np.atleast_2d(z)
    W1 = np.asarray(W1, dtype=np.float64)
    proj = zz @ W1.T
    out = np.concatenate([np.cos(proj), np.sin(proj)], axis=1)
    return out[0] if single else out


def scaled_inputs(scale: float, X: np.ndarray) -> np.ndarray:
    """Per-subnetwork input transform: every coordinate (x, t) times a_n."""
    return float(scale) * np.asarray(X, dtype=np.float64)


# -- forward passes ----------------------------------------------------------

def _layer_jet(j: JetArray, w, b) -> JetArray:
    return JetArray(_dense(j.val, w, b), _linchan(j.grad, w), _linchan(j.hess, w))


def _subnet_jets(spec: MlpSpec, get, prefix: str, j_in: JetArray,
                 with_output: bool) -> JetArray:
    fourier = spec.first_layer_activation == activations.FOURIER_PAIR
    z = _layer_jet(j_in, get(f"{prefix}L0.W"),
                   None if fourier else get(f"{prefix}L0.b"))
    if fourier:
        c, s = z.apply("cos"), z.apply("sin")
        y = JetArray(_concat([c.val, s.val], 1), _concat([c.grad, s.grad], 1),
                     _concat([c.hess, s.hess], 1))
    else:
        y = z.apply(spec.first_layer_activation)
    for i in range(1, len(spec.hidden_sizes)):
        y = _layer_jet(y, get(f"{prefix}L{i}.W"), get(f"{prefix}L{i}.b"))
        y = y.apply(spec.hidden_activation)
    if with_output:
        y = _layer_jet(y, get(f"{prefix}out.W"), get(f"{prefix}out.b"))
    return y


def _subnet_values(spec: MlpSpec, get, prefix: str, x, with_output: bool):
    fourier = spec.first_layer_activation == activations.FOURIER_PAIR
    z = _dense(x, get(f"{prefix}L0.W"), None if fourier else get(f"{prefix}L0.b"))
    if fourier:
        y = _concat([_act_values(z, "cos"), _act_values(z, "sin")], 1)
    else:
        y = _act_values(z, spec.first_layer_activation)
    for i in range(1, len(spec.hidden_sizes)):
        y = _act_values(_dense(y, get(f"{prefix}L{i}.W"), get(f"{prefix}L{i}.b")),
                        spec.hidden_activation)
    if with_output:
        y = _dense(y, get(f"{prefix}out.W"), get(f"{prefix}out.b"))
    return y


def _input_jet(X: np.ndarray, scale: float = 1.0) -> JetArray:
    b, d = X.shape
    grad = np.zeros((b, d, d))
    idx = np.arange(d)
    grad[:, idx, idx] = scale
    return JetArray(scale * X, grad, np.zeros((b, d, d)))


def _check_input(spec: NetSpec, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    din = spec.input_dim if isinstance(spec, MlpSpec) else spec.subnet.input_dim
    if X.shape[1] != din:
        raise ShapeMismatch(f"input dim {X.shape[1]} != spec input dim {din}")
    return X


def forward_jets(spec: NetSpec, get, X: np.ndarray) -> JetArray:
    """Scalar-output jets over a batch; ``get`` maps tensor name -> array or Var."""
    X = _check_input(spec, X)
    if isinstance(spec, MlpSpec):
        out = _subnet_jets(spec, get, "", _input_jet(X), with_output=True)
        return JetArray(_col(out.val, 0), _col(out.grad, 0), _col(out.hess, 0))
    n = len(spec.scale_factors)
    if spec.combine == "average":
        acc = None
        for i, a in enumerate(spec.scale_factors):
            f = _subnet_jets(spec.subnet, get, f"s{i}.", _input_jet(X, a), True)
            f = JetArray(_col(f.val, 0), _col(f.grad, 0), _col(f.hess, 0))
            term = f * (1.0 / (n * a))
            acc = term if acc is None else acc + term
        return acc
    hs = [_subnet_jets(spec.subnet, get, f"s{i}.", _input_jet(X, a), False)
          for i, a in enumerate(spec.scale_factors)]
    cat = JetArray(_concat([h.val for h in hs], 1),
                   _concat([h.grad for h in hs], 1),
                   _concat([h.hess for h in hs], 1))
    out = _layer_jet(cat, get("head.W"), get("head.b"))
    return JetArray(_col(out.val, 0), _col(out.grad, 0), _col(out.hess, 0))


def forward_values(spec: NetSpec, get, X: np.ndarray):
    X = _check_input(spec, X)
    if isinstance(spec, MlpSpec):
        return _col(_subnet_values(spec, get, "", X, True), 0)
    n = len(spec.scale_factors)
    if spec.combine == "average":
        acc = None
        for i, a in enumerate(spec.scale_factors):
            f = _col(_subnet_values(spec.subnet, get, f"s{i}.", scaled_inputs(a, X), True), 0)
            term = f * (1.0 / (n * a))
            acc = term if acc is None else acc + term
        return acc
    hs = [_subnet_values(spec.subnet, get, f"s{i}.", scaled_inputs(a, X), False)
          for i, a in enumerate(spec.scale_factors)]
    return _col(_dense(_concat(hs, 1), get("head.W"), get("head.b")), 0)


def mlp_forward(spec: MlpSpec, params: ParamStore, x) -> float | np.ndarray:
    """Scalar MLP output; returns a float for a single input point."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out = forward_values(spec, params.tensor, np.atleast_2d(x))
    return float(out[0]) if single else out


def ensemble_forward(spec: EnsembleSpec, params: ParamStore, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out = forward_values(spec, params.tensor, np.atleast_2d(x))
    return float(out[0]) if single else out


class NetworkPredictor:
    """A (spec, params) pair exposing the scalar-field predictor protocol."""

    def __init__(self, spec: NetSpec, params: ParamStore):
        self.spec = spec
        self.params = params

    def jets(self, X: np.ndarray) -> JetArray:
        return forward_jets(self.spec, self.params.tensor, X)

    def values(self, X: np.ndarray) -> np.ndarray:
        return forward_values(self.spec, self.params.tensor, X)

    def jets_with(self, leaves, X: np.ndarray) -> JetArray:
        """Forward with tape Vars substituted for parameters (training path)."""
        return forward_jets(self.spec, leaves.__getitem__, X)

    def values_with(self, leaves, X: np.ndarray):
        return forward_values(self.spec, leaves.__getitem__, X)


# -- checkpoints --------------------------------------------------------------

def spec_to_dict(spec: NetSpec) -> dict:
    if isinstance(spec, MlpSpec):
        return {"kind": "mlp", "input_dim": spec.input_dim,
                "hidden_sizes": list(spec.hidden_sizes),
                "hidden_activation": spec.hidden_activation,
                "first_layer_activation": spec.first_layer_activation,
                "output_dim": spec.output_dim,
                "trainable_first_layer": spec.trainable_first_layer}
    return {"kind": "ensemble", "subnet": spec_to_dict(spec.subnet),
            "scale_factors": list(spec.scale_factors), "combine": spec.combine}


def spec_from_dict(d: dict) -> NetSpec:
    kind = d.get("kind")
    if kind == "mlp":
        return MlpSpec(d["input_dim"], tuple(d["hidden_sizes"]),
                       d.get("hidden_activation", "sin"),
                       d.get("first_layer_activation", "sin"),
                       d.get("output_dim", 1),
                       d.get("trainable_first_layer", True))
    if kind == "ensemble":
        return EnsembleSpec(spec_from_dict(d["subnet"]),
                            tuple(d["scale_factors"]), d.get("combine", "average"))
    raise UnsupportedPrimitive(f"unknown spec kind {kind!r}")


def save_checkpoint(path, params: ParamStore) -> None:
    """Write spec + flat parameters as JSON; float64 round-trip is exact."""
    payload = {"format": 1, "spec": spec_to_dict(params.spec),
               "flat": params.flat.tolist()}
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> ParamStore:
    with open(path) as fh:
        payload = json.load(fh)
    spec = spec_from_dict(payload["spec"])
    return ParamStore.from_flat(spec, np.asarray(payload["flat"], dtype=np.float64))
