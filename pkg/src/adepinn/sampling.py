"""Uniform collocation sampling: interior, boundary, initial, and test sets.

All samplers are pure functions of (spec, seed): streams come from a
counter-based Philox generator keyed by (seed, role, epoch) through
SeedSequence spawning, so per-role and per-epoch draws are independent and
reproducible. Domains with excluded regions (holes, shell) are sampled by
rejection from the bounding box.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptySampleSet, NoSuchFace, RejectionStall
from .pde import Box
from .presets import GridSlice, SphereSlice

ROLE_IDS = {"interior": 0, "boundary": 1, "initial": 2, "test": 3, "fit": 4}

STALL_DRAWS = 1_000_000
STALL_RATE = 0.01


def rng_stream(seed: int, role: str, epoch: int = 0) -> np.random.Generator:
    """Independent deterministic stream for (seed, role, epoch)."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(ROLE_IDS[role], int(epoch)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class SampleBatch:
    """Points of one role; boundary batches carry face ids and normal axes."""

    points: np.ndarray                     # (n, d+1), time in the last column
    role: str
    faces: Optional[np.ndarray] = None     # (n,) face ids
    axes: Optional[np.ndarray] = None      # (n,) fixed-coordinate axis, -1 if none

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def spatial(self) -> np.ndarray:
        return self.points[:, :-1]

    @property
    def times(self) -> np.ndarray:
        return self.points[:, -1]

    def to_csv(self, path) -> None:
        dim = self.points.shape[1] - 1
        header = list("xyz"[:dim]) + ["t", "role", "face"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(len(self)):
                face = "" if self.faces is None else int(self.faces[i])
                w.writerow([repr(float(v)) for v in self.points[i]] + [self.role, face])


def batch_from_csv(path) -> SampleBatch:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    ncoord = header.index("t") + 1
    pts = np.array([[float(v) for v in r[:ncoord]] for r in body])
    role = body[0][ncoord] if body else "test"
    faces = None
    if body and body[0][ncoord + 1] != "":
        faces = np.array([int(r[ncoord + 1]) for r in body])
    return SampleBatch(pts, role, faces)


def _uniform_box(rng: np.random.Generator, bounds, n: int) -> np.ndarray:
    return np.column_stack([rng.uniform(a, b, n) for a, b in bounds])


def _rejection_spatial(domain, rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform spatial points of the domain; rejection from its bounding box."""
    bounds = domain.bounding_box()
    if type(domain) in (Box,) or getattr(domain, "kind", "") in ("box", "interval"):
        return _uniform_box(rng, bounds, n)
    out = np.empty((n, len(bounds)))
    have = 0
    drawn = 0
    accepted = 0
    chunk = max(4 * n, 1024)
    while have < n:
        cand = _uniform_box(rng, bounds, chunk)
        keep = cand[domain.contains(cand)]
        drawn += chunk
        accepted += keep.shape[0]
        take = min(n - have, keep.shape[0])
        out[have:have + take] = keep[:take]
        have += take
        if drawn >= STALL_DRAWS and accepted / drawn < STALL_RATE:
            raise RejectionStall(
                f"acceptance rate {accepted / drawn:.2e} after {drawn} draws")
    return out


def sample_interior(domain, time_range, n: int, seed: int, *, epoch: int = 0) -> SampleBatch:
    """n uniform points on domain x (t0, T]."""
    if n < 1:
        raise EmptySampleSet("interior batch size must be >= 1")
    rng = rng_stream(seed, "interior", epoch)
    X = _rejection_spatial(domain, rng, n)
    t = rng.uniform(time_range[0], time_range[1], n)
    return SampleBatch(np.column_stack([X, t]), "interior")


def _resolve_faces(domain, face_filter):
    faces = domain.faces()
    if face_filter is None:
        return list(faces)
    wanted = set(face_filter)
    byname = {f.name: f for f in faces}
    byid = {f.id: f for f in faces}
    out = []
    for key in face_filter:
        f = byname.get(key) if isinstance(key, str) else byid.get(key)
        if f is None:
            raise NoSuchFace(f"domain has no face {key!r}")
        out.append(f)
    if not out:
        raise NoSuchFace(f"empty face filter {wanted}")
    return out


def sample_boundary(domain, time_range, n: int, seed: int,
                    face_filter=None, *, epoch: int = 0) -> SampleBatch:
    """n points uniform over the (filtered) boundary x time, weighted by face measure."""
    if n < 1:
        raise EmptySampleSet("boundary batch size must be >= 1")
    rng = rng_stream(seed, "boundary", epoch)
    faces = _resolve_faces(domain, face_filter)
    measures = np.array([domain.face_measure(f) for f in faces])
    counts = rng.multinomial(n, measures / measures.sum())
    pts, fids, axes = [], [], []
    for f, c in zip(faces, counts):
        if c == 0:
            continue
        Xs = domain.sample_face(f, int(c), rng)
        ts = rng.uniform(time_range[0], time_range[1], int(c))
        pts.append(np.column_stack([Xs, ts]))
        fids.append(np.full(int(c), f.id))
        axes.append(np.full(int(c), -1 if f.axis is None else f.axis))
    return SampleBatch(np.concatenate(pts), "boundary",
                       np.concatenate(fids), np.concatenate(axes))


def sample_initial(domain, time_range, n: int, seed: int, *, epoch: int = 0) -> SampleBatch:
    """n uniform points on the domain, all at exactly t = t0."""
    if n < 1:
        raise EmptySampleSet("initial batch size must be >= 1")
    rng = rng_stream(seed, "initial", epoch)
    X = _rejection_spatial(domain, rng, n)
    t = np.full(n, float(time_range[0]))
    return SampleBatch(np.column_stack([X, t]), "initial")


def test_grid(domain, time_range, slice_spec) -> SampleBatch:
    """Deterministic test set for a slice spec; excluded regions removed."""
    if isinstance(slice_spec, SphereSlice):
        th = np.linspace(0.0, np.pi, slice_spec.n_theta)
        ph = np.linspace(0.0, 2.0 * np.pi, slice_spec.n_phi, endpoint=False)
        TH, PH = np.meshgrid(th, ph, indexing="ij")
        r = slice_spec.radius
        X = np.column_stack([
            (r * np.sin(TH) * np.cos(PH)).ravel(),
            (r * np.sin(TH) * np.sin(PH)).ravel(),
            (r * np.cos(TH)).ravel(),
        ])
        pts = np.column_stack([X, np.full(X.shape[0], slice_spec.t)])
        return SampleBatch(pts, "test")
    if not isinstance(slice_spec, GridSlice):
        raise TypeError(f"unknown slice spec {type(slice_spec)!r}")
    dim = domain.dim
    fixed = dict(slice_spec.fixed)
    free = [k for k in range(dim + 1) if k not in fixed]
    if len(free) > 2:
        raise ValueError("a grid slice must fix all but at most two axes")
    spans = list(domain.bounding_box()) + [tuple(time_range)]
    axes_vals = [np.linspace(spans[k][0], spans[k][1], slice_spec.resolution) for k in free]
    mesh = np.meshgrid(*axes_vals, indexing="ij") if axes_vals else []
    count = mesh[0].size if mesh else 1
    pts = np.empty((count, dim + 1))
    for k, v in fixed.items():
        pts[:, k] = v
    for k, m in zip(free, mesh):
        pts[:, k] = m.ravel()
    keep = domain.contains(pts[:, :dim])
    return SampleBatch(pts[keep], "test")
