"""Error criteria and pointwise error fields.

REL here is the *square* of the relative L2 norm: sum of squared errors over
the sum of squared reference values. Do not square it again when comparing
against relative-error figures elsewhere.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch, ZeroDenominator


@dataclass
class ErrorSummary:
    mse: float
    rel: float
    max_abs: float
    n_points: int


def _paired(pred, exact):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    exact = np.asarray(exact, dtype=np.float64).ravel()
    if pred.size == 0 or exact.size == 0:
        raise EmptyInput("metric inputs must be nonempty")
    if pred.size != exact.size:
        raise LengthMismatch(f"lengths differ: {pred.size} vs {exact.size}")
    return pred, exact


def mse(pred, exact) -> float:
    """Mean of squared differences."""
    p, e = _paired(pred, exact)
    return float(np.mean((p - e) ** 2))


def rel(pred, exact) -> float:
    """Sum of squared errors over sum of squared reference values (squared L2 form)."""
    p, e = _paired(pred, exact)
    denom = float(np.sum(e ** 2))
    if denom == 0.0:
        raise ZeroDenominator("reference values are identically zero")
    return float(np.sum((p - e) ** 2) / denom)


def summarize(pred, exact) -> ErrorSummary:
    p, e = _paired(pred, exact)
    return ErrorSummary(mse(p, e), rel(p, e), float(np.max(np.abs(p - e))), p.size)


def pointwise_error_field(predictor, exact, batch) -> np.ndarray:
    """(coords, |prediction - exact|) rows for heatmap rendering."""
    X = batch.points
    if X.shape[0] == 0:
        raise EmptyInput("test batch is empty")
    from .diffengine.api import predict_values

    pv = predict_values(predictor, X)
    ev = np.asarray(exact.values(X) if hasattr(exact, "values") else exact(X))
    return np.column_stack([X, np.abs(pv - ev)])


def write_error_field(path, field: np.ndarray) -> None:
    dim = field.shape[1] - 2
    header = list("xyz"[:dim]) + ["t", "abs_error"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in field:
            w.writerow([repr(float(v)) for v in row])


def write_summary(path, rows: list[dict]) -> None:
    """One row per (model, example): model,example,mse,rel,max_abs,n_points."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "example", "mse", "rel", "max_abs", "n_points"])
        for r in rows:
            w.writerow([r["model"], r["example"], repr(r["mse"]), repr(r["rel"]),
                        repr(r["max_abs"]), r["n_points"]])
