"""Experiment runner: single runs, hyperparameter sweeps, model comparisons.

Every run writes exactly five artifacts into its output directory: the
effective config (JSON), the training history CSV, a summary CSV, the
pointwise error-field CSV for the example's designated test slice, and a
parameter checkpoint. Config file and flags compose with flags winning.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import metrics, training
from .errors import AdePinnError, ConfigError
from .network import save_checkpoint
from .presets import GridSlice, ProblemPreset, preset, problem_from_config
from .training import TrainConfig, TrainResult

OUT_ROOT_ENV = "ADEPINN_OUT_ROOT"

DESK_DEFAULTS = {
    "epochs": 5000, "n_interior": 2000, "n_boundary": 500, "n_initial": 500,
    "hidden_sizes": [10, 20, 10], "scale_factors": [1.0, 2.0, 3.0, 4.0],
}

# full-scale protocol: 50k epochs, 20 subnetworks, the published layer sizes
PAPER_DEFAULTS = {
    "epochs": 50000, "n_interior": 8000, "n_boundary": 4000, "n_initial": 3000,
    "hidden_sizes": [10, 25, 20, 20, 10],
    "scale_factors": [float(k) for k in range(1, 21)],
    "pinn_hidden_sizes": [100, 150, 80, 80, 50],
    "lr_every": 100,
}

BASE_CONFIG = {
    "example": "ex1",
    "model": "sfhcpinn",
    "epochs": DESK_DEFAULTS["epochs"],
    "seed": 0,
    "eval_every": 1000,
    "n_interior": DESK_DEFAULTS["n_interior"],
    "n_boundary": DESK_DEFAULTS["n_boundary"],
    "n_initial": DESK_DEFAULTS["n_initial"],
    "hidden_sizes": DESK_DEFAULTS["hidden_sizes"],
    "activation": None,
    "scale_factors": DESK_DEFAULTS["scale_factors"],
    "fourier_first": True,
    "trainable_fourier": True,
    "combine": "average",
    "lr0": 0.01,
    "lr_decay": 0.025,
    "lr_every": 20,
    "gamma0": 20.0,
    "omega0": 20.0,
    "literal_constraints": False,
    "fixed_batches": False,
    "fit_steps": 2000,
    "test_resolution": None,
    "paper_scale": False,
    "problem": None,  # optional custom problem definition
}


def effective_config(file_cfg: dict | None, flag_cfg: dict) -> dict:
    """BASE_CONFIG <- paper-scale defaults <- config file <- explicit flags."""
    cfg = dict(BASE_CONFIG)
    stages = [file_cfg or {}, {k: v for k, v in flag_cfg.items() if v is not None}]
    paper = any(s.get("paper_scale") for s in stages) or cfg["paper_scale"]
    if paper:
        cfg.update({k: v for k, v in PAPER_DEFAULTS.items() if k != "pinn_hidden_sizes"})
        cfg["paper_scale"] = True
    for s in stages:
        for k, v in s.items():
            if k not in cfg:
                raise ConfigError(f"unknown config key {k!r}")
            cfg[k] = v
    if paper and cfg["model"] == "pinn" and cfg["hidden_sizes"] == PAPER_DEFAULTS["hidden_sizes"]:
        cfg["hidden_sizes"] = PAPER_DEFAULTS["pinn_hidden_sizes"]
    return cfg


def _bundle(cfg: dict) -> ProblemPreset:
    if cfg.get("problem"):
        problem = problem_from_config(cfg["problem"])
        if cfg["model"] in ("sfhcpinn",):
            raise ConfigError(
                "custom problems have no analytic distance/extension pair; "
                "use pinn, sfpinn, or sfhcpinn_nn")
        kinds = {problem.bc.conditions[f.id].kind for f in problem.domain.faces()}
        hard = "dirichlet" if kinds == {"dirichlet"} else (
            "neumann" if kinds == {"neumann"} else "mixed")
        fixed = () if problem.dim == 1 else tuple(
            (ax, 0.5 * sum(problem.domain.bounding_box()[ax]))
            for ax in range(2, problem.dim)) + ((problem.dim, problem.bc.time_range[1]),)
        return ProblemPreset(cfg["problem"].get("name", "custom"), problem, hard,
                             None, None, None, None, GridSlice(fixed, 100))
    return preset(cfg["example"])


def train_config(cfg: dict, bundle: ProblemPreset) -> TrainConfig:
    return TrainConfig(
        problem=bundle,
        model=cfg["model"],
        epochs=int(cfg["epochs"]),
        n_interior=int(cfg["n_interior"]),
        n_boundary=int(cfg["n_boundary"]),
        n_initial=int(cfg["n_initial"]),
        seed=int(cfg["seed"]),
        eval_every=int(cfg["eval_every"]),
        hidden_sizes=tuple(cfg["hidden_sizes"]),
        activation=cfg["activation"],
        scale_factors=tuple(cfg["scale_factors"]),
        fourier_first=bool(cfg["fourier_first"]),
        trainable_fourier=bool(cfg["trainable_fourier"]),
        combine=cfg["combine"],
        lr0=float(cfg["lr0"]),
        lr_decay=float(cfg["lr_decay"]),
        lr_every=int(cfg["lr_every"]),
        weights=training.LossWeights(float(cfg["gamma0"]), float(cfg["omega0"])),
        literal_constraints=bool(cfg["literal_constraints"]),
        fixed_batches=bool(cfg["fixed_batches"]),
        fit_steps=int(cfg["fit_steps"]),
        test_resolution=cfg["test_resolution"],
    ).validate()


def out_root() -> Path:
    return Path(os.environ.get(OUT_ROOT_ENV, "adepinn_runs"))


def run_dir_for(cfg: dict, out: str | None) -> Path:
    if out:
        return Path(out)
    name = f"{cfg.get('example', 'custom')}_{cfg['model']}_e{cfg['epochs']}_s{cfg['seed']}"
    return out_root() / name


def execute_run(cfg: dict, out_dir: Path) -> TrainResult:
    """Train once and emit the five run artifacts."""
    bundle = _bundle(cfg)
    tcfg = train_config(cfg, bundle)
    result = training.train(tcfg)

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    training.write_history(out_dir / "history.csv", result)

    test_batch, test_exact = training.build_test_set(bundle, tcfg.test_resolution)
    pv = result.predictor.values(test_batch.points)
    summary = metrics.summarize(pv, test_exact)
    metrics.write_summary(out_dir / "summary.csv", [{
        "model": cfg["model"], "example": cfg.get("example") or "custom",
        "mse": summary.mse, "rel": summary.rel, "max_abs": summary.max_abs,
        "n_points": summary.n_points}])
    field = np.column_stack([test_batch.points, np.abs(pv - test_exact)])
    metrics.write_error_field(out_dir / "error_field.csv", field)
    save_checkpoint(out_dir / "checkpoint.json", result.params)

    status = "aborted(non-finite)" if result.aborted else "ok"
    print(f"[{cfg.get('example') or 'custom'}/{cfg['model']}] {status} "
          f"final MSE={summary.mse:.6e} REL={summary.rel:.6e} -> {out_dir}")
    return result


SWEEP_AXES = ("activation", "hidden_sizes", "lr0")


def parse_sweep_value(axis: str, raw: str):
    if axis == "activation":
        return raw
    if axis == "lr0":
        return float(raw)
    if axis == "hidden_sizes":
        return [int(tok) for tok in raw.split("-")]
    raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")


def execute_sweep(cfg: dict, axis: str, values: list, out_dir: Path) -> list[dict]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    if not values:
        raise ConfigError("sweep needs a nonempty value list")
    rows = []
    for raw in values:
        val = parse_sweep_value(axis, raw) if isinstance(raw, str) else raw
        sub = dict(cfg)
        sub[axis] = val
        tag = str(raw).replace("/", "_")
        try:
            result = execute_run(sub, out_dir / f"{axis}={tag}")
            rows.append({"axis": axis, "value": raw, "mse": result.final_mse,
                         "rel": result.final_rel,
                         "status": "aborted" if result.aborted else "ok"})
        except AdePinnError as exc:  # record and continue with the next value
            rows.append({"axis": axis, "value": raw, "mse": float("inf"),
                         "rel": float("inf"), "status": f"error: {exc}"})
    rows.sort(key=lambda r: (not np.isfinite(r["rel"]), r["rel"]))
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "axis", "value", "mse", "rel", "status"])
        for i, r in enumerate(rows, 1):
            w.writerow([i, r["axis"], r["value"], repr(r["mse"]), repr(r["rel"]),
                        r["status"]])
    print(f"sweep table -> {out_dir / 'sweep.csv'}")
    for i, r in enumerate(rows, 1):
        print(f"  {i}. {axis}={r['value']}: REL={r['rel']:.3e} ({r['status']})")
    return rows


def execute_compare(cfg: dict, models: list[str], out_dir: Path) -> list[dict]:
    if len(models) < 2:
        raise ConfigError("compare needs at least two models")
    rows = []
    for model in models:
        sub = dict(cfg)
        sub["model"] = model
        result = execute_run(sub, out_dir / model)
        rows.append({"model": model, "example": cfg.get("example") or "custom",
                     "mse": result.final_mse, "rel": result.final_rel})
    ranked = sorted(rows, key=lambda r: r["rel"])
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "example", "mse", "rel", "rel_rank"])
        for r in rows:
            w.writerow([r["model"], r["example"], repr(r["mse"]), repr(r["rel"]),
                        1 + [x["model"] for x in ranked].index(r["model"])])
    order = " < ".join(r["model"] for r in ranked)
    print(f"REL ranking (best first): {order}")
    return rows


# -- argument parsing -------------------------------------------------------------

def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--example", choices=("ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7"))
    p.add_argument("--model", choices=training.MODELS)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", help="output directory (default under $%s)" % OUT_ROOT_ENV)
    p.add_argument("--eval-every", dest="eval_every", type=int)
    p.add_argument("--paper-scale", dest="paper_scale", action="store_const", const=True)
    p.add_argument("--n-interior", dest="n_interior", type=int)
    p.add_argument("--n-boundary", dest="n_boundary", type=int)
    p.add_argument("--n-initial", dest="n_initial", type=int)
    p.add_argument("--hidden-sizes", dest="hidden_sizes",
                   type=lambda s: [int(t) for t in s.split(",")])
    p.add_argument("--activation")
    p.add_argument("--scale-factors", dest="scale_factors",
                   type=lambda s: [float(t) for t in s.split(",")])
    p.add_argument("--no-fourier", dest="fourier_first", action="store_const", const=False)
    p.add_argument("--frozen-fourier", dest="trainable_fourier",
                   action="store_const", const=False)
    p.add_argument("--combine", choices=("average", "linear_head"))
    p.add_argument("--lr0", type=float)
    p.add_argument("--gamma0", type=float)
    p.add_argument("--literal-constraints", dest="literal_constraints",
                   action="store_const", const=True)
    p.add_argument("--test-resolution", dest="test_resolution", type=int)


def _flag_cfg(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "out", "sweep_axis", "sweep_values", "models"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adepinn",
                                 description="advection-diffusion PINN experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train one configuration and emit artifacts")
    _common_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="one run per value along a config axis")
    _common_flags(sweep_p)
    sweep_p.add_argument("--sweep-axis", dest="sweep_axis", required=True,
                         choices=SWEEP_AXES)
    sweep_p.add_argument("--sweep-values", dest="sweep_values", required=True,
                         help="comma-separated values (hidden sizes like 10-20-10)")

    cmp_p = sub.add_parser("compare", help="identical-budget runs for several models")
    _common_flags(cmp_p)
    cmp_p.add_argument("--models", required=True,
                       help="comma-separated model list (>= 2)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    file_cfg = None
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    try:
        cfg = effective_config(file_cfg, _flag_cfg(args))
        out_dir = run_dir_for(cfg, args.out)
        if args.command == "run":
            result = execute_run(cfg, out_dir)
            return 1 if result.aborted else 0
        if args.command == "sweep":
            execute_sweep(cfg, args.sweep_axis, args.sweep_values.split(","), out_dir)
            return 0
        if args.command == "compare":
            execute_compare(cfg, args.models.split(","), out_dir)
            return 0
    except AdePinnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
