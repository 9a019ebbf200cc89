"""Ablation sweep: grid x width x ReLU x prune ratio.

The default grid is 3 grid sizes x 2 width multipliers x ReLU on/off x
prune ratio {0, 0.25} = 24 cells, enumerated lexicographically in
(g, w, relu, p) with the list order given by the config.  Every cell
trains the spline-kernel model from the same seed, optionally prunes and
fine-tunes, then records validation loss/accuracy, parameter count,
per-sample MACs, median forward latency, and wall time.

A diverged cell (non-finite loss) is recorded with status ``failed`` and
does not abort the sweep.  With worker processes, latency profiling is
serialised behind a lock so timings never overlap; reports are always
merged in grid order.
"""

from __future__ import annotations

import csv
import json
import math
import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .data import Dataset, subset_dataset
from .errors import ConfigError
from .evaluation import (finetune_pruned, latency_profile, prune_channels_l2)
from .models import build_lenet_kan_full
from .splines import SplineSpec, bspline_spec, rbf_spec
from .training import EarlyStopper, evaluate_model, fit

RUNS_COLUMNS = ["g", "w", "relu", "p", "val_loss", "val_acc", "params",
                "macs", "latency_ms", "wall_s", "status"]


@dataclass
class SweepConfig:
    grid_sizes: list = field(default_factory=lambda: [4, 8, 16])
    width_mults: list = field(default_factory=lambda: [1.0, 1.5])
    relu_options: list = field(default_factory=lambda: [True, False])
    prune_ratios: list = field(default_factory=lambda: [0.0, 0.25])
    family: str = "rbf"
    degree: int = 3
    epochs: int = 5
    batch_size: int = 512
    lr: float = 1e-3
    finetune_epochs: int = 1
    early_stop_tolerance: int = 3
    seed: int = 0
    subset: int | None = None
    latency_batch: int = 32
    latency_warmup: int = 10
    latency_iters: int = 100

    def spline_spec(self, grid: int) -> SplineSpec:
        if self.family == "rbf":
            return rbf_spec(grid)
        return bspline_spec(grid, self.degree)


def default_sweep_config() -> SweepConfig:
    return SweepConfig()


_LIST_FIELDS = {
    "grid_sizes": int,
    "width_mults": float,
    "prune_ratios": float,
}
_SCALAR_FIELDS = {
    "family": str, "degree": int, "epochs": int, "batch_size": int,
    "lr": float, "finetune_epochs": int, "early_stop_tolerance": int,
    "seed": int, "subset": int, "latency_batch": int,
    "latency_warmup": int, "latency_iters": int,
}


def parse_sweep_config(path: str) -> SweepConfig:
    """key=value file; list values are comma separated; relu options are
    on/off tokens."""
    cfg = SweepConfig()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            try:
                if key in _LIST_FIELDS:
                    conv = _LIST_FIELDS[key]
                    setattr(cfg, key, [conv(tok) for tok in val.split(",")])
                elif key == "relu_options":
                    opts = []
                    for tok in val.split(","):
                        tok = tok.strip().lower()
                        if tok not in ("on", "off"):
                            raise ValueError(f"relu option must be on/off, got {tok!r}")
                        opts.append(tok == "on")
                    cfg.relu_options = opts
                elif key in _SCALAR_FIELDS:
                    setattr(cfg, key, _SCALAR_FIELDS[key](val))
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    validate_sweep_config(cfg)
    return cfg


def validate_sweep_config(cfg: SweepConfig) -> None:
    if cfg.family not in ("rbf", "bspline"):
        raise ConfigError(f"family must be rbf or bspline, got {cfg.family!r}")
    for g in cfg.grid_sizes:
        if g < 1:
            raise ConfigError(f"grid size must be >= 1, got {g}")
    for w in cfg.width_mults:
        if w <= 0:
            raise ConfigError(f"width multiplier must be > 0, got {w}")
    for p in cfg.prune_ratios:
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"prune ratio must be in [0,1), got {p}")
    if cfg.epochs < 1 or cfg.finetune_epochs < 1:
        raise ConfigError("epochs and finetune_epochs must be >= 1")
    if not (cfg.grid_sizes and cfg.width_mults and cfg.relu_options
            and cfg.prune_ratios):
        raise ConfigError("every sweep factor needs at least one level")


@dataclass(frozen=True)
class SweepCell:
    index: int
    g: int
    w: float
    relu: bool
    p: float


def enumerate_grid(cfg: SweepConfig) -> list[SweepCell]:
    cells = []
    i = 0
    for g in cfg.grid_sizes:
        for w in cfg.width_mults:
            for relu in cfg.relu_options:
                for p in cfg.prune_ratios:
                    cells.append(SweepCell(i, int(g), float(w), bool(relu),
                                           float(p)))
                    i += 1
    return cells


@dataclass
class CellResult:
    cell: SweepCell
    status: str = "ok"
    val_loss: float | None = None
    val_acc: float | None = None
    params: int | None = None
    macs: int | None = None
    latency_ms: float | None = None
    wall_s: float = 0.0


def run_cell(cell: SweepCell, cfg: SweepConfig, train: Dataset, val: Dataset,
             profile_lock=None, verbose: bool = False) -> CellResult:
    t0 = time.perf_counter()
    spec = cfg.spline_spec(cell.g)
    model = build_lenet_kan_full(spec, cell.w, cell.relu, seed=cfg.seed)
    result = CellResult(cell=cell)
    fitres = fit(model, train, val, epochs=cfg.epochs,
                 batch_size=cfg.batch_size, lr=cfg.lr,
                 stopper=EarlyStopper(cfg.early_stop_tolerance),
                 seed=cfg.seed, verbose=verbose)
    if fitres.report.status != "ok":
        result.status = "failed"
        result.wall_s = time.perf_counter() - t0
        return result
    model.load_state(fitres.best_state)
    if cell.p > 0.0:
        mask = prune_channels_l2(model, cell.p)
        ft = finetune_pruned(model, mask, train, val,
                             epochs=cfg.finetune_epochs,
                             batch_size=cfg.batch_size, lr=cfg.lr,
                             seed=cfg.seed + 1, verbose=verbose)
        if ft.report.status != "ok":
            result.status = "failed"
            result.wall_s = time.perf_counter() - t0
            return result
        model.load_state(ft.best_state)
    val_loss, val_acc = evaluate_model(model, val)
    result.val_loss = float(val_loss)
    result.val_acc = float(val_acc)
    result.params = int(model.param_count())
    result.macs = int(model.mac_count())
    if profile_lock is not None:
        with profile_lock:
            prof = latency_profile(model, cfg.latency_batch,
                                   cfg.latency_warmup, cfg.latency_iters)
    else:
        prof = latency_profile(model, cfg.latency_batch, cfg.latency_warmup,
                               cfg.latency_iters)
    result.latency_ms = prof.median_ms
    result.wall_s = time.perf_counter() - t0
    return result


_WORKER: dict = {}


def _init_worker(cfg, train, val, lock):
    _WORKER["cfg"] = cfg
    _WORKER["train"] = train
    _WORKER["val"] = val
    _WORKER["lock"] = lock


def _run_cell_in_worker(cell: SweepCell) -> CellResult:
    return run_cell(cell, _WORKER["cfg"], _WORKER["train"], _WORKER["val"],
                    profile_lock=_WORKER["lock"])


def run_sweep(cfg: SweepConfig, train: Dataset, val: Dataset, out_dir: str,
              workers: int = 1, verbose: bool = False) -> list[CellResult]:
    """Run every cell and write runs.csv / frontier.csv / radar.csv /
    summary.json under out_dir.  Results come back in grid order."""
    validate_sweep_config(cfg)
    cells = enumerate_grid(cfg)
    if cfg.subset:
        train = subset_dataset(train, cfg.subset, cfg.seed)
    if workers <= 1:
        results = []
        for cell in cells:
            res = run_cell(cell, cfg, train, val, verbose=verbose)
            if verbose:
                print(f"cell {cell.index}: g={cell.g} w={cell.w} "
                      f"relu={'on' if cell.relu else 'off'} p={cell.p} "
                      f"-> {res.status} acc={res.val_acc}")
            results.append(res)
    else:
        ctx = mp.get_context("fork")
        lock = ctx.Lock()
        with ctx.Pool(workers, _init_worker, (cfg, train, val, lock)) as pool:
            results = pool.map(_run_cell_in_worker, cells, chunksize=1)
    emit_reports(results, out_dir)
    return results


def _fmt(value, pattern: str) -> str:
    if value is None:
        return ""
    return pattern.format(value)


def normalize_radar(values: np.ndarray, invert: bool) -> np.ndarray:
    """Min-max to [0,1]; cost axes are flipped so 1 is always better.
    Degenerate axes (fewer than 2 distinct values) map to constant 0.5."""
    vals = np.asarray(values, dtype=np.float64)
    lo, hi = vals.min(), vals.max()
    if not np.isfinite(lo) or not np.isfinite(hi) or hi == lo:
        return np.full(vals.shape, 0.5)
    norm = (vals - lo) / (hi - lo)
    return 1.0 - norm if invert else norm


def _relu_tok(relu: bool) -> str:
    return "on" if relu else "off"


def emit_reports(results: list[CellResult], out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUNS_COLUMNS)
        for res in results:
            c = res.cell
            writer.writerow([
                c.g, c.w, _relu_tok(c.relu), c.p,
                _fmt(res.val_loss, "{:.6f}"), _fmt(res.val_acc, "{:.6f}"),
                _fmt(res.params, "{:d}"), _fmt(res.macs, "{:d}"),
                _fmt(res.latency_ms, "{:.3f}"), "{:.2f}".format(res.wall_s),
                res.status,
            ])

    ok = [r for r in results if r.status == "ok"]

    with open(os.path.join(out_dir, "frontier.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["macs", "val_acc"])
        for res in sorted(ok, key=lambda r: (r.macs, r.cell.index)):
            writer.writerow([res.macs, "{:.6f}".format(res.val_acc)])

    with open(os.path.join(out_dir, "radar.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["g", "w", "relu", "p", "params_score", "macs_score",
                         "latency_score", "acc_score"])
        if ok:
            axes = {
                "params": normalize_radar([r.params for r in ok], invert=True),
                "macs": normalize_radar([r.macs for r in ok], invert=True),
                "latency": normalize_radar([r.latency_ms for r in ok], invert=True),
                "acc": normalize_radar([r.val_acc for r in ok], invert=False),
            }
            for i, res in enumerate(ok):
                c = res.cell
                writer.writerow([
                    c.g, c.w, _relu_tok(c.relu), c.p,
                    "{:.4f}".format(axes["params"][i]),
                    "{:.4f}".format(axes["macs"][i]),
                    "{:.4f}".format(axes["latency"][i]),
                    "{:.4f}".format(axes["acc"][i]),
                ])

    summary = {
        "n_cells": len(results),
        "n_ok": len(ok),
        "n_failed": len(results) - len(ok),
    }
    if ok:
        best = max(ok, key=lambda r: (r.val_acc, -r.cell.index))
        base = ok[0]
        for tag, res in (("best", best), ("baseline", base)):
            summary[tag] = {
                "g": res.cell.g, "w": res.cell.w,
                "relu": _relu_tok(res.cell.relu), "p": res.cell.p,
                "val_acc": res.val_acc, "val_loss": res.val_loss,
                "params": res.params, "macs": res.macs,
                "latency_ms": res.latency_ms,
            }
        summary["ratios"] = {
            "params_best_over_baseline": best.params / base.params,
            "macs_best_over_baseline": best.macs / base.macs,
            "latency_best_over_baseline": (best.latency_ms / base.latency_ms
                                           if base.latency_ms else math.nan),
            "acc_delta_best_minus_baseline": best.val_acc - base.val_acc,
        }
    with open(os.path.join(out_dir, "summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_runs_csv(path: str) -> list[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
