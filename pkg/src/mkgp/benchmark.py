"""Benchmark harness: RMSE and kernel-weight summaries over seeded toy
realizations, for the hierarchical models and plain-GP baselines.

Baselines reuse the same engine with gamma clamped:
  * ``equal``  — gamma_p = P for all p, i.e. the single GP with kernel
    sum_p K_p / P, noise precision learned;
  * ``single`` — one fit per kernel with gamma = 1, noise learned.

Deterministic given the config seed: realization r of a regime uses toy
seed ``seed + r``, and all solvers are deterministic.  Realizations fan
out across processes when ``n_jobs > 1``; results are always assembled in
a fixed order, so the emitted CSV is byte-identical either way.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import BenchmarkConfig
from .dataio import format_float
from .gig import FAMILY_PRESETS
from .inference import FitConfig, FittedModel, Hyperparams, fit
from .prediction import predictive
from .toydata import ToyConfig, default_lengthscales, generate, regime_active

__all__ = ["BenchmarkResult", "run_benchmark", "write_benchmark_csv", "render_table", "fit_preset", "fit_baseline"]


def _fit_config(solver: dict) -> FitConfig:
    return FitConfig(
        tol=float(solver.get("tol", 1e-7)),
        max_iters=int(solver.get("max_iters", 300)),
        hyper_stride=int(solver.get("hyper_stride", 1)),
        learn_tau=bool(solver.get("learn_tau", True)),
        learn_hypers=bool(solver.get("learn_hypers", True)),
    )


def fit_preset(data, preset_name: str, solver: dict | None = None) -> FittedModel:
    """Fit one hierarchical model with the given family preset on a toy
    dataset."""
    preset = FAMILY_PRESETS[preset_name]
    cfg = _fit_config(solver or {})
    hyper = Hyperparams(preset.params(), math.nan, preset_name)
    return fit(data.X_train, data.y_train, data.kernel_specs(), hyper, cfg)


def fit_baseline(data, kind: str, kernel: int | None = None, solver: dict | None = None) -> FittedModel:
    """Fit a gamma-clamped GP baseline (``equal`` or ``single``)."""
    solver = dict(solver or {})
    specs = data.kernel_specs()
    cfg = _fit_config(solver)
    cfg.learn_gamma = False
    cfg.learn_hypers = False
    if kind == "equal":
        gamma_init = np.full(len(specs), float(len(specs)))
        return fit(data.X_train, data.y_train, specs, None, cfg, gamma_init=gamma_init)
    if kind == "single":
        return fit(data.X_train, data.y_train, [specs[kernel]], None, cfg)
    raise ValueError(f"unknown baseline kind {kind!r}")


def _model_names(cfg: BenchmarkConfig, n_kernels: int) -> list[str]:
    names = [f"mgp:{p}" for p in cfg.presets]
    if "equal" in cfg.baselines:
        names.append("gp:equal")
    if "single" in cfg.baselines:
        names += [f"gp:single-{k}" for k in range(1, n_kernels + 1)]
    return names


def _one_realization(args) -> dict:
    cfg_dict, regime, r = args
    cfg = BenchmarkConfig(**cfg_dict)
    n_kernels = int(cfg.toy.get("n_kernels", 10))
    lengthscales = cfg.toy.get("lengthscales")
    toy = ToyConfig(
        seed=cfg.seed + r,
        n_train=int(cfg.toy.get("n_train", 100)),
        n_test=int(cfg.toy.get("n_test", 100)),
        n_kernels=n_kernels,
        active=regime_active(regime, n_kernels),
        lengthscales=(
            tuple(float(l) for l in lengthscales)
            if lengthscales is not None
            else default_lengthscales(n_kernels)
        ),
        noise_std=float(cfg.toy.get("noise_std", 0.05)),
    )
    data = generate(toy)
    out = {"regime": regime, "realization": r, "rmse": {}, "weights": {}}
    for preset in cfg.presets:
        model = fit_preset(data, preset, cfg.solver)
        pred = predictive(model, data.X_test)
        out["rmse"][f"mgp:{preset}"] = _rmse(pred.mean, data.signal_test)
        out["weights"][f"mgp:{preset}"] = model.normalized_weights.tolist()
    if "equal" in cfg.baselines:
        model = fit_baseline(data, "equal", solver=cfg.solver)
        out["rmse"]["gp:equal"] = _rmse(predictive(model, data.X_test).mean, data.signal_test)
    if "single" in cfg.baselines:
        for k in range(n_kernels):
            model = fit_baseline(data, "single", kernel=k, solver=cfg.solver)
            out["rmse"][f"gp:single-{k + 1}"] = _rmse(
                predictive(model, data.X_test).mean, data.signal_test
            )
    return out


def _rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    model_names: list[str]
    # rmse[regime][model] -> list of per-realization values
    rmse: dict[str, dict[str, list[float]]]
    # weights[regime][preset] -> (R, n_kernels) array of normalized weights
    weights: dict[str, dict[str, np.ndarray]]

    def rmse_mean(self, regime: str, model: str) -> float:
        return float(np.mean(self.rmse[regime][model]))

    def rmse_std(self, regime: str, model: str) -> float:
        return float(np.std(self.rmse[regime][model]))

    def weight_quantiles(self, regime: str, preset: str, qs=(0.25, 0.5, 0.75)) -> np.ndarray:
        """(len(qs), n_kernels) quantiles of the normalized weights."""
        return np.quantile(self.weights[regime][f"mgp:{preset}"], qs, axis=0)


def run_benchmark(cfg: BenchmarkConfig) -> BenchmarkResult:
    n_kernels = int(cfg.toy.get("n_kernels", 10))
    names = _model_names(cfg, n_kernels)
    tasks = [(cfg.__dict__, regime, r) for regime in cfg.regimes for r in range(cfg.n_realizations)]
    if cfg.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            results = list(pool.map(_one_realization, tasks))
    else:
        results = [_one_realization(t) for t in tasks]

    rmse: dict[str, dict[str, list[float]]] = {
        reg: {m: [] for m in names} for reg in cfg.regimes
    }
    weights: dict[str, dict[str, list]] = {
        reg: {f"mgp:{p}": [] for p in cfg.presets} for reg in cfg.regimes
    }
    for res in results:  # pool.map preserves task order
        reg = res["regime"]
        for model, val in res["rmse"].items():
            rmse[reg][model].append(val)
        for model, w in res["weights"].items():
            weights[reg][model].append(w)
    weights_arr = {
        reg: {m: np.asarray(w) for m, w in per.items()} for reg, per in weights.items()
    }
    return BenchmarkResult(config=cfg, model_names=names, rmse=rmse, weights=weights_arr)


def write_benchmark_csv(result: BenchmarkResult, out_dir: str | Path) -> tuple[Path, Path]:
    """Write results.csv (per regime x model RMSE summary) and weights.csv
    (per regime x preset x kernel weight quantiles)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    with open(results_path, "w", newline="") as fh:
        fh.write("regime,model,n_realizations,rmse_mean,rmse_std\n")
        for regime in result.config.regimes:
            for model in result.model_names:
                vals = result.rmse[regime][model]
                fh.write(
                    f"{regime},{model},{len(vals)},"
                    f"{format_float(np.mean(vals))},{format_float(np.std(vals))}\n"
                )
    weights_path = out_dir / "weights.csv"
    with open(weights_path, "w", newline="") as fh:
        fh.write("regime,preset,kernel,weight_q25,weight_median,weight_q75\n")
        for regime in result.config.regimes:
            for preset in result.config.presets:
                q = result.weight_quantiles(regime, preset)
                for k in range(q.shape[1]):
                    fh.write(
                        f"{regime},{preset},{k + 1},"
                        f"{format_float(q[0, k])},{format_float(q[1, k])},{format_float(q[2, k])}\n"
                    )
    return results_path, weights_path


def render_table(result: BenchmarkResult) -> str:
    """Human-readable mean (std) RMSE table, models x regimes."""
    regimes = result.config.regimes
    width = max(len(m) for m in result.model_names) + 2
    lines = ["".ljust(width) + "".join(f"{r:>18}" for r in regimes)]
    for model in result.model_names:
        cells = []
        for regime in regimes:
            cells.append(
                f"{result.rmse_mean(regime, model):.4f} "
                f"(±{result.rmse_std(regime, model):.4f})"
            )
        lines.append(model.ljust(width) + "".join(f"{c:>18}" for c in cells))
    return "\n".join(lines) + "\n"
