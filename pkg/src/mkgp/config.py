"""Run configuration: YAML parsing with strict validation.

Unknown keys are rejected everywhere so that typos fail loudly before any
compute starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .gig import FAMILY_PRESETS, GigParams
from .inference import FitConfig, Hyperparams
from .kernels import KERNEL_FAMILIES, KernelSpec
from .toydata import ToyConfig, default_lengthscales, regime_active

__all__ = ["RunConfig", "BenchmarkConfig", "load_yaml", "parse_run_config",
           "parse_toy_config", "parse_benchmark_config"]


def load_yaml(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")


def _parse_kernel(d: dict, i: int) -> KernelSpec:
    _reject_unknown(d, {"family", "lengthscale", "amplitude", "feature_view"}, f"kernels[{i}]")
    if "family" not in d:
        raise ConfigError(f"kernels[{i}]: 'family' is required")
    if d["family"] not in KERNEL_FAMILIES:
        raise ConfigError(f"kernels[{i}]: unknown family {d['family']!r}")
    view = d.get("feature_view")
    return KernelSpec(
        family=d["family"],
        lengthscale=float(d.get("lengthscale", 1.0)),
        amplitude=float(d.get("amplitude", 1.0)),
        feature_view=tuple(int(c) for c in view) if view is not None else None,
    )


@dataclass
class RunConfig:
    task: str
    kernels: list[KernelSpec]
    family_preset: str
    hyper: Hyperparams
    fit: FitConfig
    seed: int = 0
    fix_gamma: bool = False          # plain-GP baseline mode: gamma clamped at 1
    gamma_init: list[float] | None = None


_SOLVER_KEYS = {
    "tol", "max_iters", "hyper_stride", "jitter_start_scale", "jitter_cap_scale",
    "learn_tau", "learn_hypers", "tau_max", "track_updates",
}


def parse_run_config(doc: dict, where: str = "config") -> RunConfig:
    _reject_unknown(
        doc,
        {"task", "kernels", "family_preset", "hyper", "solver", "seed", "fix_gamma", "gamma_init"},
        where,
    )
    task = doc.get("task", "regression")
    if task not in ("regression", "classification"):
        raise ConfigError(f"{where}: task must be 'regression' or 'classification', got {task!r}")
    kernels_doc = doc.get("kernels")
    if not kernels_doc or not isinstance(kernels_doc, list):
        raise ConfigError(f"{where}: 'kernels' must be a nonempty list")
    kernels = [_parse_kernel(k, i) for i, k in enumerate(kernels_doc)]

    preset_name = doc.get("family_preset", "free")
    if preset_name not in FAMILY_PRESETS:
        raise ConfigError(
            f"{where}: unknown family_preset {preset_name!r}; "
            f"available: {sorted(FAMILY_PRESETS)}"
        )
    preset = FAMILY_PRESETS[preset_name]

    hyper_doc = doc.get("hyper", {}) or {}
    _reject_unknown(hyper_doc, {"omega", "chi", "phi", "tau"}, f"{where}.hyper")
    prior = GigParams(
        float(hyper_doc.get("omega", preset.omega)),
        float(hyper_doc.get("chi", preset.chi)),
        float(hyper_doc.get("phi", preset.phi)),
    )
    tau = float(hyper_doc.get("tau", math.nan))

    solver_doc = doc.get("solver", {}) or {}
    _reject_unknown(solver_doc, _SOLVER_KEYS, f"{where}.solver")
    fix_gamma = bool(doc.get("fix_gamma", False))
    fit_cfg = FitConfig(
        tol=float(solver_doc.get("tol", 1e-8)),
        max_iters=int(solver_doc.get("max_iters", 500)),
        hyper_stride=int(solver_doc.get("hyper_stride", 1)),
        learn_gamma=not fix_gamma,
        learn_tau=bool(solver_doc.get("learn_tau", task == "regression")),
        learn_hypers=bool(solver_doc.get("learn_hypers", True)),
        tau_max=float(solver_doc.get("tau_max", 1e8)),
        jitter_start_scale=float(solver_doc.get("jitter_start_scale", 1e-8)),
        jitter_cap_scale=float(solver_doc.get("jitter_cap_scale", 1e-2)),
        track_updates=bool(solver_doc.get("track_updates", False)),
    )
    gamma_init = doc.get("gamma_init")
    if gamma_init is not None:
        gamma_init = [float(g) for g in gamma_init]
        if len(gamma_init) != len(kernels):
            raise ConfigError(f"{where}: gamma_init length {len(gamma_init)} != {len(kernels)} kernels")
    return RunConfig(
        task=task,
        kernels=kernels,
        family_preset=preset_name,
        hyper=Hyperparams(prior, tau, preset_name),
        fit=fit_cfg,
        seed=int(doc.get("seed", 0)),
        fix_gamma=fix_gamma,
        gamma_init=gamma_init,
    )


def parse_toy_config(doc: dict, where: str = "toy config") -> ToyConfig:
    _reject_unknown(
        doc,
        {"seed", "n_train", "n_test", "n_kernels", "active", "regime", "lengthscales", "noise_std"},
        where,
    )
    n_kernels = int(doc.get("n_kernels", 10))
    if "active" in doc and "regime" in doc:
        raise ConfigError(f"{where}: give either 'active' or 'regime', not both")
    if "regime" in doc:
        active = regime_active(str(doc["regime"]), n_kernels)
    elif "active" in doc:
        active = tuple(int(a) for a in doc["active"])
    else:
        active = (1,)
    lengthscales = doc.get("lengthscales")
    lengthscales = (
        tuple(float(l) for l in lengthscales)
        if lengthscales is not None
        else default_lengthscales(n_kernels)
    )
    try:
        return ToyConfig(
            seed=int(doc.get("seed", 0)),
            n_train=int(doc.get("n_train", 100)),
            n_test=int(doc.get("n_test", 100)),
            n_kernels=n_kernels,
            active=active,
            lengthscales=lengthscales,
            noise_std=float(doc.get("noise_std", 0.05)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass
class BenchmarkConfig:
    regimes: list[str]
    presets: list[str]                   # MGP family presets to compare
    baselines: list[str]                 # "equal" and/or "single"
    n_realizations: int = 20
    seed: int = 0
    toy: dict = field(default_factory=dict)   # overrides for the toy generator
    solver: dict = field(default_factory=dict)
    n_jobs: int = 1


def parse_benchmark_config(doc: dict, where: str = "benchmark config") -> BenchmarkConfig:
    _reject_unknown(
        doc,
        {"regimes", "presets", "baselines", "n_realizations", "seed", "toy", "solver", "n_jobs"},
        where,
    )
    regimes = [str(r) for r in doc.get("regimes", ["sparse", "semi", "dense"])]
    for r in regimes:
        regime_active(r)  # validates the name
    presets = [str(p) for p in doc.get("presets", ["student-t", "laplace", "gamma-variance"])]
    for p in presets:
        if p not in FAMILY_PRESETS:
            raise ConfigError(f"{where}: unknown preset {p!r}")
    baselines = [str(b) for b in doc.get("baselines", ["equal", "single"])]
    for b in baselines:
        if b not in ("equal", "single"):
            raise ConfigError(f"{where}: unknown baseline {b!r}; expected 'equal' or 'single'")
    toy = doc.get("toy", {}) or {}
    if "active" in toy or "regime" in toy or "seed" in toy:
        raise ConfigError(f"{where}.toy: 'active'/'regime'/'seed' are set by the benchmark loop")
    solver = doc.get("solver", {}) or {}
    _reject_unknown(solver, _SOLVER_KEYS, f"{where}.solver")
    return BenchmarkConfig(
        regimes=regimes,
        presets=presets,
        baselines=baselines,
        n_realizations=int(doc.get("n_realizations", 20)),
        seed=int(doc.get("seed", 0)),
        toy=toy,
        solver=solver,
        n_jobs=int(doc.get("n_jobs", 1)),
    )
