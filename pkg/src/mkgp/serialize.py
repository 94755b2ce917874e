"""Model serialization.

A fitted model is a version-tagged JSON document holding the kernel specs,
hyperparameters, gamma posterior summary, posterior mean blocks, training
inputs and effective targets, and the ELBO trace.  Loading rebuilds the
Gram factorizations deterministically from the stored inputs, so a
round-trip reproduces predictions exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .gig import GigParams
from .inference import FittedModel, Hyperparams, VariationalState, update_q_f
from .kernels import KernelSpec, build_gram_set

__all__ = ["SCHEMA_VERSION", "model_to_dict", "model_from_dict", "save_model", "load_model"]

SCHEMA_VERSION = 1


def _spec_to_dict(spec: KernelSpec) -> dict:
    return {
        "family": spec.family,
        "lengthscale": spec.lengthscale,
        "amplitude": spec.amplitude,
        "feature_view": list(spec.feature_view) if spec.feature_view is not None else None,
    }


def _spec_from_dict(d: dict) -> KernelSpec:
    view = d.get("feature_view")
    return KernelSpec(
        family=d["family"],
        lengthscale=d.get("lengthscale", 1.0),
        amplitude=d.get("amplitude", 1.0),
        feature_view=tuple(view) if view is not None else None,
    )


def model_to_dict(model: FittedModel) -> dict:
    st = model.state
    return {
        "schema_version": SCHEMA_VERSION,
        "task": model.task,
        "kernels": [_spec_to_dict(s) for s in model.specs],
        "family_preset": model.hyper.family_preset,
        "prior": {
            "omega": model.hyper.gig_prior.omega,
            "chi": model.hyper.gig_prior.chi,
            "phi": model.hyper.gig_prior.phi,
        },
        "tau": model.hyper.tau,
        "gamma_mean": st.gamma_mean.tolist(),
        "gamma_mean_inv": st.gamma_mean_inv.tolist(),
        "gamma_mean_log": st.gamma_mean_log.tolist(),
        "gamma_post": (
            [{"omega": g.omega, "chi": g.chi, "phi": g.phi} for g in st.gamma_post]
            if st.gamma_post is not None
            else None
        ),
        "mu_blocks": st.mu_blocks.tolist(),
        "X_train": model.X_train.tolist(),
        "targets": model.targets.tolist(),
        "y_eff": model.y_eff.tolist(),
        "site_post_var": model.site_post_var.tolist() if model.site_post_var is not None else None,
        "elbo": st.elbo,
        "elbo_trace": model.elbo_trace,
        "converged": model.converged,
        "warnings": list(st.warnings),
    }


def model_from_dict(doc: dict) -> FittedModel:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataError(f"unsupported model schema version {version!r}")
    specs = [_spec_from_dict(d) for d in doc["kernels"]]
    X = np.asarray(doc["X_train"], dtype=float)
    gram_set = build_gram_set(specs, X)
    prior = GigParams(doc["prior"]["omega"], doc["prior"]["chi"], doc["prior"]["phi"])
    hyper = Hyperparams(prior, float(doc["tau"]), doc["family_preset"])
    gamma_post = doc.get("gamma_post")
    state = VariationalState(
        mu_blocks=np.asarray(doc["mu_blocks"], dtype=float),
        gamma_mean=np.asarray(doc["gamma_mean"], dtype=float),
        gamma_mean_inv=np.asarray(doc["gamma_mean_inv"], dtype=float),
        gamma_mean_log=np.asarray(doc["gamma_mean_log"], dtype=float),
        gamma_post=(
            [GigParams(g["omega"], g["chi"], g["phi"]) for g in gamma_post]
            if gamma_post is not None
            else None
        ),
        elbo=doc.get("elbo", math.nan),
        warnings=list(doc.get("warnings", [])),
    )
    y_eff = np.asarray(doc["y_eff"], dtype=float)
    # Rebuild B (and refresh mu for exact consistency with the stored
    # gamma/tau, matching the fit's final state).
    update_q_f(state, gram_set, y_eff, hyper.tau)
    site_var = doc.get("site_post_var")
    return FittedModel(
        task=doc["task"],
        specs=specs,
        X_train=X,
        targets=np.asarray(doc["targets"], dtype=float),
        y_eff=y_eff,
        gram_set=gram_set,
        state=state,
        hyper=hyper,
        elbo_trace=list(doc.get("elbo_trace", [])),
        update_trace=[],
        converged=bool(doc.get("converged", False)),
        site_post_var=np.asarray(site_var, dtype=float) if site_var is not None else None,
    )


def save_model(model: FittedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n")


def load_model(path: str | Path) -> FittedModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
