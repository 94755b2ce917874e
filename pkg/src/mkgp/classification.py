"""Binary probit classification on top of the regression engine.

Labels t_n in {-1, +1} are linked to latent regression responses y_n
through a step function; the mean-field posterior over y is a product of
one-sided truncated Gaussians with pre-truncation means nu_n = sum_p mu_p[n]
and variance 1/tau.  One sweep replaces the regression targets by the
truncated-site means and then reuses the regression updates verbatim.

tau defaults to fixed at 1: the probit scale is not identifiable jointly
with the function scale.  ``FitConfig.learn_tau=True`` switches the
regression tau update back on, site variances included.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .gig import FAMILY_PRESETS
from .inference import (
    FitConfig,
    FittedModel,
    Hyperparams,
    _hyper_pass,
    _initial_state,
    elbo,
    update_q_f,
    update_q_gamma,
    update_tau,
)
from .kernels import GramSet, KernelSpec, build_gram_set
from .special import log_std_normal_cdf, std_normal_cdf
from .truncgauss import TruncatedGaussian, trunc_entropy, trunc_moments

__all__ = ["LatentYPosterior", "update_q_y", "fit_classifier", "predict_class_prob"]


@dataclass
class LatentYPosterior:
    """Per-site truncated-Gaussian posterior over the latent responses."""

    nu: np.ndarray          # pre-truncation means, sum_p <f_p(x_n)>
    lam: float              # pre-truncation variance, 1/tau
    post_mean: np.ndarray   # nu_pm
    post_var: np.ndarray
    entropy: float


def _check_labels(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float).ravel()
    if not np.all(np.isin(t, (-1.0, 1.0))):
        raise DataError("labels must be -1 or +1")
    if len(np.unique(t)) < 2:
        warnings.warn("only one class present; the fit is degenerate", RuntimeWarning)
    return t


def update_q_y(state, labels: np.ndarray, tau: float) -> LatentYPosterior:
    """Coordinate update of q(y): truncate N(nu_n, 1/tau) to the side of
    the label."""
    nu = state.mu_blocks.sum(axis=0)
    lam = 1.0 / tau
    n = len(nu)
    post_mean = np.empty(n)
    post_var = np.empty(n)
    entropy = 0.0
    for i in range(n):
        side = "positive" if labels[i] > 0 else "negative"
        tg = TruncatedGaussian(nu[i], lam, side)
        post_mean[i], post_var[i] = trunc_moments(tg)
        entropy += trunc_entropy(tg)
    return LatentYPosterior(nu, lam, post_mean, post_var, entropy)


def fit_classifier(
    X: np.ndarray,
    t: np.ndarray,
    specs: list[KernelSpec],
    hyper_init: Hyperparams | None = None,
    config: FitConfig | None = None,
    gram_set: GramSet | None = None,
) -> FittedModel:
    """Coordinate-ascent fit for binary classification.

    Sweep order: q(y) -> q(f) (targets = truncated-site means) -> q(gamma)
    -> optional tau -> hyperparameters.  The q(gamma) and hyperparameter
    updates are the regression ones, unchanged.
    """
    config = config or FitConfig(learn_tau=False)
    X = np.asarray(X, dtype=float)
    t = _check_labels(t)
    if gram_set is None:
        gram_set = build_gram_set(specs, X, config.jitter_start_scale, config.jitter_cap_scale)
    N, P = gram_set.n_points, gram_set.n_kernels
    if len(t) != N:
        raise DataError(f"{len(t)} labels for {N} input rows")

    if hyper_init is None:
        preset = FAMILY_PRESETS["free"]
        hyper_init = Hyperparams(preset.params(), 1.0, "free")
    hyper = Hyperparams(hyper_init.gig_prior, hyper_init.tau, hyper_init.family_preset)
    if not math.isfinite(hyper.tau):
        hyper.tau = 1.0

    state = _initial_state(P, N, None)
    trace: list[float] = []
    update_trace: list[tuple[str, float]] = []
    sites = None

    def bound(sites: LatentYPosterior) -> float:
        val, _ = elbo(
            state,
            gram_set,
            sites.post_mean,
            hyper,
            include_gamma_terms=config.learn_gamma,
            site_post_var=sites.post_var,
            site_entropy=sites.entropy,
        )
        return val

    def record(label: str, sites: LatentYPosterior) -> None:
        if config.track_updates and not (config.learn_gamma and state.gamma_post is None):
            update_trace.append((label, bound(sites)))

    converged = False
    tau_clamped = False
    for it in range(config.max_iters):
        sites = update_q_y(state, t, hyper.tau)
        record("q_y", sites)
        update_q_f(state, gram_set, sites.post_mean, hyper.tau)
        record("q_f", sites)
        if config.learn_gamma:
            update_q_gamma(state, gram_set, hyper.gig_prior, N)
            record("q_gamma", sites)
        if config.learn_tau:
            hyper.tau, clamped = update_tau(
                state, gram_set, sites.post_mean, config.tau_max,
                extra_site_var=float(np.sum(sites.post_var)),
            )
            tau_clamped = tau_clamped or clamped
            record("tau", sites)
        if config.learn_hypers and config.learn_gamma and it % config.hyper_stride == 0:
            hyper = _hyper_pass(hyper, state)
            record("hypers", sites)
        trace.append(bound(sites))
        if it > 0 and abs(trace[-1] - trace[-2]) <= config.tol * max(1.0, abs(trace[-1])):
            converged = True
            break

    update_q_f(state, gram_set, sites.post_mean, hyper.tau)
    trace.append(bound(sites))
    state.elbo = trace[-1]
    if tau_clamped:
        state.warnings.append("tau clamped at tau_max")
    if not converged:
        state.warnings.append(f"not converged after {config.max_iters} iterations")
        warnings.warn("classification fit did not converge; returning best state", RuntimeWarning)

    return FittedModel(
        task="binary-classification",
        specs=list(gram_set.specs),
        X_train=X,
        targets=t,
        y_eff=sites.post_mean,
        gram_set=gram_set,
        state=state,
        hyper=hyper,
        elbo_trace=trace,
        update_trace=update_trace,
        converged=converged,
        site_post_var=sites.post_var,
    )


def predict_class_prob(model: FittedModel, queries: np.ndarray) -> np.ndarray:
    """P(t = +1) = Phi(m(x) / sqrt(v(x) + 1/tau)) per query row.

    The predicted label is sign(m(x)), which is also the argmax class since
    Phi is monotone.
    """
    from .prediction import predictive

    if model.task != "binary-classification":
        raise DataError("predict_class_prob requires a classification model")
    pred = predictive(model, queries)
    z = pred.mean / np.sqrt(pred.latent_var + pred.noise_var)
    return np.array([std_normal_cdf(v) for v in z])


def log_predictive_class_prob(model: FittedModel, queries: np.ndarray, label: int) -> np.ndarray:
    """ln P(t = label); stable for confident predictions."""
    from .prediction import predictive

    pred = predictive(model, queries)
    z = pred.mean / np.sqrt(pred.latent_var + pred.noise_var)
    return np.array([log_std_normal_cdf(float(label) * v) for v in z])
