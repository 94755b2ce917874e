"""Mean-field variational inference for additive multi-kernel GP regression.

Model: y = sum_p f_p + noise, f_p ~ GP(0, gamma_p^{-1} k_p), noise precision
tau, and independent generalised inverse Gaussian priors on the gamma_p.

The joint Gaussian posterior q(f) over the P stacked function-value blocks
is never materialised.  With B = sum_r <gamma_r>^{-1} K_r + tau^{-1} I
(N x N), the Woodbury identity gives

    mu_p     = <gamma_p>^{-1} K_p B^{-1} y
    Sigma_pq = delta_pq <gamma_p>^{-1} K_p
               - <gamma_p>^{-1} K_p B^{-1} <gamma_q>^{-1} K_q

so one Cholesky factorization of B per sweep serves the means, the trace
terms, the bound, and prediction.  The literal NP x NP construction exists
only as a test oracle.

Because q(f) is a *distribution*, not a formula in the latest parameters,
the state keeps a snapshot of the gamma means and tau that B was built
from.  All expectations under q(f) (quadratic forms, entropy, residual
traces) use the snapshot; this is what makes the bound provably
non-decreasing across every single coordinate update.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import gig
from .errors import DataError, NumericalError
from .gig import FAMILY_PRESETS, GigMoments, GigParams
from .hyper import GammaSuffStats, solve_hyper
from .kernels import GramSet, KernelSpec, build_gram_set

__all__ = [
    "Hyperparams",
    "FitConfig",
    "VariationalState",
    "FittedModel",
    "build_B",
    "update_q_f",
    "expected_quad_form",
    "update_q_gamma",
    "update_tau",
    "elbo",
    "heavy_tailed_log_prior",
    "fit",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class Hyperparams:
    """Prior hyperparameters: the GIG triple, the noise precision, and the
    family preset that pins a subset of the triple."""

    gig_prior: GigParams
    tau: float
    family_preset: str = "free"


@dataclass
class FitConfig:
    tol: float = 1e-8
    max_iters: int = 500
    hyper_stride: int = 1
    learn_gamma: bool = True
    learn_tau: bool = True
    learn_hypers: bool = True
    tau_max: float = 1e8
    jitter_start_scale: float = 1e-8
    jitter_cap_scale: float = 1e-2
    track_updates: bool = False  # record the bound after every single update


@dataclass
class VariationalState:
    """Current q(f), q(gamma) and the snapshot q(f) was computed under."""

    mu_blocks: np.ndarray                 # (P, N) posterior means of the f_p
    B_chol: object = field(repr=False, default=None)
    B_inv: np.ndarray = field(repr=False, default=None)
    snap_gamma_mean: np.ndarray = None    # <gamma> used to build B
    snap_tau: float = math.nan
    gamma_post: list[GigParams] = None
    gamma_mean: np.ndarray = None
    gamma_mean_inv: np.ndarray = None
    gamma_mean_log: np.ndarray = None
    elbo: float = -math.inf
    warnings: list[str] = field(default_factory=list)


@dataclass
class FittedModel:
    """Everything needed to predict and to serialize a finished fit."""

    task: str                      # "regression" | "binary-classification"
    specs: list[KernelSpec]
    X_train: np.ndarray
    targets: np.ndarray            # regression targets, or labels for classification
    y_eff: np.ndarray              # regression: targets; classification: nu_pm
    gram_set: GramSet
    state: VariationalState
    hyper: Hyperparams
    elbo_trace: list[float]
    update_trace: list[tuple[str, float]]
    converged: bool
    site_post_var: np.ndarray | None = None  # classification: per-site q(y) variances

    @property
    def normalized_weights(self) -> np.ndarray:
        """<gamma_p>^{-1} / sum_q <gamma_q>^{-1}: each kernel's share of the
        effective combined kernel."""
        inv = 1.0 / self.state.gamma_mean
        return inv / inv.sum()


def build_B(gram_set: GramSet, gamma_mean: np.ndarray, tau: float):
    """Cholesky of B = sum_r <gamma_r>^{-1} K_r(+jitter) + tau^{-1} I."""
    N = gram_set.n_points
    B = np.zeros((N, N))
    for p in range(gram_set.n_kernels):
        B += (1.0 / gamma_mean[p]) * gram_set.jittered(p)
    B[np.diag_indices_from(B)] += 1.0 / tau
    try:
        return cho_factor(B, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"factorization of B failed with gamma means {gamma_mean} and tau={tau}"
        ) from exc


def update_q_f(state: VariationalState, gram_set: GramSet, y: np.ndarray, tau: float) -> None:
    """Refresh q(f): mu_p = <gamma_p>^{-1} K_p B^{-1} y, B refactorized.

    Snapshots the gamma means and tau so that expectations under q(f)
    remain well-defined after gamma or tau move on.
    """
    gamma_mean = np.asarray(state.gamma_mean, dtype=float)
    B_chol = build_B(gram_set, gamma_mean, tau)
    alpha = cho_solve(B_chol, y)
    P = gram_set.n_kernels
    mu = np.empty((P, len(y)))
    for p in range(P):
        mu[p] = (1.0 / gamma_mean[p]) * (gram_set.jittered(p) @ alpha)
    state.mu_blocks = mu
    state.B_chol = B_chol
    state.B_inv = cho_solve(B_chol, np.eye(len(y)))
    state.snap_gamma_mean = gamma_mean.copy()
    state.snap_tau = tau


def expected_quad_form(p: int, state: VariationalState, gram_set: GramSet) -> float:
    """<f_p^T K_p^{-1} f_p> under the current q(f).

    Equals mu_p^T K_p^{-1} mu_p + N <gamma_p>^{-1}
    - <gamma_p>^{-2} tr(B^{-1} K_p), all through the jittered factorizations.
    """
    N = gram_set.n_points
    g = float(state.snap_gamma_mean[p])
    mu_p = state.mu_blocks[p]
    quad = float(mu_p @ gram_set.solve_k(p, mu_p))
    tr_BinvK = float(np.sum(state.B_inv * gram_set.jittered(p)))
    total = quad + N / g - tr_BinvK / (g * g)
    scale = max(abs(quad) + N / g, 1.0)
    if total < -1e-8 * scale:
        raise NumericalError(
            f"expected quadratic form for kernel {p} is negative ({total:.3e}); "
            "factorization or jitter problem"
        )
    return max(total, 0.0)


def update_q_gamma(state: VariationalState, gram_set: GramSet, prior: GigParams, n_points: int) -> None:
    """Refresh q(gamma_p) = GIG(omega + N/2, chi, phi + <f_p^T K_p^{-1} f_p>)
    and cache its moments."""
    P = gram_set.n_kernels
    posts: list[GigParams] = []
    mean = np.empty(P)
    mean_inv = np.empty(P)
    mean_log = np.empty(P)
    for p in range(P):
        q_p = expected_quad_form(p, state, gram_set)
        post = GigParams(prior.omega + 0.5 * n_points, prior.chi, prior.phi + q_p)
        gig.check_valid(post)
        m = gig.moments(post)
        posts.append(post)
        mean[p], mean_inv[p], mean_log[p] = m.mean, m.mean_inv, m.mean_log
    state.gamma_post = posts
    state.gamma_mean = mean
    state.gamma_mean_inv = mean_inv
    state.gamma_mean_log = mean_log


def _trace_B_inv(state: VariationalState) -> float:
    return float(np.trace(state.B_inv))


def _residual_trace(state: VariationalState, n_points: int) -> float:
    """sum_pq tr(Sigma_pq) = tr(M Sigma M^T) under the snapshot q(f)."""
    t = state.snap_tau
    return (n_points - _trace_B_inv(state) / t) / t


def update_tau(state: VariationalState, gram_set: GramSet, y: np.ndarray,
               tau_max: float = 1e8,
               extra_site_var: float = 0.0) -> tuple[float, bool]:
    """Bound-maximizing noise precision.

    tau = N / (||y - sum_p mu_p||^2 + sum_pq tr(Sigma_pq) [+ site variances]);
    the extra term carries the q(y) variances in the classification model.
    Returns (tau, clamped_flag).
    """
    N = len(y)
    resid = y - state.mu_blocks.sum(axis=0)
    denom = float(resid @ resid) + _residual_trace(state, N) + extra_site_var
    if denom <= N / tau_max:
        return tau_max, True
    return N / denom, False


def _gamma_cross_entropy(params: GigParams, m: GigMoments) -> float:
    """<ln p(x)> for x with moments m, p a (possibly boundary) GIG law.

    Terms multiplied by an exactly-zero chi or phi are dropped, so boundary
    families never touch a divergent moment they do not need.
    """
    out = -gig.log_normalizer(params) + (params.omega - 1.0) * m.mean_log
    if params.chi > 0.0:
        out -= 0.5 * params.chi * m.mean_inv
    if params.phi > 0.0:
        out -= 0.5 * params.phi * m.mean
    return out


def elbo(
    state: VariationalState,
    gram_set: GramSet,
    y: np.ndarray,
    hyper: Hyperparams,
    include_gamma_terms: bool = True,
    site_post_var: np.ndarray | None = None,
    site_entropy: float | None = None,
) -> tuple[float, dict[str, float]]:
    """The negative variational free energy and its term breakdown.

    Assembled as  <ln p(y|f,tau)> + sum_p <ln p(f_p|gamma_p)>
    + sum_p <ln p(gamma_p)> + H[q(f)] + sum_p H[q(gamma_p)], every
    expectation in closed form.  For classification, ``y`` is the vector of
    truncated-site means and the site variances/entropy terms are supplied
    by the caller.  ``include_gamma_terms=False`` gives the bound of the
    conditional model with gamma clamped (used by the plain-GP baselines).
    """
    N = gram_set.n_points
    P = gram_set.n_kernels
    tau = hyper.tau
    mu_sum = state.mu_blocks.sum(axis=0)
    resid = y - mu_sum
    tr_msm = _residual_trace(state, N)
    sq = float(resid @ resid) + tr_msm
    if site_post_var is not None:
        sq += float(np.sum(site_post_var))
    terms: dict[str, float] = {}
    terms["log_lik"] = 0.5 * N * (math.log(tau) - _LOG_2PI) - 0.5 * tau * sq

    quads = [expected_quad_form(p, state, gram_set) for p in range(P)]
    logdets = [gram_set.logdet_k(p) for p in range(P)]
    lp_f = 0.0
    for p in range(P):
        lp_f += (
            -0.5 * N * _LOG_2PI
            + 0.5 * N * state.gamma_mean_log[p]
            - 0.5 * logdets[p]
            - 0.5 * state.gamma_mean[p] * quads[p]
        )
    terms["log_prior_f"] = lp_f

    logdet_B = 2.0 * float(np.sum(np.log(np.diag(state.B_chol[0]))))
    logdet_sigma = (
        sum(logdets)
        - N * float(np.sum(np.log(state.snap_gamma_mean)))
        - N * math.log(state.snap_tau)
        - logdet_B
    )
    terms["entropy_f"] = 0.5 * N * P * (_LOG_2PI + 1.0) + 0.5 * logdet_sigma

    if include_gamma_terms:
        lp_g = 0.0
        h_g = 0.0
        for p in range(P):
            m = GigMoments(state.gamma_mean[p], state.gamma_mean_inv[p], state.gamma_mean_log[p])
            lp_g += _gamma_cross_entropy(hyper.gig_prior, m)
            h_g -= _gamma_cross_entropy(state.gamma_post[p], m)
        terms["log_prior_gamma"] = lp_g
        terms["entropy_gamma"] = h_g

    if site_entropy is not None:
        terms["entropy_sites"] = site_entropy

    total = sum(terms.values())
    if not math.isfinite(total):
        bad = {k: v for k, v in terms.items() if not math.isfinite(v)}
        raise NumericalError(f"non-finite variational bound; offending terms: {bad}")
    return total, terms


def heavy_tailed_log_prior(
    f_blocks: np.ndarray, gram_set: GramSet, gig_prior: GigParams
) -> float:
    """Log of the unnormalized heavy-tailed prior over function space
    obtained by marginalizing the gamma_p out of the scaled GP blocks.

    Each block contributes ln K_{w+N/2}(sqrt(chi*(phi+Q_p)))
    - (w+N/2) * ln sqrt((phi+Q_p)/chi), Q_p = f_p^T K_p^{-1} f_p, with the
    analytic chi=0 limit -(w+N/2)*ln(phi+Q_p) for the Student-t family.
    Diagnostic only; decreasing in every Q_p.
    """
    gig.check_valid(gig_prior)
    N = gram_set.n_points
    w = gig_prior.omega + 0.5 * N
    chi, phi = gig_prior.chi, gig_prior.phi
    total = 0.0
    for p in range(gram_set.n_kernels):
        f_p = np.asarray(f_blocks[p], dtype=float)
        q_p = float(f_p @ gram_set.solve_k(p, f_p))
        if chi < gig.BOUNDARY_EPS:
            total += -w * math.log(phi + q_p)
        else:
            from .special import log_bessel_k

            total += log_bessel_k(w, math.sqrt(chi * (phi + q_p))) - 0.5 * w * (
                math.log(phi + q_p) - math.log(chi)
            )
    return total


def _initial_state(P: int, N: int, gamma_mean: np.ndarray | None) -> VariationalState:
    g = np.ones(P) if gamma_mean is None else np.asarray(gamma_mean, dtype=float)
    return VariationalState(
        mu_blocks=np.zeros((P, N)),
        snap_gamma_mean=g.copy(),
        gamma_mean=g.copy(),
        gamma_mean_inv=1.0 / g,
        gamma_mean_log=np.log(g),
    )


def _suff_stats(state: VariationalState) -> GammaSuffStats:
    return GammaSuffStats(
        sum_mean=float(np.sum(state.gamma_mean)),
        sum_mean_inv=float(np.sum(state.gamma_mean_inv)),
        sum_mean_log=float(np.sum(state.gamma_mean_log)),
        n_kernels=len(state.gamma_mean),
    )


def _hyper_pass(hyper: Hyperparams, state: VariationalState) -> Hyperparams:
    preset = FAMILY_PRESETS[hyper.family_preset]
    prior = hyper.gig_prior
    for which in ("omega", "chi", "phi"):
        if which not in preset.learnable:
            continue
        res = solve_hyper(which, prior, _suff_stats(state), preset)
        if res.at_boundary:
            state.warnings.append(f"no sign change bracketing {which}; value kept")
            continue
        prior = GigParams(
            res.value if which == "omega" else prior.omega,
            res.value if which == "chi" else prior.chi,
            res.value if which == "phi" else prior.phi,
        )
    return Hyperparams(prior, hyper.tau, hyper.family_preset)


def fit(
    X: np.ndarray,
    y: np.ndarray,
    specs: list[KernelSpec],
    hyper_init: Hyperparams | None = None,
    config: FitConfig | None = None,
    gram_set: GramSet | None = None,
    gamma_init: np.ndarray | None = None,
) -> FittedModel:
    """Coordinate-ascent fit for regression.

    One sweep: q(f) -> q(gamma) -> tau -> hyperparameters (every
    ``hyper_stride`` sweeps), until the relative change of the bound drops
    below ``tol`` or ``max_iters`` is hit.  Non-convergence warns and
    returns the best state rather than raising.
    """
    config = config or FitConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if gram_set is None:
        gram_set = build_gram_set(specs, X, config.jitter_start_scale, config.jitter_cap_scale)
    N, P = gram_set.n_points, gram_set.n_kernels
    if len(y) != N:
        raise DataError(f"{len(y)} targets for {N} input rows")

    if hyper_init is None:
        preset = FAMILY_PRESETS["free"]
        hyper_init = Hyperparams(preset.params(), math.nan, "free")
    hyper = Hyperparams(hyper_init.gig_prior, hyper_init.tau, hyper_init.family_preset)
    if not math.isfinite(hyper.tau):
        var_y = float(np.var(y))
        hyper.tau = 1.0 / var_y if var_y > 0.0 else 1.0

    state = _initial_state(P, N, gamma_init)
    trace: list[float] = []
    update_trace: list[tuple[str, float]] = []
    tau_clamped = False

    def record(label: str) -> None:
        # A tracked value needs a fully-specified q; skip until the first
        # q(gamma) update has produced a proper posterior.
        if config.track_updates and not (config.learn_gamma and state.gamma_post is None):
            val, _ = elbo(state, gram_set, y, hyper, include_gamma_terms=config.learn_gamma)
            update_trace.append((label, val))

    converged = False
    for it in range(config.max_iters):
        update_q_f(state, gram_set, y, hyper.tau)
        record("q_f")
        if config.learn_gamma:
            update_q_gamma(state, gram_set, hyper.gig_prior, N)
            record("q_gamma")
        if config.learn_tau:
            hyper.tau, clamped = update_tau(state, gram_set, y, config.tau_max)
            tau_clamped = tau_clamped or clamped
            record("tau")
        if config.learn_hypers and config.learn_gamma and it % config.hyper_stride == 0:
            hyper = _hyper_pass(hyper, state)
            record("hypers")
        val, _ = elbo(state, gram_set, y, hyper, include_gamma_terms=config.learn_gamma)
        trace.append(val)
        if it > 0 and abs(trace[-1] - trace[-2]) <= config.tol * max(1.0, abs(trace[-1])):
            converged = True
            break

    # Final q(f) refresh so mu and B agree with the final gamma means and
    # tau; prediction reuses this factorization.
    update_q_f(state, gram_set, y, hyper.tau)
    val, _ = elbo(state, gram_set, y, hyper, include_gamma_terms=config.learn_gamma)
    trace.append(val)
    state.elbo = val
    if tau_clamped:
        state.warnings.append("tau clamped at tau_max (degenerate zero residual)")
    if not converged:
        state.warnings.append(f"not converged after {config.max_iters} iterations")
        warnings.warn("variational fit did not converge; returning best state", RuntimeWarning)

    return FittedModel(
        task="regression",
        specs=list(gram_set.specs),
        X_train=X,
        targets=y,
        y_eff=y,
        gram_set=gram_set,
        state=state,
        hyper=hyper,
        elbo_trace=trace,
        update_trace=update_trace,
        converged=converged,
    )
