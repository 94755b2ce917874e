"""Predictive distribution at query points for a fitted model.

Same form as standard GP regression with the kernel replaced by the convex
combination sum_p <gamma_p>^{-1} k_p:

    m(x) = sum_p <gamma_p>^{-1} k_p(x)^T B^{-1} y
    v(x) = sum_p <gamma_p>^{-1} k_p(x, x)
           - sum_pq <gamma_p>^{-1}<gamma_q>^{-1} k_p(x)^T B^{-1} k_q(x)

where y is the training targets (regression) or the truncated-site means
(classification), and B is the fit's cached factorization.  Follows the
peaked-q(gamma) approximation throughout; there is no Monte-Carlo
marginalization over the scales.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .inference import FittedModel
from .kernels import cross_mat, kernel_diag

__all__ = ["PredictiveDistribution", "predictive"]


@dataclass
class PredictiveDistribution:
    mean: np.ndarray        # m(x) per query
    latent_var: np.ndarray  # v(x) per query, >= 0
    noise_var: float        # 1/tau

    @property
    def total_var(self) -> np.ndarray:
        return self.latent_var + self.noise_var


def predictive(model: FittedModel, queries: np.ndarray) -> PredictiveDistribution:
    """Batch predictive mean and latent variance at the query rows."""
    queries = np.asarray(queries, dtype=float)
    if queries.ndim == 1:
        queries = queries[:, None]
    gs = model.gram_set
    g_inv = 1.0 / model.state.gamma_mean
    alpha = cho_solve(model.state.B_chol, model.y_eff)

    # C[n, m] = sum_p <gamma_p>^{-1} k_p(x_n, x*_m); prior_var per query.
    n_q = queries.shape[0]
    C = np.zeros((gs.n_points, n_q))
    prior_var = np.zeros(n_q)
    for p, spec in enumerate(gs.specs):
        C += g_inv[p] * cross_mat(spec, model.X_train, queries)
        prior_var += g_inv[p] * kernel_diag(spec, queries)

    mean = C.T @ alpha
    S = cho_solve(model.state.B_chol, C)
    latent_var = prior_var - np.sum(C * S, axis=0)

    scale = np.maximum(prior_var, 1e-300)
    if np.any(latent_var < -1e-10 * scale):
        warnings.warn("predictive variance clipped below -1e-10 of prior scale", RuntimeWarning)
    latent_var = np.maximum(latent_var, 0.0)
    return PredictiveDistribution(mean=mean, latent_var=latent_var, noise_var=1.0 / model.hyper.tau)
