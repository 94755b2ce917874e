"""Kernel functions, Gram assembly, and the shared factorization cache.

A ``GramSet`` holds the P training Gram matrices, each symmetrized and
jittered until its Cholesky factorization succeeds.  Everything downstream
(inference, the variational bound, prediction) works through these
factorizations; no explicit matrix inverse is ever formed, because
Laplacian Grams at small lengthscales are near-singular.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DataError, DomainError, NumericalError

__all__ = ["KernelSpec", "GramSet", "gram", "cross_vec", "cross_mat", "build_gram_set"]

KERNEL_FAMILIES = ("linear", "squared_exponential", "laplacian")


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel definition.

    ``feature_view`` selects which input columns the kernel reads (None
    means all columns); ``lengthscale`` is ignored by the linear family.
    """

    family: str
    lengthscale: float = 1.0
    amplitude: float = 1.0
    feature_view: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}; expected one of {KERNEL_FAMILIES}")
        if not self.lengthscale > 0.0:
            raise DomainError(f"lengthscale must be positive, got {self.lengthscale}")
        if not self.amplitude > 0.0:
            raise DomainError(f"amplitude must be positive, got {self.amplitude}")


def _view(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError(f"inputs must be a non-empty 2-d array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("non-finite kernel inputs")
    if spec.feature_view is None:
        return X
    cols = list(spec.feature_view)
    if any(c < 0 or c >= X.shape[1] for c in cols):
        raise DataError(f"feature view {cols} out of range for {X.shape[1]} input columns")
    return X[:, cols]


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d2, 0.0)


def _evaluate(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if spec.family == "linear":
        return spec.amplitude * (A @ B.T)
    d2 = _sq_dists(A, B)
    if spec.family == "squared_exponential":
        return spec.amplitude * np.exp(-0.5 * d2 / spec.lengthscale**2)
    return spec.amplitude * np.exp(-np.sqrt(d2) / spec.lengthscale)


def gram(spec: KernelSpec, inputs: np.ndarray) -> np.ndarray:
    """N x N Gram matrix K[i, j] = k(x_i, x_j), exactly symmetric."""
    A = _view(spec, inputs)
    K = _evaluate(spec, A, A)
    return 0.5 * (K + K.T)


def cross_vec(spec: KernelSpec, training_inputs: np.ndarray, query_point: np.ndarray) -> np.ndarray:
    """Length-N vector of k(x_i, x_query) for a single query point."""
    q = np.atleast_2d(np.asarray(query_point, dtype=float))
    return cross_mat(spec, training_inputs, q)[:, 0]


def cross_mat(spec: KernelSpec, training_inputs: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """N x M cross-covariance matrix between training points and M queries."""
    A = _view(spec, training_inputs)
    B = _view(spec, queries)
    if A.shape[1] != B.shape[1]:
        raise DataError(
            f"query dimension {B.shape[1]} does not match training dimension {A.shape[1]}"
        )
    return _evaluate(spec, A, B)


def kernel_diag(spec: KernelSpec, queries: np.ndarray) -> np.ndarray:
    """k(x, x) for each query row."""
    B = _view(spec, queries)
    if spec.family == "linear":
        return spec.amplitude * np.sum(B * B, axis=1)
    return np.full(B.shape[0], spec.amplitude)


@dataclass
class GramSet:
    """P precomputed Grams with per-matrix jitter and Cholesky factors.

    Immutable after construction; shared read-only by inference and
    prediction.
    """

    specs: list[KernelSpec]
    mats: list[np.ndarray]          # raw symmetrized Grams
    jitters: list[float]
    chols: list = field(repr=False, default_factory=list)  # cho_factor of K + jitter*I

    @property
    def n_kernels(self) -> int:
        return len(self.mats)

    @property
    def n_points(self) -> int:
        return self.mats[0].shape[0]

    def jittered(self, p: int) -> np.ndarray:
        K = self.mats[p].copy()
        K[np.diag_indices_from(K)] += self.jitters[p]
        return K

    def solve_k(self, p: int, rhs: np.ndarray) -> np.ndarray:
        """(K_p + jitter*I)^{-1} rhs through the cached factorization."""
        return cho_solve(self.chols[p], rhs)

    def logdet_k(self, p: int) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chols[p][0]))))


def build_gram_set(
    specs: list[KernelSpec],
    inputs: np.ndarray,
    jitter_start_scale: float = 1e-8,
    jitter_cap_scale: float = 1e-2,
) -> GramSet:
    """Assemble, symmetrize, jitter and factorize all P Grams.

    A failed factorization escalates that kernel's jitter by x10 up to the
    cap (both expressed relative to the mean diagonal of the Gram).
    """
    if len(specs) == 0:
        raise DataError("at least one kernel spec is required")
    mats, jitters, chols = [], [], []
    for p, spec in enumerate(specs):
        K = gram(spec, inputs)
        scale = max(float(np.mean(np.diag(K))), 1e-12)
        jitter = jitter_start_scale * scale
        cap = jitter_cap_scale * scale
        factor = None
        while True:
            try:
                Kj = K.copy()
                Kj[np.diag_indices_from(Kj)] += jitter
                factor = cho_factor(Kj, lower=True)
                break
            except np.linalg.LinAlgError:
                if jitter >= cap:
                    raise NumericalError(
                        f"kernel {p} ({spec.family}) is not positive definite even at "
                        f"the jitter cap {cap:.3e}"
                    ) from None
                jitter = min(jitter * 10.0, cap)
        mats.append(K)
        jitters.append(jitter)
        chols.append(factor)
    return GramSet(specs=list(specs), mats=mats, jitters=jitters, chols=chols)
