"""Seeded synthetic benchmark data: sparse to dense sums of functions drawn
from Laplacian-kernel hypothesis spaces, plus Gaussian noise.

Random functions are realized as zero-mean GP draws with the corresponding
kernel over the joint train+test inputs, each active component rescaled to
unit empirical variance so the sparsity regimes share a signal-to-noise
level.  Everything is deterministic given the seed (numpy PCG64, one
stream, fixed draw order: inputs, then components in increasing kernel
index, then noise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernels import KernelSpec, build_gram_set

__all__ = ["ToyConfig", "ToyDataset", "default_lengthscales", "regime_active", "generate"]


def default_lengthscales(n_kernels: int = 10) -> tuple[float, ...]:
    """Geometric grid 2^-2 .. 2^7 for the default ten kernels."""
    return tuple(2.0 ** np.arange(-2, n_kernels - 2))


def regime_active(regime: str, n_kernels: int = 10) -> tuple[int, ...]:
    """Active-kernel presets (1-based): sparse {1}, semi {1,2,3}, dense all."""
    table = {
        "sparse": (1,),
        "semi": (1, 2, 3),
        "dense": tuple(range(1, n_kernels + 1)),
    }
    if regime not in table:
        raise ConfigError(f"unknown regime {regime!r}; expected one of {sorted(table)}")
    return table[regime]


@dataclass(frozen=True)
class ToyConfig:
    seed: int
    n_train: int = 100
    n_test: int = 100
    n_kernels: int = 10
    active: tuple[int, ...] = (1,)     # 1-based kernel indices
    lengthscales: tuple[float, ...] = field(default_factory=default_lengthscales)
    noise_std: float = 0.05

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 0:
            raise ConfigError("n_train must be >= 1 and n_test >= 0")
        if len(self.lengthscales) != self.n_kernels:
            raise ConfigError(
                f"{len(self.lengthscales)} lengthscales for {self.n_kernels} kernels"
            )
        if any(l <= 0 for l in self.lengthscales):
            raise ConfigError("lengthscales must be positive")
        if not self.active:
            raise ConfigError("active set must be nonempty")
        if any(a < 1 or a > self.n_kernels for a in self.active):
            raise ConfigError(f"active indices {self.active} out of range 1..{self.n_kernels}")
        if not self.noise_std >= 0:
            raise ConfigError("noise_std must be nonnegative")


@dataclass
class ToyDataset:
    """Generated data plus the ground truth needed for evaluation."""

    config: ToyConfig
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    components_train: np.ndarray  # (n_kernels, n_train); zero rows for inactive
    components_test: np.ndarray
    signal_train: np.ndarray      # noiseless response
    signal_test: np.ndarray

    def kernel_specs(self) -> list[KernelSpec]:
        return [KernelSpec("laplacian", lengthscale=l) for l in self.config.lengthscales]


def generate(config: ToyConfig) -> ToyDataset:
    """Draw one dataset realization; bit-identical for equal configs."""
    rng = np.random.default_rng(config.seed)
    n = config.n_train + config.n_test
    X = rng.uniform(0.0, 1.0, size=(n, 1))

    components = np.zeros((config.n_kernels, n))
    for k in sorted(config.active):
        spec = KernelSpec("laplacian", lengthscale=config.lengthscales[k - 1])
        gs = build_gram_set([spec], X)
        L = gs.chols[0][0]  # lower Cholesky of K + jitter*I
        draw = np.tril(L) @ rng.standard_normal(n)
        std = draw.std()
        components[k - 1] = draw / std if std > 0 else draw

    signal = components.sum(axis=0)
    noise = config.noise_std * rng.standard_normal(n)
    y = signal + noise

    tr = slice(0, config.n_train)
    te = slice(config.n_train, n)
    return ToyDataset(
        config=config,
        X_train=X[tr],
        y_train=y[tr],
        X_test=X[te],
        y_test=y[te],
        components_train=components[:, tr],
        components_test=components[:, te],
        signal_train=signal[tr],
        signal_test=signal[te],
    )
