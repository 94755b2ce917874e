"""Multiple-kernel Gaussian processes with heavy-tailed scale priors.

An additive GP model: the response is a sum of P latent functions, each
with its own kernel and a random precision scale carrying a generalised
inverse Gaussian prior.  Mean-field variational inference for regression
and binary probit classification, type-II ML hyperparameter estimation,
and predictive distributions over the learned convex kernel combination.
"""

from .classification import fit_classifier, predict_class_prob
from .gig import FAMILY_PRESETS, GigParams
from .inference import FitConfig, FittedModel, Hyperparams, fit
from .kernels import KernelSpec, build_gram_set
from .prediction import PredictiveDistribution, predictive
from .serialize import load_model, save_model
from .toydata import ToyConfig, generate

__all__ = [
    "FAMILY_PRESETS",
    "FitConfig",
    "FittedModel",
    "GigParams",
    "Hyperparams",
    "KernelSpec",
    "PredictiveDistribution",
    "ToyConfig",
    "build_gram_set",
    "fit",
    "fit_classifier",
    "generate",
    "load_model",
    "predict_class_prob",
    "predictive",
    "save_model",
]

__version__ = "0.1.0"
