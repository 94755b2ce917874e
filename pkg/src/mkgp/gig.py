"""Generalised inverse Gaussian distribution.

Parameterised by an index ``omega`` and two nonnegative rates ``chi``
(acting on 1/x) and ``phi`` (acting on x):

    p(x) = (phi/chi)^(omega/2) / (2 K_omega(sqrt(chi*phi)))
           * x^(omega-1) * exp(-(chi/x + phi*x)/2),   x > 0.

The boundary sub-families chi=0 (omega>0, a Gamma density) and phi=0
(omega<0, an inverse-Gamma density) are dispatched analytically because the
Bessel ratio is numerically unstable as sqrt(chi*phi) -> 0.

Only the log-density and the first moments (x, 1/x, ln x) are provided;
inference never needs random variates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special as _sp

from .errors import DomainError
from .special import bessel_ratio, digamma, dlogK_dorder, log_bessel_k

__all__ = [
    "GigParams",
    "GigMoments",
    "FamilyPreset",
    "FAMILY_PRESETS",
    "validate",
    "check_valid",
    "log_density",
    "log_normalizer",
    "moments",
    "is_gamma_limit",
    "is_inv_gamma_limit",
]

# Below this, chi (resp. phi) is treated as exactly zero and the Gamma
# (resp. inverse-Gamma) closed forms take over.
BOUNDARY_EPS = 1e-12


@dataclass(frozen=True)
class GigParams:
    """The (omega, chi, phi) triple of a generalised inverse Gaussian."""

    omega: float
    chi: float
    phi: float


@dataclass(frozen=True)
class GigMoments:
    """First moments of x, 1/x and ln x under a GIG law.

    Moments that do not exist for the boundary sub-families are set to
    ``inf`` and named in ``divergent``.
    """

    mean: float
    mean_inv: float
    mean_log: float
    divergent: frozenset[str] = frozenset()


def validate(params: GigParams) -> str | None:
    """Return None if the parameter triple is admissible, else a description
    of the violated domain clause."""
    w, chi, phi = params.omega, params.chi, params.phi
    if not all(map(math.isfinite, (w, chi, phi))):
        return f"non-finite parameters (omega={w}, chi={chi}, phi={phi})"
    if chi < 0.0 or phi < 0.0:
        return f"chi and phi must be nonnegative (chi={chi}, phi={phi})"
    if w > 0.0:
        if phi <= 0.0:
            return f"omega > 0 requires phi > 0 (omega={w}, phi={phi})"
    elif w == 0.0:
        if chi <= 0.0 or phi <= 0.0:
            return f"omega = 0 requires chi > 0 and phi > 0 (chi={chi}, phi={phi})"
    else:
        if chi <= 0.0:
            return f"omega < 0 requires chi > 0 (omega={w}, chi={chi})"
    return None


def check_valid(params: GigParams) -> None:
    violation = validate(params)
    if violation is not None:
        raise DomainError(violation)


def is_gamma_limit(params: GigParams) -> bool:
    return params.omega > 0.0 and params.chi < BOUNDARY_EPS


def is_inv_gamma_limit(params: GigParams) -> bool:
    return params.omega < 0.0 and params.phi < BOUNDARY_EPS


def log_normalizer(params: GigParams) -> float:
    """ln Z such that p(x) = exp(-ln Z) * x^(omega-1) * exp(-(chi/x + phi*x)/2)."""
    check_valid(params)
    w, chi, phi = params.omega, params.chi, params.phi
    if is_gamma_limit(params):
        return _sp.gammaln(w) - w * math.log(phi / 2.0)
    if is_inv_gamma_limit(params):
        return _sp.gammaln(-w) + w * math.log(chi / 2.0)
    z = math.sqrt(chi * phi)
    return math.log(2.0) + log_bessel_k(w, z) - 0.5 * w * (math.log(phi) - math.log(chi))


def log_density(x: float, params: GigParams) -> float:
    """Log-density at x > 0; boundary sub-families use Gamma / inverse-Gamma
    closed forms."""
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"GIG density requires x > 0, got x={x}")
    w, chi, phi = params.omega, params.chi, params.phi
    lnz = log_normalizer(params)
    out = -lnz + (w - 1.0) * math.log(x)
    if chi > 0.0:
        out -= 0.5 * chi / x
    if phi > 0.0:
        out -= 0.5 * phi * x
    return out


def moments(params: GigParams) -> GigMoments:
    """Expectations of x, 1/x and ln x.

    Interior case:
        <x>    = sqrt(chi/phi) * K_{w+1}(s)/K_w(s)
        <1/x>  = sqrt(phi/chi) * K_{-w+1}(s)/K_{-w}(s)
        <ln x> = ln sqrt(chi/phi) + d ln K_w(s)/dw,     s = sqrt(chi*phi).

    Gamma limit (chi=0, w>0): <x> = 2w/phi, <1/x> = phi/(2(w-1)) for w>1,
    <ln x> = psi(w) - ln(phi/2); the inverse-Gamma limit mirrors this under
    x <-> 1/x.  Nonexistent moments come back as inf plus a divergence tag.
    """
    check_valid(params)
    w, chi, phi = params.omega, params.chi, params.phi
    if is_gamma_limit(params):
        mean = 2.0 * w / phi
        if w > 1.0:
            mean_inv, divergent = phi / (2.0 * (w - 1.0)), frozenset()
        else:
            mean_inv, divergent = math.inf, frozenset({"mean_inv"})
        mean_log = digamma(w) - math.log(phi / 2.0)
        return GigMoments(mean, mean_inv, mean_log, divergent)
    if is_inv_gamma_limit(params):
        mean_inv = -2.0 * w / chi
        if w < -1.0:
            mean, divergent = chi / (2.0 * (-w - 1.0)), frozenset()
        else:
            mean, divergent = math.inf, frozenset({"mean"})
        mean_log = math.log(chi / 2.0) - digamma(-w)
        return GigMoments(mean, mean_inv, mean_log, divergent)
    s = math.sqrt(chi * phi)
    half_log_ratio = 0.5 * (math.log(chi) - math.log(phi))
    mean = math.exp(half_log_ratio) * bessel_ratio(w, s)
    mean_inv = math.exp(-half_log_ratio) * bessel_ratio(-w, s)
    mean_log = half_log_ratio + dlogK_dorder(w, s)
    return GigMoments(mean, mean_inv, mean_log)


@dataclass(frozen=True)
class FamilyPreset:
    """A named prior sub-family: seed values plus which parameters ML-II may
    move, and the sign constraint on omega while it is learnable."""

    name: str
    omega: float
    chi: float
    phi: float
    learnable: frozenset[str]
    omega_sign: int = 0  # -1: omega < 0, +1: omega > 0, 0: unconstrained

    def params(self) -> GigParams:
        return GigParams(self.omega, self.chi, self.phi)


FAMILY_PRESETS: dict[str, FamilyPreset] = {
    p.name: p
    for p in [
        FamilyPreset("free", -1.0, 1.0, 1.0, frozenset({"omega", "chi", "phi"})),
        FamilyPreset("hyperbolic", -1.0, 1.0, 1.0, frozenset({"chi", "phi"})),
        FamilyPreset("laplace", -1.0, 1.0, 0.0, frozenset({"chi"})),
        FamilyPreset("gamma-variance", -1.0, 1.0, 0.0, frozenset({"omega", "chi"}), -1),
        FamilyPreset("student-t", 1.0, 0.0, 1.0, frozenset({"omega", "phi"}), +1),
        FamilyPreset("cauchy", 0.5, 0.0, 1.0, frozenset({"phi"})),
    ]
}
