"""Type-II ML updates of the scale-prior parameters (omega, chi, phi).

Each update is a scalar stationarity condition of the variational bound,
solved by bracketed bisection (brackets grown geometrically from the
current value).  The interior residuals divide by chi or phi, so the
boundary sub-families (chi=0 Gamma priors, phi=0 inverse-Gamma priors) get
their own analytic stationarity conditions:

    preset            learnable   update
    ----------------  ----------  ---------------------------------------
    free              w, chi, phi interior residuals, bisection each
    hyperbolic        chi, phi    interior residuals
    laplace           chi         chi = -2*P*w / sum<1/gamma>  (closed form)
    gamma-variance    w, chi      w: psi(-w) - ln(chi/2) + mean<ln gamma> = 0
    student-t         w, phi      w: ln(phi/2) - psi(w) + mean<ln gamma> = 0,
                                  phi = 2*P*w / sum<gamma>     (closed form)
    cauchy            phi         closed form as student-t
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .gig import FAMILY_PRESETS, FamilyPreset, GigParams
from .special import bessel_ratio, digamma, dlogK_dorder

__all__ = [
    "GammaSuffStats",
    "HyperSolveResult",
    "residual_omega",
    "residual_chi",
    "residual_phi",
    "solve_hyper",
]

PARAM_FLOOR = 1e-10   # chi, phi never pushed below this while learnable
BRACKET_HI = 1e8
BISECT_TOL = 1e-8
MAX_BISECT = 200


@dataclass(frozen=True)
class GammaSuffStats:
    """Sufficient statistics of q(gamma) entering the ML-II residuals."""

    sum_mean: float
    sum_mean_inv: float
    sum_mean_log: float
    n_kernels: int


def _check_interior(chi: float, phi: float) -> None:
    if chi <= 0.0 or phi <= 0.0:
        raise DomainError(
            f"interior ML-II residuals are singular at chi={chi}, phi={phi}; "
            "boundary presets must use their analytic updates"
        )


def residual_omega(omega: float, chi: float, phi: float, stats: GammaSuffStats) -> float:
    """P*ln sqrt(phi/chi) - P*dlnK/dw at sqrt(chi*phi) + sum<ln gamma>."""
    _check_interior(chi, phi)
    P = stats.n_kernels
    s = math.sqrt(chi * phi)
    return 0.5 * P * (math.log(phi) - math.log(chi)) - P * dlogK_dorder(omega, s) + stats.sum_mean_log


def residual_chi(omega: float, chi: float, phi: float, stats: GammaSuffStats) -> float:
    """P*w/chi - (P/2)*sqrt(phi/chi)*R_w(sqrt(chi*phi)) + sum<1/gamma>/2."""
    _check_interior(chi, phi)
    P = stats.n_kernels
    s = math.sqrt(chi * phi)
    return P * omega / chi - 0.5 * P * math.sqrt(phi / chi) * bessel_ratio(omega, s) + 0.5 * stats.sum_mean_inv


def residual_phi(omega: float, chi: float, phi: float, stats: GammaSuffStats) -> float:
    """-(P/2)*sqrt(chi/phi)*R_w(sqrt(chi*phi)) + sum<gamma>/2."""
    _check_interior(chi, phi)
    P = stats.n_kernels
    s = math.sqrt(chi * phi)
    return -0.5 * P * math.sqrt(chi / phi) * bessel_ratio(omega, s) + 0.5 * stats.sum_mean

@dataclass(frozen=True)
class HyperSolveResult:
    value: float
    converged: bool
    at_boundary: bool = False
    multiple_roots: bool = False
    residual: float = math.nan


def _bisect(f, lo: float, hi: float, flo: float, fhi: float) -> HyperSolveResult:
    multiple = _count_sign_changes(f, lo, hi) > 1
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) < BISECT_TOL:
            return HyperSolveResult(mid, True, multiple_roots=multiple, residual=fmid)
        if (flo < 0.0) == (fmid < 0.0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    mid = 0.5 * (lo + hi)
    return HyperSolveResult(mid, False, multiple_roots=multiple, residual=f(mid))


def _count_sign_changes(f, lo: float, hi: float, n: int = 16) -> int:
    # Coarse scan; used only to flag non-uniqueness on the searched bracket.
    signs = []
    for i in range(n + 1):
        x = lo + (hi - lo) * i / n
        try:
            signs.append(f(x) > 0.0)
        except (DomainError, OverflowError, ValueError):
            continue
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _bracket_positive(f, x0: float) -> HyperSolveResult | tuple[float, float, float, float]:
    """Geometric bracket expansion on (PARAM_FLOOR, BRACKET_HI) for a
    positive parameter; returns a no-sign-change result if expansion fails."""
    x0 = min(max(x0, PARAM_FLOOR), BRACKET_HI)
    f0 = f(x0)
    if abs(f0) < BISECT_TOL:
        return HyperSolveResult(x0, True, residual=f0)
    lo = hi = x0
    flo = fhi = f0
    while (flo < 0.0) == (fhi < 0.0):
        expanded = False
        if lo > PARAM_FLOOR:
            lo = max(lo / 2.0, PARAM_FLOOR)
            flo = f(lo)
            expanded = True
            if (flo < 0.0) != (fhi < 0.0):
                break
        if hi < BRACKET_HI:
            hi = min(hi * 2.0, BRACKET_HI)
            fhi = f(hi)
            expanded = True
        if not expanded:
            return HyperSolveResult(x0, False, at_boundary=True, residual=f0)
    return lo, hi, flo, fhi


def _bracket_signed(f, x0: float, lo_lim: float, hi_lim: float):
    """Additive doubling expansion for an unconstrained (sign-free) scalar."""
    x0 = min(max(x0, lo_lim), hi_lim)
    f0 = f(x0)
    if abs(f0) < BISECT_TOL:
        return HyperSolveResult(x0, True, residual=f0)
    step = max(1.0, abs(x0))
    lo = hi = x0
    flo = fhi = f0
    while (flo < 0.0) == (fhi < 0.0):
        expanded = False
        if lo > lo_lim:
            lo = max(lo - step, lo_lim)
            flo = f(lo)
            expanded = True
            if (flo < 0.0) != (fhi < 0.0):
                break
        if hi < hi_lim:
            hi = min(hi + step, hi_lim)
            fhi = f(hi)
            expanded = True
        step *= 2.0
        if not expanded:
            return HyperSolveResult(x0, False, at_boundary=True, residual=f0)
    return lo, hi, flo, fhi


def _preset(name_or_preset) -> FamilyPreset:
    if isinstance(name_or_preset, FamilyPreset):
        return name_or_preset
    return FAMILY_PRESETS[name_or_preset]


def solve_hyper(
    which: str,
    current: GigParams,
    stats: GammaSuffStats,
    preset: FamilyPreset | str = "free",
) -> HyperSolveResult:
    """Update one prior parameter by root finding, the other two held fixed.

    Raises DomainError if ``which`` is pinned under the active preset.  A
    failed bracket search returns the current value with ``at_boundary``
    set instead of raising.
    """
    preset = _preset(preset)
    if which not in ("omega", "chi", "phi"):
        raise DomainError(f"unknown hyperparameter {which!r}")
    if which not in preset.learnable:
        raise DomainError(f"{which!r} is fixed under the {preset.name!r} family preset")
    w, chi, phi = current.omega, current.chi, current.phi
    P = stats.n_kernels

    gamma_family = chi < 2.0 * PARAM_FLOOR      # chi pinned at 0: Gamma prior
    inv_gamma_family = phi < 2.0 * PARAM_FLOOR  # phi pinned at 0: inverse-Gamma prior

    if which == "phi":
        if gamma_family:
            # d/dphi [P*(w ln(phi/2) - lnGamma(w)) - phi/2 * sum<gamma>] = 0
            return HyperSolveResult(max(2.0 * P * w / stats.sum_mean, PARAM_FLOOR), True, residual=0.0)
        f = lambda x: residual_phi(w, chi, x, stats)
        out = _bracket_positive(f, phi)
    elif which == "chi":
        if inv_gamma_family:
            return HyperSolveResult(max(-2.0 * P * w / stats.sum_mean_inv, PARAM_FLOOR), True, residual=0.0)
        f = lambda x: residual_chi(w, x, phi, stats)
        out = _bracket_positive(f, chi)
    else:
        if gamma_family:
            f = lambda x: P * (math.log(phi / 2.0) - digamma(x)) + stats.sum_mean_log
            out = _bracket_signed(f, w, PARAM_FLOOR, BRACKET_HI)
        elif inv_gamma_family:
            f = lambda x: P * (digamma(-x) - math.log(chi / 2.0)) + stats.sum_mean_log
            out = _bracket_signed(f, w, -BRACKET_HI, -PARAM_FLOOR)
        else:
            f = lambda x: residual_omega(x, chi, phi, stats)
            lo_lim = PARAM_FLOOR if preset.omega_sign > 0 else -BRACKET_HI
            hi_lim = -PARAM_FLOOR if preset.omega_sign < 0 else BRACKET_HI
            out = _bracket_signed(f, w, lo_lim, hi_lim)
    if isinstance(out, HyperSolveResult):
        return out
    return _bisect(f, *out)
