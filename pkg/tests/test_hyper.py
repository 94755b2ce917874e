"""Scale-prior ML-II root finding: residuals vanish at returned roots,
known-parameter recovery from quadrature-exact statistics, bracket-failure
flagging, and preset freezing."""

import math

import pytest

from mkgp.errors import DomainError
from mkgp.gig import FAMILY_PRESETS, GigParams
from mkgp.hyper import (
    GammaSuffStats,
    residual_chi,
    residual_omega,
    residual_phi,
    solve_hyper,
)

# Quadrature-exact moments of GIG(omega=-1, chi=2, phi=3), frozen from a
# 40-digit integration (see tests/oracles.gig_quad_moments):
#   <x> = 0.6868690110882429, <1/x> = 2.0303035166323643,
#   <ln x> = -0.5461670595982036
TRUE = GigParams(-1.0, 2.0, 3.0)
MEAN, MEAN_INV, MEAN_LOG = 0.6868690110882429, 2.0303035166323643, -0.5461670595982036


def stats_at_truth(P: int = 10) -> GammaSuffStats:
    return GammaSuffStats(P * MEAN, P * MEAN_INV, P * MEAN_LOG, P)


def test_residuals_vanish_at_truth():
    s = stats_at_truth()
    # the omega residual uses finite-difference Bessel order derivatives,
    # accurate to ~2e-10 per kernel
    assert abs(residual_omega(TRUE.omega, TRUE.chi, TRUE.phi, s)) < 1e-7
    assert abs(residual_chi(TRUE.omega, TRUE.chi, TRUE.phi, s)) < 1e-9
    assert abs(residual_phi(TRUE.omega, TRUE.chi, TRUE.phi, s)) < 1e-9


@pytest.mark.parametrize("which,start,expect", [
    ("omega", GigParams(-2.5, 2.0, 3.0), -1.0),
    ("omega", GigParams(0.8, 2.0, 3.0), -1.0),
    ("chi", GigParams(-1.0, 0.3, 3.0), 2.0),
    ("chi", GigParams(-1.0, 40.0, 3.0), 2.0),
    ("phi", GigParams(-1.0, 2.0, 0.1), 3.0),
    ("phi", GigParams(-1.0, 2.0, 55.0), 3.0),
])
def test_known_parameter_recovery(which, start, expect):
    res = solve_hyper(which, start, stats_at_truth(), "free")
    assert res.converged
    assert res.value == pytest.approx(expect, abs=1e-4)
    assert abs(res.residual) <= 1e-8


def test_roots_insensitive_to_bracket_seed():
    a = solve_hyper("chi", GigParams(-1.0, 0.01, 3.0), stats_at_truth(), "free")
    b = solve_hyper("chi", GigParams(-1.0, 900.0, 3.0), stats_at_truth(), "free")
    assert a.value == pytest.approx(b.value, abs=1e-6)


def test_no_bracket_returns_current_with_flag():
    # sum<gamma> = 0 makes residual_phi positive everywhere: no root
    s = GammaSuffStats(0.0, 10.0, 0.0, 4)
    res = solve_hyper("phi", GigParams(-1.0, 2.0, 5.0), s, "free")
    assert res.at_boundary
    assert not res.converged
    assert res.value == 5.0


def test_residual_phi_monotone_on_bracket():
    # the phi stationarity condition is strictly increasing on a grid
    # spanning the root (uniqueness backs the bisection contract)
    s = stats_at_truth()
    vals = [residual_phi(TRUE.omega, TRUE.chi, phi, s) for phi in
            [0.2, 0.5, 1.0, 2.0, 3.0, 4.5, 8.0, 20.0, 60.0]]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_frozen_preset_rejected():
    with pytest.raises(DomainError):
        solve_hyper("omega", GigParams(-1.0, 1.0, 1.0), stats_at_truth(), "laplace")
    with pytest.raises(DomainError):
        solve_hyper("chi", GigParams(1.0, 0.0, 1.0), stats_at_truth(), "student-t")


def test_interior_residuals_reject_boundary_parameters():
    s = stats_at_truth()
    with pytest.raises(DomainError):
        residual_omega(-1.0, 0.0, 3.0, s)
    with pytest.raises(DomainError):
        residual_phi(-1.0, 2.0, 0.0, s)


def test_gamma_family_closed_forms():
    # Gamma(omega, rate phi/2): <gamma> = 2w/phi, <ln gamma> = psi(w) - ln(phi/2).
    # Both updates must recover the generating values exactly.
    from scipy.special import digamma

    w_true, phi_true, P = 2.5, 4.0, 6
    s = GammaSuffStats(
        sum_mean=P * 2.0 * w_true / phi_true,
        sum_mean_inv=P * phi_true / (2.0 * (w_true - 1.0)),
        sum_mean_log=P * (float(digamma(w_true)) - math.log(phi_true / 2.0)),
        n_kernels=P,
    )
    res = solve_hyper("phi", GigParams(w_true, 0.0, 9.9), s, "student-t")
    assert res.converged and res.value == pytest.approx(phi_true, rel=1e-12)
    res = solve_hyper("omega", GigParams(0.7, 0.0, phi_true), s, "student-t")
    assert res.converged and res.value == pytest.approx(w_true, abs=1e-4)


def test_inv_gamma_family_closed_forms():
    from scipy.special import digamma

    w_true, chi_true, P = -3.0, 5.0, 8
    s = GammaSuffStats(
        sum_mean=P * chi_true / (2.0 * (-w_true - 1.0)),
        sum_mean_inv=P * (-2.0) * w_true / chi_true,
        sum_mean_log=P * (math.log(chi_true / 2.0) - float(digamma(-w_true))),
        n_kernels=P,
    )
    res = solve_hyper("chi", GigParams(w_true, 0.2, 0.0), s, "gamma-variance")
    assert res.converged and res.value == pytest.approx(chi_true, rel=1e-12)
    res = solve_hyper("omega", GigParams(-0.8, chi_true, 0.0), s, "gamma-variance")
    assert res.converged and res.value == pytest.approx(w_true, abs=1e-4)


def test_omega_sign_constraint_respected():
    # student-t keeps omega positive even when the statistics pull negative
    s = stats_at_truth()  # generated by omega = -1
    res = solve_hyper("omega", GigParams(1.0, 1.0, 1.0), s, "student-t")
    assert res.value > 0.0 or res.at_boundary
