"""
Tests for the (nu, mu) coordinates, f_u and the Abel-inversion reconstruction of h''
"""

import sys
import os
import math

import numpy as np
import pytest

# Add the current directory to the Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.errors import BoundaryError, InvalidInputError
from core.metric import from_poly, fubini_study, is_valid
from core.reconstruct import (NuMuPoint, cov_forward, cov_inverse, fu_curve, fu_direct, fu_forward, fu_separation,
                              integrate_p_plus, integrate_p_plus_direct, invariant_to_fu, jacobian_factor,
                              reconstruct_profile)
from utils.numerics import GridFunction, integrate_simplex

LINEAR = [0.25, -0.25]          # h'' = 0.25 (1 - t)
CUBIC_BUMP = [0.0, 0.2, -0.2]   # h'' = 0.2 t (1 - t)
S_MAX = 1.0 - 4.0 / 4096.0


def _disc_bump(cx, cy, radius):
    def phi(x):
        r2 = ((x[:, 0] - cx) ** 2 + (x[:, 1] - cy) ** 2) / radius ** 2
        out = np.zeros(r2.shape)
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out
    return phi


def test_change_of_variables_roundtrip():
    x = np.array([0.3, 0.1, 0.2])
    p = cov_forward(x)
    assert p.n == 3
    assert p.nu == pytest.approx(1 / 0.3 + 1 / 0.1)
    assert p.mu == pytest.approx((0.4, 0.6))
    np.testing.assert_allclose(cov_inverse(p, 3), x, rtol=1e-12)
    assert p.s == pytest.approx((1.0 - 4.0 / p.nu, 0.6, 0.4))


def test_change_of_variables_rejects_points_outside_p_plus():
    with pytest.raises(BoundaryError):
        cov_forward([0.1, 0.3])
    with pytest.raises(BoundaryError):
        cov_forward([0.6, 0.5])
    with pytest.raises(BoundaryError):
        NuMuPoint(8.0, (0.4,))      # 4/nu = 0.5 > mu_2
    with pytest.raises(InvalidInputError):
        cov_inverse(NuMuPoint(10.0, (0.6,)), 3)


def test_jacobian_factor_matches_finite_differences():
    for nu, mu2 in [(12.0, 0.5), (40.0, 0.3), (9.0, 0.8)]:
        h_nu, h_mu = 1e-5 * nu, 1e-5 * mu2
        d_nu = (cov_inverse(NuMuPoint(nu + h_nu, mu2)) - cov_inverse(NuMuPoint(nu - h_nu, mu2))) / (2 * h_nu)
        d_mu = (cov_inverse(NuMuPoint(nu, mu2 + h_mu)) - cov_inverse(NuMuPoint(nu, mu2 - h_mu))) / (2 * h_mu)
        numeric = abs(d_nu[0] * d_mu[1] - d_nu[1] * d_mu[0])
        assert numeric == pytest.approx(jacobian_factor(nu, mu2), rel=1e-6)
    with pytest.raises(BoundaryError):
        jacobian_factor(8.0, 0.5)


def test_p_plus_has_a_quarter_of_the_area():
    assert integrate_p_plus(lambda x: np.ones(x.shape[0]), 16) == pytest.approx(0.25, rel=1e-12)


def _symmetrized(phi):
    return lambda x: phi(x[:, :2]) + phi(x[:, 1::-1])


@pytest.mark.parametrize("phi", [_disc_bump(0.5, 0.2, 0.15), _disc_bump(0.35, 0.1, 0.08)])
def test_p_plus_integral_in_both_coordinates(phi):
    # both supports lie inside P+
    assert integrate_p_plus(phi, 128) == pytest.approx(integrate_p_plus_direct(phi, 128), rel=1e-6)


@pytest.mark.parametrize("phi", [_disc_bump(0.5, 0.2, 0.15), _disc_bump(0.35, 0.1, 0.08), _disc_bump(0.45, 0.3, 0.2)])
def test_symmetric_integrand_is_twice_its_p_plus_integral(phi):
    psi = _symmetrized(phi)
    in_nu_mu = integrate_p_plus(psi, 128)
    in_x = integrate_p_plus_direct(psi, 128)
    assert in_nu_mu == pytest.approx(in_x, rel=1e-6)
    full, _ = integrate_simplex(psi, 2, budget=128, barycentric=True)
    assert full == pytest.approx(2.0 * in_x, rel=1e-6)


def test_diagonal_crossing_bump_is_not_twice_its_p_plus_integral():
    phi = _disc_bump(0.45, 0.3, 0.2)
    full, _ = integrate_simplex(_symmetrized(phi), 2, budget=128, barycentric=True)
    assert abs(full - 2.0 * integrate_p_plus_direct(phi, 128)) > 1e-3 * full


@pytest.mark.parametrize("nu", [5.0, 8.0, 16.0, 64.0])
def test_fubini_study_fu_baselines(nu):
    assert fu_forward(fubini_study(2), nu, 4096) == pytest.approx(math.pi, abs=1e-6)
    assert fu_forward(fubini_study(3), nu, 4096) == pytest.approx(2 * math.pi * math.sqrt(1 - 4 / nu), abs=1e-5)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("coeffs", [LINEAR, CUBIC_BUMP])
def test_fu_forward_matches_nested_quadrature(n, coeffs):
    profile = from_poly(coeffs, n)
    for nu in (5.0, 16.0, 64.0):
        assert fu_forward(profile, nu, 2048) == pytest.approx(fu_direct(profile, nu, 32), rel=1e-5)


def test_fu_curve_ends_at_fu_forward():
    profile = from_poly(LINEAR, 2)
    curve = fu_curve(profile, 1024, 0.75)
    assert curve.hi == 0.75
    assert curve.values[-1] == pytest.approx(fu_forward(profile, 16.0, 1024), rel=1e-12)


def test_fu_rejects_nu_at_most_four():
    with pytest.raises(InvalidInputError):
        fu_forward(fubini_study(2), 4.0)
    with pytest.raises(InvalidInputError):
        fu_direct(fubini_study(2), 3.0)
    with pytest.raises(InvalidInputError):
        fu_curve(fubini_study(2), 64, 1.0)


def test_fu_separates_profiles():
    assert fu_separation(fubini_study(2), fubini_study(2), 64.0, 512) == 0.0
    assert fu_separation(fubini_study(2), from_poly(LINEAR, 2), 64.0, 512) > 1e-3
    with pytest.raises(InvalidInputError):
        fu_separation(fubini_study(2), fubini_study(3))


def test_invariant_to_fu_recovers_fu():
    profile = from_poly(LINEAR, 2)
    extracted = invariant_to_fu(profile, 8.0, (1.0, 0.5, 0.25), budget=512)
    assert extracted == pytest.approx(fu_forward(profile, 8.0, 2048), rel=5e-2)


def test_invariant_to_fu_rejects_bad_schedules():
    profile = fubini_study(2)
    with pytest.raises(InvalidInputError):
        invariant_to_fu(profile, 16.0, (0.5, 1.0))
    with pytest.raises(InvalidInputError):
        invariant_to_fu(profile, 4.5, (1.0, 0.5))
    with pytest.raises(InvalidInputError):
        invariant_to_fu(profile, 32.0, (1.0, 0.5, 0.25), budget=16)


@pytest.mark.parametrize("n, tolerance", [(2, 5e-3), (3, 1e-2)])
@pytest.mark.parametrize("coeffs", [LINEAR, CUBIC_BUMP])
def test_roundtrip_recovers_profile(n, tolerance, coeffs):
    profile = from_poly(coeffs, n)
    report = reconstruct_profile(fu_curve(profile, 2048, S_MAX), n, profile)
    assert report.sup_error <= tolerance
    assert report.l2_error <= report.sup_error
    assert report.uncovered == (0.0, pytest.approx(4.0 / 4096.0))
    assert report.extrapolated == ("mu=0", "mu=1")
    assert report.nu_max == pytest.approx(4096.0)


def test_roundtrip_error_shrinks_with_resolution():
    profile = from_poly(LINEAR, 2)
    coarse = reconstruct_profile(fu_curve(profile, 512, S_MAX), 2, profile)
    fine = reconstruct_profile(fu_curve(profile, 1024, S_MAX), 2, profile)
    assert coarse.sup_error > 1.5 * fine.sup_error


def test_corrupted_fu_is_detected():
    profile = from_poly(LINEAR, 2)
    report = reconstruct_profile(fu_curve(profile, 2048, S_MAX).scaled(1.1), 2, profile)
    assert report.sup_error > 5e-3


def test_report_outputs():
    profile = from_poly(CUBIC_BUMP, 2)
    report = reconstruct_profile(fu_curve(profile, 2048, S_MAX), 2, profile)
    frame = report.to_frame()
    assert list(frame.columns) == ["mu", "V_recovered", "hpp_recovered", "hpp_reference", "abs_error"]
    assert len(frame) == 2047
    assert frame["mu"].is_monotonic_increasing
    summary = report.summary()
    assert summary["N"] == 2048 and summary["n"] == 2
    recovered = report.profile()
    assert recovered.hpp(0.5) == pytest.approx(profile.hpp(0.5), abs=5e-3)


def test_reconstruct_without_reference():
    profile = from_poly(LINEAR, 2)
    report = reconstruct_profile(fu_curve(profile, 256, S_MAX), 2)
    assert math.isnan(report.sup_error)
    assert report.to_frame()["hpp_reference"].isna().all()


def test_reconstruct_rejects_bad_input():
    curve = fu_curve(fubini_study(2), 64, S_MAX)
    with pytest.raises(InvalidInputError):
        reconstruct_profile(curve, 1)
    with pytest.raises(InvalidInputError):
        reconstruct_profile(GridFunction(0.1, 0.9, curve.values), 2)
    with pytest.raises(InvalidInputError):
        reconstruct_profile(curve, 2, fubini_study(3))
    with pytest.raises(InvalidInputError):
        reconstruct_profile(curve, 2, window=(0.9, 0.1))


@pytest.mark.parametrize("nu0", [16.0, 32.0])
@pytest.mark.parametrize("coeffs", [LINEAR, CUBIC_BUMP])
def test_invariant_to_fu_across_nu0_and_profiles(nu0, coeffs):
    profile = from_poly(coeffs, 2)
    extracted = invariant_to_fu(profile, nu0, (1.0, 0.5, 0.25), budget=1024)
    assert extracted == pytest.approx(fu_forward(profile, nu0, 2048), rel=5e-2)


def test_fu_separates_random_polynomial_profiles():
    rng = np.random.default_rng(12)
    t = np.linspace(0.0, 1.0, 201)
    pairs = 0
    while pairs < 6:
        a = from_poly(rng.uniform(-0.5, 0.5, 3), 2)
        b = from_poly(rng.uniform(-0.5, 0.5, 3), 2)
        if not (is_valid(a) and is_valid(b)):
            continue
        if np.max(np.abs(a.hpp(t) - b.hpp(t))) < 1e-2:
            continue
        assert fu_separation(a, b, 64.0, 1024) > 1e-5
        pairs += 1
