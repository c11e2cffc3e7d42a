import asyncio
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from core.abel import AbelKernelSide, abel_forward, abel_inverse, abel_iterate
from core.errors import EXIT_OK, InvalidInputError, ToleranceError, exit_code_for
from core.invariant import InvariantRequest, F_from_rho, raw_invariant, rho_from_F, spectral_invariant
from core.metric import fubini_study, from_poly, is_valid
from core.reconstruct import (NuMuPoint, cov_inverse, fu_direct, fu_forward, integrate_p_plus,
                              integrate_p_plus_direct, invariant_to_fu, jacobian_factor)
from utils.numerics import BumpFunction, GridFunction, dirichlet_half_mass, integrate_simplex
from utils.report_writer import ReportWriter

SUITES = (
    "volume",
    "abel_normalization",
    "abel_roundtrip",
    "rho_F_roundtrip",
    "jacobian",
    "change_of_variables",
    "fu_cross",
    "raw_vs_reduced",
)
# run only when named with --suite
OPT_IN_SUITES = ("fu_extraction",)

FU_CROSS_NU = (5.0, 8.0, 16.0, 64.0)
CHANGE_OF_VARIABLES_PANELS = 128
RAW_PROFILES = 5


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    passed: bool
    observed: float
    expected: float
    tolerance: float
    detail: str = ""


def _window_mask(g: GridFunction, window) -> np.ndarray:
    x = g.nodes
    lo, hi = window
    span = g.hi - g.lo
    return (x >= g.lo + lo * span) & (x <= g.lo + hi * span)


def _bump2(center, radius):
    """Smooth bump on the disc of the given radius around center in R^2"""
    cx, cy = center

    def phi(x: np.ndarray) -> np.ndarray:
        r2 = ((x[:, 0] - cx) ** 2 + (x[:, 1] - cy) ** 2) / (radius * radius)
        out = np.zeros(r2.shape)
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    return phi


def check_volume(config) -> SuiteResult:
    """Fubini-Study with alpha = 0 and rho(0) = 1 gives int_P sqrt(det Hess)"""
    n = config.n
    tol = config.tolerances.volume
    request = InvariantRequest(fubini_study(n), np.zeros(n), BumpFunction(0.0, 1.0),
                               budget=config.quadrature.panels_for(n))
    result = spectral_invariant(request)
    expected = dirichlet_half_mass(n)
    rel = abs(result.value - expected) / expected
    return SuiteResult("volume", rel <= tol, result.value, expected, tol, f"relative error {rel:.3e}")


def check_abel_normalization(config) -> SuiteResult:
    tol = config.tolerances.abel_normalization
    f = GridFunction.from_function(lambda x: x * x, 0.0, 1.0, config.grids.abel_N)
    twice = abel_iterate(f, 2)
    exact = math.pi * f.nodes ** 3 / 3.0
    err = float(np.max(np.abs(twice.values - exact)))
    ratio = twice.values[-1] * 3.0
    return SuiteResult("abel_normalization", err <= tol, ratio, math.pi, tol,
                       f"sup |J(J(x^2)) - pi x^3/3| = {err:.3e}")


def check_abel_roundtrip(config) -> SuiteResult:
    tol = config.tolerances.abel_roundtrip
    f = GridFunction.from_function(lambda x: x * x, 0.0, 1.0, config.grids.abel_N)
    worst = 0.0
    for side in AbelKernelSide:
        back = abel_inverse(abel_forward(f, side), side)
        mask = _window_mask(f, config.tolerances.error_window)
        worst = max(worst, float(np.max(np.abs(back.values[mask] - f.values[mask]))))
    return SuiteResult("abel_roundtrip", worst <= tol, worst, 0.0, tol, "f = x^2, both kernel sides")


def check_rho_F_roundtrip(config) -> SuiteResult:
    tol = config.tolerances.rho_F
    F = BumpFunction(2.0, 1.0)
    errors = []
    for n in (1, 2, 3):
        rho = rho_from_F(F, n, config.quadrature.rho_F_nodes)
        back = F_from_rho(rho, n)
        mask = _window_mask(rho, config.tolerances.error_window)
        errors.append(float(np.max(np.abs(back.values[mask] - F(rho.nodes[mask])))))
    worst = max(errors)
    detail = ", ".join(f"n={n}: {e:.3e}" for n, e in zip((1, 2, 3), errors))
    return SuiteResult("rho_F_roundtrip", worst <= tol, worst, 0.0, tol, detail)


def check_jacobian(config, points: int = 100) -> SuiteResult:
    """Finite-difference determinant of (nu, mu_2) -> x against the closed form"""
    tol = config.tolerances.jacobian
    rng = np.random.default_rng(config.seed)
    mu2 = rng.uniform(0.2, 0.9, points)
    nu = 4.0 / mu2 * rng.uniform(1.2, 10.0, points)
    worst = 0.0
    for v, m in zip(nu, mu2):
        dv, dm = 1e-5 * v, 1e-5 * m
        d_nu = (cov_inverse(NuMuPoint(v + dv, (m,))) - cov_inverse(NuMuPoint(v - dv, (m,)))) / (2.0 * dv)
        d_mu = (cov_inverse(NuMuPoint(v, (m + dm,))) - cov_inverse(NuMuPoint(v, (m - dm,)))) / (2.0 * dm)
        numeric = abs(d_nu[0] * d_mu[1] - d_nu[1] * d_mu[0])
        closed = float(jacobian_factor(v, m))
        worst = max(worst, abs(numeric - closed) / closed)
    return SuiteResult("jacobian", worst <= tol, worst, 0.0, tol, f"{points} seeded points")


def check_change_of_variables(config) -> SuiteResult:
    tol = config.tolerances.change_of_variables
    bumps = [_bump2((0.5, 0.2), 0.15), _bump2((0.35, 0.1), 0.08), _bump2((0.45, 0.3), 0.2)]
    worst = 0.0
    notes = []
    for phi in bumps:
        # symmetric in (x_1, x_2), so the simplex integral is twice the P+ integral
        psi = lambda x, phi=phi: phi(x[:, :2]) + phi(x[:, 1::-1])
        in_nu_mu = integrate_p_plus(psi, CHANGE_OF_VARIABLES_PANELS)
        in_x = integrate_p_plus_direct(psi, CHANGE_OF_VARIABLES_PANELS)
        full, _ = integrate_simplex(psi, 2, budget=CHANGE_OF_VARIABLES_PANELS, barycentric=True)
        rel = max(abs(in_nu_mu - in_x), abs(full - 2.0 * in_x)) / abs(in_x)
        worst = max(worst, rel)
        notes.append(f"{in_nu_mu:.10g}")
    return SuiteResult("change_of_variables", worst <= tol, worst, 0.0, tol, "P+ integrals " + ", ".join(notes))


def check_fu_cross(config) -> SuiteResult:
    """Abel-composition f_u against the nested integral, configured profile and Fubini-Study"""
    tol = config.tolerances.fu_match
    n = config.n
    nu_values = config.fu.nu or list(FU_CROSS_NU)
    worst = 0.0
    for profile in (config.build_profile(), fubini_study(n)):
        for nu in nu_values:
            fast = fu_forward(profile, nu, config.grids.abel_N)
            slow = fu_direct(profile, nu, config.grids.fu_direct_panels)
            worst = max(worst, abs(fast - slow) / max(1.0, abs(slow)))
    return SuiteResult("fu_cross", worst <= tol, worst, 0.0, tol, f"nu in {list(nu_values)}, n={n}")


def check_raw_vs_reduced(config) -> SuiteResult:
    """Monte Carlo over P x R^2 against the radially reduced invariant for random valid profiles"""
    q = config.quadrature
    sigmas = config.tolerances.mc_sigmas
    rng = np.random.default_rng(config.seed)
    F = BumpFunction(14.0, 10.0)
    worst = 0.0
    checked = 0
    while checked < RAW_PROFILES:
        profile = from_poly(rng.uniform(-0.5, 0.5, 2), 2)
        if not is_valid(profile, seed=config.seed):
            continue
        alpha = rng.uniform(0.4, 1.0, 2)
        reduced = raw_invariant(profile, alpha, F, "reduced", budget=q.panels_for(2))
        brute = raw_invariant(profile, alpha, F, "brute_force", budget=q.mc_samples, seed=config.seed + checked,
                              workers=q.workers, batch_size=q.mc_batch)
        spread = math.hypot(brute.error, reduced.error)
        worst = max(worst, abs(brute.value - reduced.value) / spread if spread > 0 else math.inf)
        checked += 1
    return SuiteResult("raw_vs_reduced", worst <= sigmas, worst, 0.0, sigmas,
                       f"{RAW_PROFILES} profiles, deviation in standard errors")


def check_fu_extraction(config) -> SuiteResult:
    """f_u read off invariant values with shrinking bumps, against the direct transform"""
    tol = config.tolerances.extraction
    settings = config.extraction
    profile = config.build_profile()
    worst = 0.0
    for nu0 in settings.nu0:
        extracted = invariant_to_fu(profile, nu0, settings.widths, budget=settings.extract_panels, seed=config.seed)
        direct = fu_forward(profile, nu0, config.grids.abel_N)
        worst = max(worst, abs(extracted - direct) / abs(direct))
    return SuiteResult("fu_extraction", worst <= tol, worst, 0.0, tol,
                       f"nu0 in {list(settings.nu0)}, widths {list(settings.widths)}")


CHECKS = {
    "volume": check_volume,
    "abel_normalization": check_abel_normalization,
    "abel_roundtrip": check_abel_roundtrip,
    "rho_F_roundtrip": check_rho_F_roundtrip,
    "jacobian": check_jacobian,
    "change_of_variables": check_change_of_variables,
    "fu_cross": check_fu_cross,
    "raw_vs_reduced": check_raw_vs_reduced,
    "fu_extraction": check_fu_extraction,
}


class VerifyCommand:
    """Self-checks of the numerical building blocks; exit 0 only if every selected suite passes"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def _selected(self, args):
        chosen = getattr(args, "suite", None) or list(SUITES)
        unknown = [s for s in chosen if s not in CHECKS]
        if unknown:
            raise InvalidInputError(f"Unknown verify suite(s) {unknown}; available: {', '.join(CHECKS)}")
        # fixed order, duplicates dropped
        return [s for s in SUITES + OPT_IN_SUITES if s in chosen]

    async def run(self, config, args):
        selected = self._selected(args)
        self.logger.info(f"▶️ Running verify suites: {', '.join(selected)}")
        results = await asyncio.gather(*[asyncio.to_thread(CHECKS[name], config) for name in selected])

        for r in results:
            if r.passed:
                self.logger.info(f"✅ {r.suite}: {r.observed:.6g} ({r.detail})")
            else:
                self.logger.error(f"❌ {r.suite}: {r.observed:.6g} vs tolerance {r.tolerance:g} ({r.detail})")

        frame = pd.DataFrame([asdict(r) for r in results])
        writer = ReportWriter(config.output_dir)
        writer.write_csv("verify.csv", frame)
        all_passed = all(r.passed for r in results)
        writer.write_manifest("verify", config.manifest(),
                              {"passed": all_passed, "suites": {r.suite: r.passed for r in results}})

        table = frame[["suite", "passed", "observed", "tolerance"]].to_string(index=False)
        if all_passed:
            return {"success": True, "response": table, "exit_code": EXIT_OK}
        failure = ToleranceError(f"Suites outside tolerance: {', '.join(r.suite for r in results if not r.passed)}")
        self.logger.error(f"❌ {failure}")
        return {"success": False, "response": table, "exit_code": exit_code_for(failure)}
