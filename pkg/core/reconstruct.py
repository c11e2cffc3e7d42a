"""
Profile reconstruction from the alpha = (1, -1, 0, ..., 0) invariant

On P+ = {x_1 > x_2} the coordinates nu = 1/x_1 + 1/x_2, mu_k = x_1 + ... + x_k
turn the invariant into 2 int rho(nu) nu^{-3/2} f_u(nu) dnu, and in s_1 = 1 - 4/nu
f_u is the (n-1)-fold Abel transform of V(1 - s). Inverting those transforms gives
V and then h''.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from core.abel import AbelKernelSide, abel_inverse, abel_iterate, baseline_iterate
from core.errors import BoundaryError, InvalidInputError
from core.invariant import InvariantRequest, spectral_invariant
from core.metric import RadialProfile, recover_hpp_from_v, regularized_v
from utils.numerics import GL_ORDER, BumpFunction, GridFunction, integrate_box, singular_rule

logger = logging.getLogger(__name__)

DEFAULT_ABEL_N = 2048
DEFAULT_NU_MAX = 4096.0
DEFAULT_ERROR_WINDOW = (0.05, 0.95)
# node spacing multiple a bump ridge must cover during extraction
RIDGE_RESOLUTION = 2.0


@dataclass(frozen=True)
class NuMuPoint:
    """(nu, mu_2, ..., mu_n) with 0 < 4/nu < mu_2 < ... < mu_n < 1"""
    nu: float
    mu: Tuple[float, ...]

    def __post_init__(self):
        mu = tuple(float(m) for m in np.atleast_1d(self.mu))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", float(self.nu))
        if not mu:
            raise InvalidInputError("A (nu, mu) point needs at least mu_2")
        chain = (4.0 / self.nu if self.nu > 0 else math.inf,) + mu + (1.0,)
        if not all(a < b for a, b in zip(chain, chain[1:])):
            raise BoundaryError(f"(nu, mu) = ({self.nu}, {mu}) violates 4/nu < mu_2 < ... < mu_n < 1")

    @property
    def n(self) -> int:
        return len(self.mu) + 1

    @property
    def s(self) -> Tuple[float, ...]:
        """s_1 = 1 - 4/nu, s_k = 1 - mu_k"""
        return (1.0 - 4.0 / self.nu,) + tuple(1.0 - m for m in self.mu)


def _inverse_arrays(nu: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Vectorized (nu, mu) -> x on the x_1 > x_2 branch; mu has shape (..., n-1)"""
    mu2 = mu[..., 0]
    disc = mu2 * mu2 - 4.0 * mu2 / nu
    if np.any(disc <= 0.0):
        raise BoundaryError("Degenerate (nu, mu_2): mu_2^2 - 4 mu_2 / nu <= 0 (the x_1 = x_2 locus)")
    x1 = 0.5 * (mu2 + np.sqrt(disc))
    x2 = (mu2 / nu) / x1
    tail = np.diff(mu, axis=-1)
    return np.concatenate([x1[..., None], x2[..., None], tail], axis=-1)


def cov_inverse(p: NuMuPoint, n: Optional[int] = None) -> np.ndarray:
    """x_{1,2} = (mu_2 +- sqrt(mu_2^2 - 4 mu_2 / nu)) / 2, x_k = mu_k - mu_{k-1}"""
    if n is not None and n != p.n:
        raise InvalidInputError(f"Point has n = {p.n}, expected {n}")
    return _inverse_arrays(np.asarray(p.nu), np.asarray(p.mu))


def cov_forward(x, n: Optional[int] = None) -> NuMuPoint:
    """nu = 1/x_1 + 1/x_2, mu_k = x_1 + ... + x_k"""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2 or (n is not None and x.size != n):
        raise InvalidInputError(f"Expected a point of dimension {n or '>= 2'}, got shape {x.shape}")
    if np.any(x <= 0.0) or x.sum() >= 1.0:
        raise BoundaryError(f"x = {x.tolist()} is not interior to the simplex")
    if x[0] <= x[1]:
        raise BoundaryError(f"x = {x.tolist()} is not in P+ (needs x_1 > x_2)")
    return NuMuPoint(1.0 / x[0] + 1.0 / x[1], tuple(np.cumsum(x)[1:]))


def jacobian_factor(nu, mu2):
    """dx = mu_2 / (nu^2 sqrt(mu_2^2 - 4 mu_2 / nu)) dnu dmu"""
    nu = np.asarray(nu, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    disc = mu2 * mu2 - 4.0 * mu2 / nu
    if np.any(disc <= 0.0):
        raise BoundaryError("Jacobian diverges at mu_2^2 - 4 mu_2 / nu <= 0")
    return mu2 / (nu * nu * np.sqrt(disc))


def integrate_p_plus(phi: Callable[[np.ndarray], np.ndarray], N: int = 64) -> float:
    """
    int_{P+} phi dx for n = 2, evaluated in (w = 1/nu, mu_2) with the volume
    form jacobian_factor(1/w, mu_2) / w^2; the inner w-integral is singular at w = mu_2/4.
    """
    outer = singular_rule(0.0, 1.0, "none", N)
    inner = singular_rule(0.0, 1.0, "right", N)
    mu2 = np.repeat(outer.nodes, inner.size)
    w = (0.25 * outer.nodes[:, None] * inner.nodes[None, :]).ravel()
    weights = (outer.weights[:, None] * 0.25 * outer.nodes[:, None] * inner.weights[None, :]).ravel()
    nu = 1.0 / w
    x = _inverse_arrays(nu, mu2[:, None])
    values = np.asarray(phi(x), dtype=float) * jacobian_factor(nu, mu2) / (w * w)
    return float(np.dot(weights, values))


def integrate_p_plus_direct(phi: Callable[[np.ndarray], np.ndarray], N: int = 64) -> float:
    """int_{P+} phi dx for n = 2 in x itself: x_2 in (0, 1/2), x_1 in (x_2, 1 - x_2)"""
    def pulled_back(ab: np.ndarray) -> np.ndarray:
        a, b = ab[:, 0], ab[:, 1]
        x = np.stack([a + b * (1.0 - 2.0 * a), a], axis=1)
        return np.asarray(phi(x), dtype=float) * (1.0 - 2.0 * a)

    return integrate_box(pulled_back, [(0.0, 0.5), (0.0, 1.0)], N)


def _check_order(profile: RadialProfile):
    if profile.n < 2:
        raise InvalidInputError(f"f_u needs n >= 2, got n = {profile.n}")


def _v_tilde(profile: RadialProfile, s_end: float, N: int) -> GridFunction:
    """V(1 - s) = W(1 - s) / sqrt(s) on N nodes of [0, s_end], stored as W"""
    s = np.linspace(0.0, s_end, N)
    return GridFunction(0.0, s_end, regularized_v(profile, 1.0 - s), sqrt_singular_origin=True)


def fu_forward(profile: RadialProfile, nu: float, N: int = 4096) -> float:
    """f_u(nu) = J^{n-1}(V(1 - s))(s_1), s_1 = 1 - 4/nu"""
    _check_order(profile)
    if nu <= 4.0:
        raise InvalidInputError(f"f_u is defined for nu > 4, got nu = {nu}")
    s1 = 1.0 - 4.0 / nu
    return float(abel_iterate(_v_tilde(profile, s1, N), profile.n - 1).values[-1])


def fu_curve(profile: RadialProfile, N: int = DEFAULT_ABEL_N, s_max: Optional[float] = None) -> GridFunction:
    """The whole f_u curve as a function of s_1 on [0, s_max]"""
    _check_order(profile)
    if s_max is None:
        s_max = 1.0 - 4.0 / DEFAULT_NU_MAX
    if not 0.0 < s_max < 1.0:
        raise InvalidInputError(f"s_max must lie in (0, 1), got {s_max}")
    return abel_iterate(_v_tilde(profile, s_max, N), profile.n - 1)


def _nested_mu_integral(profile: RadialProfile, depth: int, lower: float, panels: int) -> float:
    """int_lower^1 (mu - lower)^{-1/2} next(mu) dmu, next = V at the innermost level"""
    rule = singular_rule(lower, 1.0, "both", panels)
    if depth == 1:
        inner = regularized_v(profile, rule.nodes) / np.sqrt(rule.right_gap)
    else:
        inner = np.array([_nested_mu_integral(profile, depth - 1, m, panels) for m in rule.nodes])
    return float(np.dot(rule.weights, inner / np.sqrt(rule.left_gap)))


def fu_direct(profile: RadialProfile, nu: float, panels: int = 32) -> float:
    """f_u(nu) by nested quadrature in the mu coordinates, n - 1 levels deep"""
    _check_order(profile)
    if nu <= 4.0:
        raise InvalidInputError(f"f_u is defined for nu > 4, got nu = {nu}")
    if profile.n > 3:
        logger.warning(f"fu_direct with n={profile.n} costs ({GL_ORDER * panels})^{profile.n - 1} evaluations")
    return _nested_mu_integral(profile, profile.n - 1, 4.0 / nu, panels)


def fu_separation(prof_a: RadialProfile, prof_b: RadialProfile, nu_max: float = 64.0,
                  N: int = DEFAULT_ABEL_N) -> float:
    """sup over nu in (4, nu_max] of |f_u^a - f_u^b|"""
    if prof_a.n != prof_b.n:
        raise InvalidInputError(f"Profiles live in different dimensions: {prof_a.n} vs {prof_b.n}")
    s_max = 1.0 - 4.0 / nu_max
    a = fu_curve(prof_a, N, s_max)
    b = fu_curve(prof_b, N, s_max)
    return float(np.max(np.abs(a.values - b.values)))


def extraction_alpha(n: int) -> np.ndarray:
    alpha = np.zeros(n)
    alpha[:2] = (1.0, -1.0)
    return alpha


def invariant_to_fu(profile: RadialProfile, nu0: float, widths: Sequence[float] = (1.0, 0.5, 0.25),
                    budget: int = 1024, seed: int = 0, scheme: str = "tensor_duffy") -> float:
    """
    f_u(nu0) read off invariant values alone: for each bump rho of half width w
    centred at nu0, I(rho) / (2 int rho nu^{-3/2}) is an average of f_u near nu0;
    the averages are extrapolated to w = 0 as a polynomial in w^2.
    """
    _check_order(profile)
    widths = [float(w) for w in widths]
    if not widths or any(w <= 0 for w in widths) or any(a <= b for a, b in zip(widths, widths[1:])):
        raise InvalidInputError(f"Bump widths must be positive and strictly decreasing, got {widths}")
    if nu0 - widths[0] <= 4.0:
        raise InvalidInputError(f"Bump support [{nu0 - widths[0]}, {nu0 + widths[0]}] crosses nu = 4")

    if scheme == "tensor_duffy":
        nodes = GL_ORDER * budget
        x_star = 2.0 / nu0
        spacing = 2.0 * math.sqrt(x_star) * (math.sqrt(2.0) / nodes)
        thickness = widths[-1] * x_star * x_star / math.sqrt(2.0)
        if thickness < RIDGE_RESOLUTION * spacing:
            raise InvalidInputError(
                f"Bump width {widths[-1]} is below grid resolution at nu0={nu0} "
                f"(ridge {thickness:.2e} vs node spacing {spacing:.2e}); raise the budget")

    alpha = extraction_alpha(profile.n)
    averages = []
    for w in widths:
        rho = BumpFunction(nu0, w)
        result = spectral_invariant(InvariantRequest(profile, alpha, rho, scheme=scheme, budget=budget, seed=seed))
        averages.append(result.value / (2.0 * rho.weighted_mass(-1.5)))
        logger.debug(f"nu0={nu0} w={w}: averaged f_u = {averages[-1]:.8g} (quadrature ± {result.error:.1e})")

    if len(widths) == 1:
        return averages[0]
    coeffs = np.polyfit(np.square(widths), averages, len(widths) - 1)
    return float(coeffs[-1])


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    n: int
    s_grid: np.ndarray
    recovered_V: GridFunction
    recovered_hpp: GridFunction
    hpp_at_zero: float
    hpp_at_one: float
    reference_hpp: Optional[GridFunction] = None
    sup_error: float = math.nan
    l2_error: float = math.nan
    abel_N: int = 0
    nu_max: float = math.nan
    window: Tuple[float, float] = DEFAULT_ERROR_WINDOW
    uncovered: Tuple[float, float] = (0.0, 0.0)
    extrapolated: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def mu(self) -> np.ndarray:
        return self.recovered_hpp.nodes

    def profile(self) -> RadialProfile:
        """Recovered h'' on [0, 1] including the extrapolated end values"""
        knots = np.concatenate([[0.0], self.mu, [1.0]])
        samples = np.concatenate([[self.hpp_at_zero], self.recovered_hpp.values, [self.hpp_at_one]])
        return RadialProfile(self.n, knots=knots, samples=samples)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            "mu": self.mu,
            "V_recovered": self.recovered_V.values,
            "hpp_recovered": self.recovered_hpp.values,
        })
        if self.reference_hpp is not None:
            frame["hpp_reference"] = self.reference_hpp.values
            frame["abs_error"] = np.abs(self.recovered_hpp.values - self.reference_hpp.values)
        else:
            frame["hpp_reference"] = np.nan
            frame["abs_error"] = np.nan
        return frame

    def summary(self) -> dict:
        return {
            "n": self.n,
            "N": self.abel_N,
            "nu_max": self.nu_max,
            "sup_error": self.sup_error,
            "l2_error": self.l2_error,
            "window": list(self.window),
            "uncovered_mu": list(self.uncovered),
            "extrapolated": list(self.extrapolated),
        }


def reconstruct_profile(fu_data: GridFunction, n: int, reference: Optional[RadialProfile] = None,
                        window: Tuple[float, float] = DEFAULT_ERROR_WINDOW, smooth: bool = False) -> ReconstructionReport:
    """
    Invert f_u sampled on s_1 in [0, s_max] back to V and h''.

    The closed-form Fubini-Study part J^{n-1}(s^{-1/2}) is subtracted first and
    s^{-1/2} added back after the n - 1 inversions.
    """
    if n < 2:
        raise InvalidInputError(f"Reconstruction needs n >= 2, got n = {n}")
    if fu_data.lo != 0.0 or fu_data.hi >= 1.0 or fu_data.sqrt_singular_origin:
        raise InvalidInputError(f"f_u data must be sampled on [0, s_max] with s_max < 1, got [{fu_data.lo}, {fu_data.hi}]")
    if reference is not None and reference.n != n:
        raise InvalidInputError(f"Reference profile has n = {reference.n}, expected {n}")
    lo_w, hi_w = window
    if not 0.0 <= lo_w < hi_w <= 1.0:
        raise InvalidInputError(f"Error window must satisfy 0 <= lo < hi <= 1, got {window}")

    k = n - 1
    s = fu_data.nodes
    remainder = fu_data.with_values(fu_data.values - baseline_iterate(k, s))
    for _ in range(k):
        remainder = abel_inverse(remainder, AbelKernelSide.LEFT, smooth=smooth)

    # drop s = 0 (mu = 1), flip onto an ascending mu grid
    s_pos = s[1:]
    V_values = (1.0 / np.sqrt(s_pos) + remainder.values[1:])[::-1]
    mu_lo, mu_hi = 1.0 - s_pos[-1], 1.0 - s_pos[0]
    V = GridFunction(mu_lo, mu_hi, V_values)
    hpp = recover_hpp_from_v(V)

    mu = hpp.nodes
    hpp_zero = float(np.polyval(np.polyfit(mu[:3], hpp.values[:3], 2), 0.0))
    slope = (hpp.values[-1] - hpp.values[-2]) / (mu[-1] - mu[-2])
    hpp_one = float(hpp.values[-1] + slope * (1.0 - mu[-1]))
    extrapolated = ("mu=0", "mu=1")
    nu_max = 4.0 / mu_lo
    logger.debug(f"h'' extrapolated: h''(0) = {hpp_zero:.6g}, h''(1) = {hpp_one:.6g}; "
                 f"mu in [0, {mu_lo:.3e}) not covered")

    reference_grid = None
    sup_error = l2_error = math.nan
    if reference is not None:
        reference_grid = hpp.with_values(reference.hpp(mu))
        inside = (mu >= lo_w) & (mu <= hi_w)
        if np.count_nonzero(inside) < 2:
            raise InvalidInputError(f"Error window {window} holds fewer than two grid nodes")
        err = np.abs(hpp.values - reference_grid.values)[inside]
        sup_error = float(np.max(err))
        l2_error = float(math.sqrt(trapezoid(err * err, mu[inside])))

    return ReconstructionReport(
        n=n, s_grid=s, recovered_V=V, recovered_hpp=hpp, hpp_at_zero=hpp_zero, hpp_at_one=hpp_one,
        reference_hpp=reference_grid, sup_error=sup_error, l2_error=l2_error, abel_N=fu_data.size,
        nu_max=nu_max, window=(lo_w, hi_w), uncovered=(0.0, mu_lo), extrapolated=extrapolated,
    )
