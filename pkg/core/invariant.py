"""
Spectral invariants of U(n)-invariant toric metrics on CP^n

    I(rho, alpha) = int_P rho(alpha^t Hess(g) alpha) sqrt(det Hess(g)) dx

the raw 2n-dimensional invariant over P x R^n it comes from, and the rho <-> F
correspondence rho(t) = int_0^inf F(t + r^2) r^{n-1} dr in both directions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import gamma

from core.abel import AbelKernelSide, abel_forward, abel_inverse
from core.errors import InvalidInputError
from core.metric import (RadialProfile, det_hessian, inverse_quadratic_form, is_valid, quadratic_form,
                         u_value)
from utils.numerics import (BumpFunction, GridFunction, differentiate, integrate_simplex,
                            integrate_singular, monte_carlo_box, singular_rule)

logger = logging.getLogger(__name__)

TestFunction = Union[BumpFunction, GridFunction, Callable[[np.ndarray], np.ndarray]]

RAW_MODES = ("reduced", "brute_force")
# Gauss-Legendre panels for the inner radial integral of the reduced invariant
RADIAL_PANELS = 12
RADIAL_CHUNK = 1 << 14
# relative size of rho(hi) tolerated as "vanishing at the right end"
RIGHT_END_TOLERANCE = 1e-6


def sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1} in R^n"""
    if n < 1:
        raise InvalidInputError(f"Sphere dimension must be positive, got n={n}")
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


@dataclass(frozen=True)
class RadialReduction:
    n: int

    @property
    def sphere_area(self) -> float:
        return sphere_area(self.n)


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    error: float

    def __float__(self) -> float:
        return self.value


def _as_callable(fn: TestFunction) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(fn, GridFunction):
        return fn.interpolant("pchip")
    return fn


def _support_end(F: TestFunction, support_end: Optional[float]) -> float:
    if support_end is not None:
        return float(support_end)
    if isinstance(F, BumpFunction):
        return F.support[1]
    if isinstance(F, GridFunction):
        return F.hi
    raise InvalidInputError("A callable test function needs an explicit support_end")


@dataclass(frozen=True)
class InvariantRequest:
    profile: RadialProfile
    alpha: Sequence[float]
    rho: TestFunction
    scheme: str = "tensor_duffy"
    budget: int = 256
    seed: int = 0
    workers: int = 1
    batch_size: int = 1 << 20

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        if alpha.size != self.profile.n or not np.all(np.isfinite(alpha)):
            raise InvalidInputError(f"alpha must be a finite vector of length {self.profile.n}, got {self.alpha!r}")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)


def _require_valid(profile: RadialProfile):
    report = is_valid(profile)
    if not report.valid:
        raise InvalidInputError(f"Profile rejected: {report.message}")


def _invariant_integrand(profile: RadialProfile, alpha: np.ndarray, rho: Callable):
    n = profile.n

    def integrand(bary: np.ndarray) -> np.ndarray:
        x, rest = bary[:, :n], bary[:, n]
        Q = quadratic_form(profile, alpha, x, complement=rest)
        weight = np.asarray(rho(Q), dtype=float)
        out = np.zeros(Q.shape)
        live = weight != 0.0
        if np.any(live):
            out[live] = weight[live] * np.sqrt(det_hessian(profile, x[live], complement=rest[live]))
        return out

    return integrand


def spectral_invariant(req: InvariantRequest) -> IntegralEstimate:
    """int_P rho(alpha^t Hess alpha) sqrt(det Hess) dx with an error proxy"""
    _require_valid(req.profile)
    value, error = integrate_simplex(
        _invariant_integrand(req.profile, req.alpha, _as_callable(req.rho)),
        req.profile.n, scheme=req.scheme, budget=req.budget, seed=req.seed,
        batch_size=req.batch_size, workers=req.workers, barycentric=True,
    )
    logger.debug(f"spectral invariant alpha={req.alpha.tolist()} ({req.scheme}, {req.budget}): "
                 f"{value:.10g} ± {error:.2e}")
    return IntegralEstimate(value, error)


def _radial_integral(F: Callable, n: int, S: float):
    """Q -> int_0^inf F(Q + r^2) r^{n-1} dr for F supported below S"""
    rule = singular_rule(0.0, 1.0, "none", RADIAL_PANELS)

    def rho(Q: np.ndarray) -> np.ndarray:
        Q = np.asarray(Q, dtype=float).reshape(-1)
        R = np.sqrt(np.maximum(S - Q, 0.0))
        out = np.zeros(Q.shape)
        live = np.flatnonzero(R > 0.0)
        for start in range(0, live.size, RADIAL_CHUNK):
            idx = live[start:start + RADIAL_CHUNK]
            r = R[idx, None] * rule.nodes
            values = np.asarray(F(Q[idx, None] + r * r), dtype=float) * r ** (n - 1)
            out[idx] = R[idx] * (values @ rule.weights)
        return out

    return rho


def raw_invariant(profile: RadialProfile, alpha: Sequence[float], F: TestFunction, mode: str = "reduced",
                  budget: int = 256, seed: int = 0, support_end: Optional[float] = None,
                  workers: int = 1, batch_size: int = 1 << 20) -> IntegralEstimate:
    """
    int_P int_{R^n} F(alpha^t Hess alpha + xi^t Hess^{-1} xi) dxi dx.

    reduced: sphere_area(n) times the simplex integral of the radial profile
    int_0^inf F(Q + r^2) r^{n-1} dr against sqrt(det Hess), budget = panels per axis.
    brute_force: Monte Carlo over [0,1]^n x [-1,1]^n with xi_i = R_i u_i and
    R_i = sqrt((S - Q) Hess_ii), the Cauchy-Schwarz box of {xi^t Hess^{-1} xi <= S - Q};
    budget = samples.
    """
    if mode not in RAW_MODES:
        raise InvalidInputError(f"Unknown raw invariant mode {mode!r}; expected one of {RAW_MODES}")
    n = profile.n
    S = _support_end(F, support_end)
    F = _as_callable(F)

    if mode == "reduced":
        req = InvariantRequest(profile, alpha, _radial_integral(F, n, S), budget=budget, seed=seed)
        inner = spectral_invariant(req)
        area = sphere_area(n)
        return IntegralEstimate(area * inner.value, area * inner.error)

    _require_valid(profile)
    alpha = np.array(alpha, dtype=float).reshape(-1)
    if alpha.size != n:
        raise InvalidInputError(f"alpha must have length {n}, got {alpha.size}")

    def integrand(points: np.ndarray) -> np.ndarray:
        x, u = points[:, :n], points[:, n:]
        out = np.zeros(points.shape[0])
        inside = np.all(x > 0.0, axis=1) & (x.sum(axis=1) < 1.0)
        if not np.any(inside):
            return out
        xs, us = x[inside], u[inside]
        Q = quadratic_form(profile, alpha, xs)
        room = S - Q
        live = room > 0.0
        if not np.any(live):
            return out
        xs, us, Q, room = xs[live], us[live], Q[live], room[live]
        diagonal = 1.0 / xs + u_value(profile, xs.sum(axis=1))[:, None]
        R = np.sqrt(room[:, None] * diagonal)
        xi = R * us
        values = np.asarray(F(Q + inverse_quadratic_form(profile, xi, xs)), dtype=float) * np.prod(R, axis=1)
        slots = np.flatnonzero(inside)[live]
        out[slots] = values
        return out

    bounds = [(0.0, 1.0)] * n + [(-1.0, 1.0)] * n
    value, error = monte_carlo_box(integrand, bounds, budget, seed, batch_size=batch_size, workers=workers)
    logger.debug(f"raw invariant (brute force, {budget} samples): {value:.8g} ± {error:.2e}")
    return IntegralEstimate(value, error)


def rho_from_F(F: TestFunction, n: int, N: int = 4096, support_end: Optional[float] = None,
               panels: int = 64) -> GridFunction:
    """
    rho(t) = int_0^inf F(t + r^2) r^{n-1} dr = 1/2 int_t^S F(s) (s - t)^{(n-2)/2} ds
    on N nodes of [0, S], S the right end of the support of F.
    """
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")
    S = _support_end(F, support_end)
    if S <= 0.0:
        raise InvalidInputError(f"Support of F must reach into t > 0, got end {S}")
    F = _as_callable(F)
    power = (n - 2) / 2.0
    t = np.linspace(0.0, S, N)
    values = np.zeros(N)
    for i, ti in enumerate(t[:-1]):
        values[i] = 0.5 * integrate_singular(lambda s: F(s) * (s - ti) ** power if power else F(s),
                                             ti, S, "left", panels)
    return GridFunction(0.0, S, values)


def F_from_rho(rho: GridFunction, n: int, smooth: bool = False) -> GridFunction:
    """
    Invert rho = rho_from_F(F, n) on the grid of rho.

    n = 1: 1/2 J_R(F) = rho, so F = -(2/pi) d/dt J_R(rho).
    n = 2: F = -2 rho'.
    n >= 3: rho is -(n-2)/2 times the order-(n-2) transform of f(t) = -int_t^inf F,
    so f = F_from_rho(-2 rho / (n-2), n-2) and F = f'.
    """
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")
    if rho.sqrt_singular_origin:
        raise InvalidInputError("rho samples cannot carry an inverse-sqrt weight")
    scale = max(1.0, float(np.max(np.abs(rho.values))))
    if abs(rho.values[-1]) > RIGHT_END_TOLERANCE * scale:
        raise InvalidInputError(f"rho must vanish at the right grid end, got rho({rho.hi}) = {rho.values[-1]:.3g}")

    if n == 1:
        return abel_inverse(rho.scaled(2.0), AbelKernelSide.RIGHT, smooth=smooth)
    if n == 2:
        return differentiate(rho).scaled(-2.0)
    f = F_from_rho(rho.scaled(-2.0 / (n - 2)), n - 2, smooth=smooth)
    return differentiate(f)


def F_from_rho_reciprocal(rho: GridFunction, t_nodes, N: int = 8192) -> np.ndarray:
    """
    n = 1 inversion through nu = 1/t:
    F(t) = 2 / (pi t^{3/2}) * d/dx [J(rho(1/nu) / sqrt(nu))](1/t).
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    if np.any(t_nodes <= 0.0):
        raise InvalidInputError("The reciprocal inversion needs t > 0")
    X = 1.0 / float(np.min(t_nodes))
    rho_fn = rho.interpolant("pchip")
    nu = np.linspace(0.0, X, N)
    g = np.zeros(N)
    g[1:] = rho_fn(1.0 / nu[1:]) / np.sqrt(nu[1:])
    derivative = differentiate(abel_forward(GridFunction(0.0, X, g)))
    return 2.0 / (math.pi * t_nodes ** 1.5) * derivative(1.0 / t_nodes)
