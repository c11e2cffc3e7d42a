"""
U(n)-invariant symplectic potentials on the standard simplex
g = g_0 + h(x_1 + ... + x_n); everything below is closed-form algebra in
U(t) = 1/(1-t) + h''(t) and the diagonal 1/x_i.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial
from scipy.interpolate import PchipInterpolator

from core.errors import BoundaryError, InvalidInputError, ReconstructionError
from core.polytope import guillemin_potential, simplex_vertices, standard_simplex
from utils.numerics import GridFunction

logger = logging.getLogger(__name__)

VALIDITY_SAMPLES = 10001
SPOT_CHECKS = 64
# float noise allowed when h'' is evaluated at the ends of [0, 1]
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """
    The unknown h'' of a U(n)-invariant potential, as polynomial coefficients
    (h''(t) = sum c_i t^i) or as samples on knots 0 = t_0 < ... < t_m = 1 joined by
    monotone cubic interpolation. h' and h carry the gauge h(0) = h'(0) = 0.
    """
    n: int
    coefficients: Optional[np.ndarray] = None
    knots: Optional[np.ndarray] = None
    samples: Optional[np.ndarray] = None
    _hpp: object = field(init=False, repr=False)
    _hp: object = field(init=False, repr=False)
    _h: object = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInputError(f"Profile dimension n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

        if (self.coefficients is None) == (self.knots is None):
            raise InvalidInputError("A profile needs either polynomial coefficients or sampled knots, not both")

        if self.coefficients is not None:
            coeffs = np.atleast_1d(np.array(self.coefficients, dtype=float))
            if coeffs.ndim != 1 or coeffs.size == 0 or not np.all(np.isfinite(coeffs)):
                raise InvalidInputError(f"Invalid h'' coefficients: {self.coefficients!r}")
            coeffs.setflags(write=False)
            object.__setattr__(self, "coefficients", coeffs)
            hpp = Polynomial(coeffs)
            object.__setattr__(self, "_hpp", hpp)
            object.__setattr__(self, "_hp", hpp.integ(1, lbnd=0.0))
            object.__setattr__(self, "_h", hpp.integ(2, lbnd=0.0))
            return

        knots = np.array(self.knots, dtype=float)
        samples = np.array(self.samples, dtype=float) if self.samples is not None else None
        if samples is None or knots.ndim != 1 or samples.shape != knots.shape or knots.size < 2:
            raise InvalidInputError("Sampled profile needs matching 1-D knots and samples (at least 2)")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(samples))):
            raise InvalidInputError("Sampled h'' must be finite on [0, 1]")
        if np.any(np.diff(knots) <= 0):
            raise InvalidInputError("Profile knots must be strictly increasing")
        if abs(knots[0]) > 1e-9 or abs(knots[-1] - 1.0) > 1e-9:
            raise InvalidInputError(f"Profile knots must span [0, 1], got [{knots[0]}, {knots[-1]}]")
        knots[0], knots[-1] = 0.0, 1.0
        knots.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "samples", samples)
        hpp = PchipInterpolator(knots, samples, extrapolate=True)
        object.__setattr__(self, "_hpp", hpp)
        object.__setattr__(self, "_hp", hpp.antiderivative(1))
        object.__setattr__(self, "_h", hpp.antiderivative(2))

    @property
    def kind(self) -> str:
        return "poly" if self.coefficients is not None else "grid"

    def _check_domain(self, t: np.ndarray):
        if np.any(t < -_DOMAIN_SLACK) or np.any(t > 1.0 + _DOMAIN_SLACK):
            raise BoundaryError(f"h'' is defined on [0, 1]; got t in [{np.min(t):.6g}, {np.max(t):.6g}]")

    def hpp(self, t):
        t = np.asarray(t, dtype=float)
        self._check_domain(t)
        return np.asarray(self._hpp(t), dtype=float)

    def hp(self, t):
        t = np.asarray(t, dtype=float)
        self._check_domain(t)
        return np.asarray(self._hp(t), dtype=float)

    def h(self, t):
        t = np.asarray(t, dtype=float)
        self._check_domain(t)
        return np.asarray(self._h(t), dtype=float)

    def describe(self) -> dict:
        """JSON-ready summary for run manifests"""
        if self.kind == "poly":
            return {"n": self.n, "kind": "poly", "hpp_poly": self.coefficients.tolist()}
        return {"n": self.n, "kind": "grid", "knots": int(self.knots.size)}


def fubini_study(n: int) -> RadialProfile:
    return RadialProfile(n, coefficients=[0.0])


def from_poly(coefficients: Sequence[float], n: int) -> RadialProfile:
    return RadialProfile(n, coefficients=coefficients)


def from_grid(g: GridFunction, n: int) -> RadialProfile:
    if g.sqrt_singular_origin:
        raise InvalidInputError("h'' samples cannot carry an inverse-sqrt weight")
    return RadialProfile(n, knots=g.nodes, samples=g.values)


def from_table(path: Union[str, Path], n: int) -> RadialProfile:
    """Read h'' from a CSV with columns t, hpp"""
    try:
        table = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise InvalidInputError(f"Cannot read h'' table {path}: {e}") from e
    missing = {"t", "hpp"} - set(table.columns)
    if missing:
        raise InvalidInputError(f"h'' table {path} is missing columns {sorted(missing)}")
    table = table.sort_values("t")
    return RadialProfile(n, knots=table["t"].to_numpy(), samples=table["hpp"].to_numpy())


def _interior(prof: RadialProfile, x, complement=None):
    """Validated (x, t, 1 - t) for points of the open simplex"""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and prof.n == 1:
        x = x.reshape(1)
    if x.shape[-1:] != (prof.n,):
        raise InvalidInputError(f"Point has dimension {x.shape[-1:]} but the profile has n = {prof.n}")
    t = x.sum(axis=-1)
    rest = 1.0 - t if complement is None else np.asarray(complement, dtype=float)
    if np.any(x <= 0.0) or np.any(rest <= 0.0):
        raise BoundaryError("Point is on or outside the boundary of the open simplex")
    if complement is not None:
        t = 1.0 - rest
    return x, t, rest


def _u(prof: RadialProfile, t, rest):
    return 1.0 / rest + prof.hpp(t)


def u_value(prof: RadialProfile, t):
    """U(t) = 1/(1 - t) + h''(t)"""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t >= 1.0):
        raise BoundaryError(f"U(t) needs 0 <= t < 1, got t in [{np.min(t):.6g}, {np.max(t):.6g}]")
    return _u(prof, t, 1.0 - t)


def hessian(prof: RadialProfile, x, complement=None) -> np.ndarray:
    """diag(1/x_i) + U(t) * ones((n, n)), batched over leading axes"""
    x, t, rest = _interior(prof, x, complement)
    U = _u(prof, t, rest)
    H = np.broadcast_to(U[..., None, None], x.shape + (prof.n,)).copy()
    idx = np.arange(prof.n)
    H[..., idx, idx] += 1.0 / x
    return H


def quadratic_form(prof: RadialProfile, alpha, x, complement=None):
    """alpha^t Hess(g) alpha = sum alpha_i^2 / x_i + U(t) (sum alpha_i)^2"""
    x, t, rest = _interior(prof, x, complement)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[-1:] != (prof.n,):
        raise InvalidInputError(f"alpha has length {alpha.shape[-1:]} but the profile has n = {prof.n}")
    total = alpha.sum(axis=-1)
    diagonal = (alpha * alpha / x).sum(axis=-1)
    # sum alpha = 0 keeps the rank-one term exactly zero
    return diagonal + _u(prof, t, rest) * (total * total)


def det_hessian(prof: RadialProfile, x, complement=None):
    """(1/(1 - t) + t h''(t)) / prod x_i"""
    x, t, rest = _interior(prof, x, complement)
    return (1.0 / rest + t * prof.hpp(t)) / np.prod(x, axis=-1)


def leading_minor(prof: RadialProfile, x, k: int):
    """k-th leading principal minor (1 + U(t) sum_{i<=k} x_i) / prod_{i<=k} x_i"""
    if not 1 <= k <= prof.n:
        raise InvalidInputError(f"Minor order must lie in [1, {prof.n}], got {k}")
    x, t, rest = _interior(prof, x)
    head = x[..., :k]
    return (1.0 + _u(prof, t, rest) * head.sum(axis=-1)) / np.prod(head, axis=-1)


def inverse_quadratic_form(prof: RadialProfile, xi, x, complement=None):
    """xi^t Hess(g)^{-1} xi by Sherman-Morrison: sum x xi^2 - U (sum x xi)^2 / (1 + U t)"""
    x, t, rest = _interior(prof, x, complement)
    xi = np.asarray(xi, dtype=float)
    U = _u(prof, t, rest)
    weighted = (x * xi).sum(axis=-1)
    return (x * xi * xi).sum(axis=-1) - U * weighted * weighted / (1.0 + U * t)


def v_value(prof: RadialProfile, mu):
    """V(mu) = sqrt(1/(1 - mu) + mu h''(mu))"""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0.0) or np.any(mu >= 1.0):
        raise BoundaryError(f"V(mu) needs 0 <= mu < 1, got mu in [{np.min(mu):.6g}, {np.max(mu):.6g}]")
    radicand = 1.0 / (1.0 - mu) + mu * prof.hpp(mu)
    if np.any(radicand <= 0.0):
        raise InvalidInputError(f"Negative radicand in V (min {np.min(radicand):.3g}); profile is invalid")
    return np.sqrt(radicand)


def regularized_v(prof: RadialProfile, mu):
    """W(mu) = sqrt(1 + mu (1 - mu) h''(mu)) = sqrt(1 - mu) V(mu), finite up to mu = 1"""
    mu = np.asarray(mu, dtype=float)
    radicand = 1.0 + mu * (1.0 - mu) * prof.hpp(mu)
    if np.any(radicand <= 0.0):
        raise InvalidInputError(f"Negative radicand in W (min {np.min(radicand):.3g}); profile is invalid")
    return np.sqrt(radicand)


def delta(prof: RadialProfile, t):
    """delta(t) = 1 / (1 + t (1 - t) h''(t)), so det Hess(g) = (delta prod l_i)^{-1}"""
    t = np.asarray(t, dtype=float)
    return 1.0 / (1.0 + t * (1.0 - t) * prof.hpp(t))


def potential(prof: RadialProfile, x):
    """g(x) = g_0(x) + h(sum x_i)"""
    x = np.asarray(x, dtype=float)
    return guillemin_potential(standard_simplex(prof.n), x) + prof.h(x.sum(axis=-1))


def recover_hpp_from_v(Vgrid: GridFunction) -> GridFunction:
    """
    h''(mu) = (V(mu)^2 - 1/(1 - mu)) / mu on the nodes of Vgrid.

    A node at mu = 0 is filled by quadratic extrapolation from the three nodes
    after it.
    """
    if Vgrid.sqrt_singular_origin:
        raise InvalidInputError("V samples cannot carry an inverse-sqrt weight")
    if Vgrid.lo < 0.0 or Vgrid.hi >= 1.0:
        raise InvalidInputError(f"V grid must lie in [0, 1), got [{Vgrid.lo}, {Vgrid.hi}]")
    V = Vgrid.values
    if np.any(V <= 0.0):
        bad = Vgrid.nodes[V <= 0.0]
        raise ReconstructionError(f"Recovered V is nonpositive at {bad.size} nodes (first at mu={bad[0]:.6g})")

    mu = Vgrid.nodes
    hpp = np.empty_like(V)
    positive = mu > 0.0
    hpp[positive] = (V[positive] ** 2 - 1.0 / (1.0 - mu[positive])) / mu[positive]
    if not positive[0]:
        if Vgrid.size < 4:
            raise InvalidInputError("Extrapolating h''(0) needs at least three positive nodes")
        hpp[0] = 3.0 * hpp[1] - 3.0 * hpp[2] + hpp[3]
        logger.debug(f"h''(0) extrapolated to {hpp[0]:.6g}")
    return Vgrid.with_values(hpp)


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    min_determinant_factor: float
    argmin_t: float
    failed_minor_checks: int
    message: str

    def __bool__(self) -> bool:
        return self.valid


def is_valid(prof: RadialProfile, samples: int = VALIDITY_SAMPLES, spot_checks: int = SPOT_CHECKS,
             seed: int = 0) -> ValidityReport:
    """
    1 + t (1 - t) h''(t) > 0 on a uniform grid of [0, 1], plus positivity of all
    leading principal minors at seeded random interior points.
    """
    t = np.linspace(0.0, 1.0, samples)
    hpp = prof.hpp(t)
    if not np.all(np.isfinite(hpp)):
        return ValidityReport(False, float("nan"), float("nan"), 0, "h'' is not finite on [0, 1]")
    factor = 1.0 + t * (1.0 - t) * hpp
    i = int(np.argmin(factor))
    min_factor, argmin = float(factor[i]), float(t[i])

    rng = np.random.default_rng(seed)
    # convex combinations of the simplex vertices, vertex 0 first
    bary = rng.dirichlet(np.ones(prof.n + 1), size=spot_checks)
    x = bary @ simplex_vertices(prof.n)
    x = x[np.all(x > 0.0, axis=1) & (bary[:, 0] > 0.0)]
    failed = 0
    if min_factor > 0.0 and x.size:
        minors = np.stack([leading_minor(prof, x, k) for k in range(1, prof.n + 1)], axis=1)
        failed = int(np.sum(np.any(minors <= 0.0, axis=1)))

    valid = min_factor > 0.0 and failed == 0
    if valid:
        message = f"valid: min 1 + t(1-t)h'' = {min_factor:.6g} at t = {argmin:.4f}"
    elif min_factor <= 0.0:
        message = f"invalid: 1 + t(1-t)h''(t) = {min_factor:.6g} <= 0 at t = {argmin:.4f}"
    else:
        message = f"invalid: {failed} of {x.shape[0]} interior points have a nonpositive leading minor"
    return ValidityReport(valid, min_factor, argmin, failed, message)
