"""
Numerics for toric-spectral
Uniform grid functions, bump test functions, quadrature with 1/sqrt endpoint
singularities, simplex and box integration, and seeded Monte Carlo.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from numpy.polynomial.legendre import leggauss
from scipy import integrate as sp_integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma

from core.errors import InvalidInputError, QuadratureError

logger = logging.getLogger(__name__)

# Gauss-Legendre points per panel of every composite rule
GL_ORDER = 4
SINGULAR_ENDS = ("none", "left", "right", "both")
SIMPLEX_SCHEMES = ("tensor_duffy", "monte_carlo")
MIN_POINTS_PER_AXIS = 8
# upper bound on points evaluated per vectorized call of a tensor rule
_CHUNK_POINTS = 1 << 18

ScalarFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Function sampled at uniform nodes of [lo, hi].

    With sqrt_singular_origin the samples hold the regular factor W and the
    function itself is W(x)/sqrt(x - lo).
    """
    lo: float
    hi: float
    values: np.ndarray
    sqrt_singular_origin: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise InvalidInputError(f"GridFunction needs a 1-D array of at least 2 values, got shape {values.shape}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise InvalidInputError(f"GridFunction interval must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("GridFunction values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, f: ScalarFunction, lo: float, hi: float, size: int,
                      sqrt_singular_origin: bool = False) -> "GridFunction":
        nodes = np.linspace(lo, hi, size)
        return cls(lo, hi, np.asarray(f(nodes), dtype=float) * np.ones(size), sqrt_singular_origin)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.size - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.size)

    def with_values(self, values: np.ndarray, sqrt_singular_origin: Optional[bool] = None) -> "GridFunction":
        """Same grid, new samples"""
        flag = self.sqrt_singular_origin if sqrt_singular_origin is None else sqrt_singular_origin
        return GridFunction(self.lo, self.hi, values, flag)

    def scaled(self, factor: float) -> "GridFunction":
        return self.with_values(factor * self.values)

    def interpolant(self, kind: str = "linear", fill_value: float = 0.0) -> ScalarFunction:
        """
        Callable evaluating the grid function off the nodes.

        kind is "linear" or "pchip" (monotone cubic). Points outside [lo, hi]
        get fill_value.
        """
        nodes = self.nodes
        if kind == "linear":
            def regular(x):
                return np.interp(x, nodes, self.values)
        elif kind == "pchip":
            regular = PchipInterpolator(nodes, self.values, extrapolate=False)
        else:
            raise InvalidInputError(f"Unknown interpolation kind: {kind!r}")

        def evaluate(x):
            x = np.asarray(x, dtype=float)
            inside = (x >= self.lo) & (x <= self.hi)
            out = np.full(x.shape, fill_value, dtype=float)
            xi = x[inside]
            vals = regular(xi)
            if self.sqrt_singular_origin:
                with np.errstate(divide="ignore"):
                    vals = vals / np.sqrt(xi - self.lo)
            out[inside] = vals
            return out

        return evaluate

    def __call__(self, x):
        return self.interpolant("linear")(x)


@lru_cache(maxsize=1)
def _bump_template_mass() -> float:
    value, _ = sp_integrate.quad(lambda z: math.exp(1.0 - 1.0 / (1.0 - z * z)), -1.0, 1.0,
                                 epsabs=1e-15, epsrel=1e-13)
    return value


@dataclass(frozen=True)
class BumpFunction:
    """Standard exponential bump exp(1 - 1/(1 - z^2)), z = (t - center)/half_width"""
    center: float
    half_width: float

    def __post_init__(self):
        if not (math.isfinite(self.center) and math.isfinite(self.half_width)):
            raise InvalidInputError(f"Bump parameters must be finite: c={self.center}, w={self.half_width}")
        if self.half_width <= 0:
            raise InvalidInputError(f"Bump half width must be positive, got {self.half_width}")

    @property
    def support(self) -> Tuple[float, float]:
        return (self.center - self.half_width, self.center + self.half_width)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        z = (t - self.center) / self.half_width
        inside = np.abs(z) < 1.0
        out = np.zeros(t.shape, dtype=float)
        zi = z[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - zi * zi))
        return out

    def mass(self) -> float:
        """Integral of the bump over the real line"""
        return self.half_width * _bump_template_mass()

    def weighted_mass(self, power: float) -> float:
        """Integral of rho(t) t**power over the support (support must lie in t > 0)"""
        lo, hi = self.support
        if lo <= 0:
            raise InvalidInputError(f"weighted_mass needs support in t > 0, got [{lo}, {hi}]")
        value, _ = sp_integrate.quad(lambda t: float(self(t)) * t ** power, lo, hi,
                                     epsabs=0.0, epsrel=1e-12, limit=200)
        return value


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights on [a, b] with exact distances to both endpoints"""
    nodes: np.ndarray
    weights: np.ndarray
    left_gap: np.ndarray
    right_gap: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size


def _gauss_panels(a: float, b: float, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(GL_ORDER)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _sqrt_substituted(length: float, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gaps g = v^2 and weights 2 v dv for a 1/sqrt singularity at gap 0"""
    v, wv = _gauss_panels(0.0, math.sqrt(length), panels)
    return v * v, 2.0 * v * wv


def singular_rule(a: float, b: float, singular_end: str = "none", N: int = 64) -> QuadratureRule:
    """
    Composite Gauss-Legendre rule on [a, b] after removing 1/sqrt endpoint blow-up.

    A left singularity uses mu = a + u^2, a right one mu = b - u^2; "both" splits
    at the midpoint and substitutes on each half.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
        raise InvalidInputError(f"Quadrature interval must satisfy a < b, got [{a}, {b}]")
    if singular_end not in SINGULAR_ENDS:
        raise InvalidInputError(f"singular_end must be one of {SINGULAR_ENDS}, got {singular_end!r}")
    if N < 1:
        raise InvalidInputError(f"Number of panels must be positive, got {N}")

    length = b - a
    if singular_end == "none":
        nodes, weights = _gauss_panels(a, b, N)
        return QuadratureRule(nodes, weights, nodes - a, b - nodes)
    if singular_end == "left":
        gap, weights = _sqrt_substituted(length, N)
        return QuadratureRule(a + gap, weights, gap, length - gap)
    if singular_end == "right":
        gap, weights = _sqrt_substituted(length, N)
        return QuadratureRule(b - gap, weights, length - gap, gap)

    half_panels = max(1, N // 2)
    gap, weights = _sqrt_substituted(0.5 * length, half_panels)
    return QuadratureRule(
        nodes=np.concatenate([a + gap, b - gap[::-1]]),
        weights=np.concatenate([weights, weights[::-1]]),
        left_gap=np.concatenate([gap, length - gap[::-1]]),
        right_gap=np.concatenate([length - gap, gap[::-1]]),
    )


def integrate_singular(f: ScalarFunction, a: float, b: float, singular_end: str = "none",
                       N: int = 64) -> float:
    """Integral of f over [a, b], f allowed a 1/sqrt blow-up at the flagged end(s)"""
    rule = singular_rule(a, b, singular_end, N)
    values = np.asarray(f(rule.nodes), dtype=float) * np.ones(rule.size)
    if not np.all(np.isfinite(values)):
        raise QuadratureError(f"Non-finite integrand on [{a}, {b}] (singular_end={singular_end})")
    return float(np.dot(rule.weights, values))


def integrate_box(f: ScalarFunction, bounds: Sequence[Tuple[float, float]], N: int = 64) -> float:
    """Tensor Gauss-Legendre rule with N panels per axis; f maps (m, d) points to (m,)"""
    if N < 1:
        raise InvalidInputError(f"Number of panels must be positive, got {N}")
    rules = [singular_rule(lo, hi, "none", N) for lo, hi in bounds]
    return _tensor_sum(f, [r.nodes for r in rules], [r.weights for r in rules])


def _tensor_sum(f: ScalarFunction, axes: Sequence[np.ndarray], weights: Sequence[np.ndarray],
                transform: Optional[Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]] = None) -> float:
    """
    Sum of w * f over the tensor grid, chunked along the first axis.

    transform maps tensor points to (integration points, jacobian).
    """
    trailing_pts = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, len(axes) - 1) \
        if len(axes) > 1 else np.zeros((1, 0))
    trailing_w = np.ones(1)
    for w in weights[1:]:
        trailing_w = np.multiply.outer(trailing_w, w).ravel()

    chunk = max(1, _CHUNK_POINTS // trailing_w.size)
    first, first_w = axes[0], weights[0]
    total = 0.0
    for start in range(0, first.size, chunk):
        head = first[start:start + chunk]
        pts = np.concatenate([
            np.repeat(head, trailing_w.size)[:, None],
            np.tile(trailing_pts, (head.size, 1)),
        ], axis=1)
        w = np.multiply.outer(first_w[start:start + chunk], trailing_w).ravel()
        if transform is not None:
            pts, jac = transform(pts)
            w = w * jac
        values = np.asarray(f(pts), dtype=float)
        if not np.all(np.isfinite(values)):
            raise QuadratureError("Non-finite integrand encountered in tensor quadrature")
        total += float(np.dot(w, values))
    return total


def _indexed_stick_breaking(n: int, rule: QuadratureRule, barycentric: bool = False):
    """Cube -> simplex map x_k = u_k prod_{j<k}(1 - u_j), driven by node indices so 1 - u stays exact"""
    def transform(idx: np.ndarray):
        k = idx.astype(np.intp)
        u = rule.nodes[k]
        cu = rule.right_gap[k]
        remaining = np.cumprod(cu, axis=1)
        previous = np.concatenate([np.ones((k.shape[0], 1)), remaining[:, :-1]], axis=1)
        x = previous * u
        if barycentric:
            x = np.concatenate([x, remaining[:, -1:]], axis=1)
        return x, np.prod(previous, axis=1)
    return transform


def _duffy_estimate(f: ScalarFunction, n: int, panels: int, barycentric: bool = False) -> float:
    rule = singular_rule(0.0, 1.0, "both", panels)
    axes = [np.arange(rule.size, dtype=float)] * n
    transform_nodes = _indexed_stick_breaking(n, rule, barycentric)
    return _tensor_sum(f, axes, [rule.weights] * n, transform_nodes)


def dirichlet_half_mass(n: int) -> float:
    """Integral of prod x_i^{-1/2} (1 - sum x)^{-1/2} over the n-simplex"""
    return math.pi ** ((n + 1) / 2) / gamma((n + 1) / 2)


def integrate_simplex(f: ScalarFunction, n: int, scheme: str = "tensor_duffy", budget: int = 256,
                      seed: int = 0, batch_size: int = 1 << 20, workers: int = 1,
                      barycentric: bool = False) -> Tuple[float, float]:
    """
    Integral of f over the open standard n-simplex, with an error proxy.

    f maps (m, n) points to (m,) and may blow up like prod x_i^{-1/2} (1-t)^{-1/2}
    at the boundary. tensor_duffy: budget = panels per axis (4 points each), the
    error proxy is the difference to half the panels. monte_carlo: budget =
    samples drawn from Dirichlet(1/2, ..., 1/2), the error proxy is the standard
    error.

    With barycentric=True f receives (m, n + 1) points whose last column is the
    exact complement 1 - sum x, which rounding would lose near the far facet.
    """
    if n < 1:
        raise InvalidInputError(f"Simplex dimension must be positive, got {n}")
    if scheme not in SIMPLEX_SCHEMES:
        raise InvalidInputError(f"Unknown simplex scheme {scheme!r}; expected one of {SIMPLEX_SCHEMES}")

    if scheme == "tensor_duffy":
        if GL_ORDER * budget < MIN_POINTS_PER_AXIS:
            raise InvalidInputError(
                f"Quadrature budget too small: {GL_ORDER * budget} points per axis (< {MIN_POINTS_PER_AXIS})")
        estimate = _duffy_estimate(f, n, budget, barycentric)
        coarse_panels = budget // 2
        if GL_ORDER * coarse_panels >= MIN_POINTS_PER_AXIS:
            error = abs(estimate - _duffy_estimate(f, n, coarse_panels, barycentric))
        else:
            error = math.inf
        logger.debug(f"tensor_duffy n={n} panels={budget}: {estimate:.12g} ± {error:.2e}")
        return estimate, error

    if budget < MIN_POINTS_PER_AXIS:
        raise InvalidInputError(f"Monte Carlo budget too small: {budget} samples")
    mass = dirichlet_half_mass(n)
    shape = np.full(n + 1, 0.5)

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        g = rng.dirichlet(shape, size=size)
        # f / density, density = prod g^{-1/2} / mass
        return mass * np.asarray(f(g if barycentric else g[:, :n]), dtype=float) * np.sqrt(np.prod(g, axis=1))

    mean, stderr = _batched_mean(draw, budget, seed, batch_size, workers)
    logger.debug(f"monte_carlo n={n} samples={budget}: {mean:.12g} ± {stderr:.2e}")
    return mean, stderr


def _batched_mean(draw: Callable[[np.random.Generator, int], np.ndarray], samples: int, seed: int,
                  batch_size: int, workers: int) -> Tuple[float, float]:
    """
    Mean and standard error of draw() over `samples` draws.

    Each batch owns a Philox stream spawned from the seed, so results do not
    depend on `workers`; batch statistics are merged in index order.
    """
    if batch_size < 1:
        raise InvalidInputError(f"batch_size must be positive, got {batch_size}")
    sizes = [batch_size] * (samples // batch_size)
    if samples % batch_size:
        sizes.append(samples % batch_size)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(job):
        size, stream = job
        values = np.asarray(draw(np.random.Generator(np.random.Philox(stream)), size), dtype=float)
        if not np.all(np.isfinite(values)):
            raise QuadratureError("Non-finite Monte Carlo sample encountered")
        mean = float(np.mean(values))
        return size, mean, float(np.sum((values - mean) ** 2))

    jobs = list(zip(sizes, streams))
    if workers > 1:
        stats = Parallel(n_jobs=workers, prefer="threads")(delayed(run)(job) for job in jobs)
    else:
        stats = [run(job) for job in jobs]

    count, mean, m2 = 0, 0.0, 0.0
    for size, batch_mean, batch_m2 in stats:
        delta = batch_mean - mean
        total = count + size
        mean += delta * size / total
        m2 += batch_m2 + delta * delta * count * size / total
        count = total
    stderr = math.sqrt(m2 / (count - 1) / count) if count > 1 else math.inf
    return mean, stderr


def monte_carlo_box(f: ScalarFunction, bounds: Sequence[Tuple[float, float]], samples: int, seed: int,
                    batch_size: int = 1 << 20, workers: int = 1) -> Tuple[float, float]:
    """Uniform Monte Carlo estimate of the integral of f over a box, with its standard error"""
    if samples <= 0:
        raise InvalidInputError(f"Number of samples must be positive, got {samples}")
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if lo.size == 0 or np.any(hi <= lo):
        raise InvalidInputError(f"Invalid Monte Carlo box: {list(bounds)}")
    volume = float(np.prod(hi - lo))

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(f(lo + (hi - lo) * rng.random((size, lo.size))), dtype=float)

    mean, stderr = _batched_mean(draw, samples, seed, batch_size, workers)
    return volume * mean, volume * stderr


def differentiate(g: GridFunction) -> GridFunction:
    """Second-order derivative: central differences inside, one-sided at the ends"""
    if g.size < 3:
        raise InvalidInputError(f"differentiate needs at least 3 nodes, got {g.size}")
    if g.sqrt_singular_origin:
        raise InvalidInputError("differentiate does not accept inverse-sqrt weighted grids")
    return g.with_values(np.gradient(g.values, g.step, edge_order=2))
