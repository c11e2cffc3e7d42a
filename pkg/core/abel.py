"""
Half-order fractional integral J and its inverse
Left: J(f)(x) = int_lo^x f(v) / sqrt(x - v) dv.  Right: J_R(f)(x) = int_x^hi f(v) / sqrt(v - x) dv.
Transforms use product integration: data are piecewise linear between nodes and
every cell integral against the kernel is done in closed form.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import gamma

from core.errors import InvalidInputError, QuadratureError
from utils.numerics import GridFunction, differentiate

logger = logging.getLogger(__name__)

MIN_ABEL_NODES = 8


class AbelKernelSide(str, Enum):
    LEFT = "left"
    RIGHT = "right"


SideLike = Union[AbelKernelSide, str]


def _side(side: SideLike) -> AbelKernelSide:
    try:
        return AbelKernelSide(side)
    except ValueError as e:
        raise InvalidInputError(f"Abel side must be 'left' or 'right', got {side!r}") from e


def _require_nodes(g: GridFunction):
    if g.size < MIN_ABEL_NODES:
        raise InvalidInputError(f"Grid too coarse for the Abel transform: {g.size} nodes (< {MIN_ABEL_NODES})")


def _product_weights(size: int, h: float):
    """
    Cell integrals for offsets m = 1..size: A_m of the kernel and B_m of the
    rising hat against it, both for cell [x - m h, x - (m - 1) h].
    """
    m = np.arange(1, size + 1, dtype=float)
    a = np.sqrt(m - 1.0)
    b = np.sqrt(m)
    d = 1.0 / (a + b)
    root_h = math.sqrt(h)
    A = 2.0 * root_h * d
    B = (2.0 / 3.0) * root_h * d * (1.0 + m / (m + a * b))
    return A, B


def _left_transform(values: np.ndarray, h: float) -> np.ndarray:
    N = values.size
    A, B = _product_weights(N, h)
    # kernel K[d]: weight of f_{i-d} in J_i
    K = np.empty(N)
    K[0] = B[0]
    K[1:] = (A[:-1] - B[:-1]) + B[1:]
    J = np.convolve(values, K)[:N]
    J -= values[0] * B
    J[0] = 0.0
    return J


def _weighted_left_transform(g: GridFunction) -> np.ndarray:
    """J of W(v)/sqrt(v - lo) with W piecewise linear: arcsine product weights"""
    W = g.values
    h = g.step
    offsets = np.arange(g.size) * h
    J = np.empty(g.size)
    J[0] = math.pi * W[0]
    for i in range(1, g.size):
        x = offsets[i]
        v = offsets[:i + 1]
        left = np.sqrt(v)
        right = np.sqrt(np.maximum(x - v, 0.0))
        theta = np.arctan2(left, right)
        chord = left * right
        I0 = 2.0 * np.diff(theta)
        I1 = x * np.diff(theta) - np.diff(chord)
        slope = (I1 - v[:-1] * I0) / h
        J[i] = np.dot(W[:i], I0 - slope) + np.dot(W[1:i + 1], slope)
    return J


def abel_forward(f: GridFunction, side: SideLike = AbelKernelSide.LEFT) -> GridFunction:
    """J(f) (or J_R(f)) on the grid of f"""
    side = _side(side)
    _require_nodes(f)
    if f.sqrt_singular_origin:
        if side is AbelKernelSide.RIGHT:
            raise InvalidInputError("The right-sided transform does not accept an inverse-sqrt origin weight")
        J = _weighted_left_transform(f)
    elif side is AbelKernelSide.LEFT:
        J = _left_transform(f.values, f.step)
    else:
        if abs(f.values[-1]) > 1e-12 * max(1.0, float(np.max(np.abs(f.values)))):
            logger.debug(f"Right-sided transform truncated at {f.hi}: f(hi) = {f.values[-1]:.3g}")
        J = _left_transform(f.values[::-1], f.step)[::-1]
    if not np.all(np.isfinite(J)):
        raise QuadratureError(f"Abel transform ({side.value}) produced non-finite values")
    return f.with_values(J, sqrt_singular_origin=False)


def abel_iterate(f: GridFunction, k: int, side: SideLike = AbelKernelSide.LEFT) -> GridFunction:
    """J applied k times; k = 0 is the identity"""
    if k < 0:
        raise InvalidInputError(f"Number of Abel iterations must be nonnegative, got {k}")
    for _ in range(k):
        f = abel_forward(f, side)
    return f


def binomial_smooth(g: GridFunction) -> GridFunction:
    """3-point binomial filter (1, 2, 1)/4 on interior nodes; end values are kept"""
    values = g.values.copy()
    values[1:-1] = 0.25 * (g.values[:-2] + 2.0 * g.values[1:-1] + g.values[2:])
    return g.with_values(values)


def abel_inverse(g: GridFunction, side: SideLike = AbelKernelSide.LEFT, smooth: bool = False) -> GridFunction:
    """
    Solve J(f) = g: f = (1/pi) d/dx J(g) on the left, f = -(1/pi) d/dx J_R(g) on the right.

    J(J(f)) = pi * int f is what fixes the 1/pi.
    """
    side = _side(side)
    _require_nodes(g)
    if smooth:
        g = binomial_smooth(g)
    sign = 1.0 if side is AbelKernelSide.LEFT else -1.0
    derivative = differentiate(abel_forward(g, side))
    return derivative.scaled(sign / math.pi)


def running_integral(f: GridFunction) -> GridFunction:
    """x -> int_lo^x f by the cumulative trapezoid rule"""
    if f.sqrt_singular_origin:
        raise InvalidInputError("running_integral does not accept inverse-sqrt weighted grids")
    return f.with_values(cumulative_trapezoid(f.values, dx=f.step, initial=0.0))


def baseline_iterate(k: int, s):
    """J^k(s^{-1/2})(s) = Gamma(1/2)^{k+1} / Gamma((k+1)/2) * s^{(k-1)/2}"""
    if k < 0:
        raise InvalidInputError(f"Number of Abel iterations must be nonnegative, got {k}")
    s = np.asarray(s, dtype=float)
    return math.sqrt(math.pi) ** (k + 1) / gamma((k + 1) / 2.0) * s ** ((k - 1) / 2.0)
