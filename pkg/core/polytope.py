"""
Delzant polytopes for toric-spectral
Facet data {x : <x, u_i> - lambda_i >= 0}, facet functions, the Guillemin potential
and the standard simplex (moment polytope of CP^n).
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.errors import BoundaryError, InvalidInputError

logger = logging.getLogger(__name__)

# facet values at or below this count as zero in l log l
ZERO_LOG_THRESHOLD = 1e-300


@dataclass(frozen=True, eq=False)
class DelzantPolytope:
    """
    Polytope given by facet normals u_i (rows of `normals`) and offsets lambda_i.

    Boundedness and the Delzant condition are not verified for arbitrary data.
    """
    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        normals = np.array(self.normals, dtype=float)
        offsets = np.array(self.offsets, dtype=float)
        if normals.ndim != 2 or normals.shape[0] == 0:
            raise InvalidInputError(f"Facet normals must form a nonempty (d, n) array, got shape {normals.shape}")
        if offsets.shape != (normals.shape[0],):
            raise InvalidInputError(f"Expected {normals.shape[0]} offsets, got shape {offsets.shape}")
        if np.any(np.all(normals == 0.0, axis=1)):
            raise InvalidInputError("Facet normals must be nonzero")
        normals.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dimension(self) -> int:
        return self.normals.shape[1]

    @property
    def facet_count(self) -> int:
        return self.normals.shape[0]


def standard_simplex(n: int) -> DelzantPolytope:
    """Facets l_i = x_i (i = 1..n) and l_{n+1} = 1 - sum x_i"""
    if int(n) != n or n < 1:
        raise InvalidInputError(f"Simplex dimension must be a positive integer, got {n}")
    n = int(n)
    normals = np.vstack([np.eye(n), -np.ones((1, n))])
    offsets = np.concatenate([np.zeros(n), [-1.0]])
    return DelzantPolytope(normals, offsets)


def simplex_vertices(n: int) -> np.ndarray:
    """Vertices 0, e_1, ..., e_n of the standard simplex"""
    return np.vstack([np.zeros((1, n)), np.eye(n)])


def facet_values(P: DelzantPolytope, x) -> np.ndarray:
    """(l_1(x), ..., l_d(x)); x may carry leading batch axes"""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and P.dimension == 1:
        x = x.reshape(1)
    if x.shape[-1:] != (P.dimension,):
        raise InvalidInputError(f"Point has dimension {x.shape[-1:]} but the polytope has dimension {P.dimension}")
    return x @ P.normals.T - P.offsets


def is_interior(P: DelzantPolytope, x) -> bool:
    return bool(np.all(facet_values(P, x) > 0.0))


def guillemin_potential(P: DelzantPolytope, x):
    """
    g_0(x) = sum_i l_i log l_i - l_i on the closed polytope, with 0 log 0 = 0.
    """
    values = facet_values(P, x)
    if np.any(values < 0.0):
        raise BoundaryError(f"Point lies outside the closed polytope (min facet value {values.min():.3g})")
    on_boundary = values <= ZERO_LOG_THRESHOLD
    safe = np.where(on_boundary, 1.0, values)
    terms = np.where(on_boundary, 0.0, values * np.log(safe)) - values
    return terms.sum(axis=-1)
