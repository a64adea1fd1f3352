"""Reduction of halfspace questions to the span of the normals.

For P = {<x, t_j> <= b_j} and the orthogonal projector onto
L = span{t_1, ..., t_m}, <proj x, t_j> = <x, t_j>, so P{x in P} equals the
probability that proj x lies in the polyhedron with the same normals inside L.
Working in coordinates of an orthonormal basis of L turns any ambient
dimension into k = dim L <= m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import DiscreteDistribution
from .errors import InvalidInputError
from .polyhedra import DirectionSet, Polyhedron

SPAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    """Orthonormal rows spanning span{t_j} inside R^original_dim."""

    original_dim: int
    basis: np.ndarray

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    def coordinates(self, vectors: np.ndarray) -> np.ndarray:
        return np.atleast_2d(vectors) @ self.basis.T


def orthonormal_basis(T, rank_tol: float = 1e-10) -> ProjectionBasis:
    """Modified Gram-Schmidt (two passes) over the directions of T.

    Vectors whose residual norm falls to ``rank_tol`` or below are dropped, so
    ``k`` is the numerical rank.
    """
    dirs = T.directions if isinstance(T, (DirectionSet, Polyhedron)) else np.atleast_2d(
        np.asarray(T, dtype=float))
    if len(dirs) == 0:
        raise InvalidInputError("need at least one direction")
    basis = []
    for v in dirs:
        r = np.array(v, dtype=float)
        for _ in range(2):
            for q in basis:
                r = r - (q @ r) * q
        nrm = np.linalg.norm(r)
        if nrm > rank_tol:
            basis.append(r / nrm)
    if not basis:
        raise InvalidInputError("directions span the zero subspace")
    B = np.array(basis)
    B.setflags(write=False)
    return ProjectionBasis(dirs.shape[1], B)


def project_distribution(F: DiscreteDistribution, B: ProjectionBasis) -> DiscreteDistribution:
    """Law of the basis coordinates of the projected vector (atoms may merge)."""
    if F.dim != B.original_dim:
        raise InvalidInputError(f"law in R^{F.dim}, basis for R^{B.original_dim}")
    return F.pushforward(B.coordinates(F.points))


def project_polyhedron(P: Polyhedron, B: ProjectionBasis) -> Polyhedron:
    """Rewrite each halfspace in basis coordinates; thresholds unchanged."""
    if P.dim != B.original_dim:
        raise InvalidInputError(f"polyhedron in R^{P.dim}, basis for R^{B.original_dim}")
    coords = B.coordinates(P.directions)
    residual = np.linalg.norm(P.directions - coords @ B.basis, axis=1)
    if np.any(residual > SPAN_TOL):
        raise InvalidInputError("a polyhedron normal lies outside the span of the basis")
    return Polyhedron(coords, P.thresholds)
