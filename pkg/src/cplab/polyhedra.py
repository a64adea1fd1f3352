"""Convex polyhedra cut out by finitely many closed halfspaces <x, t_j> <= b_j."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import DiscreteDistribution
from .errors import InvalidInputError

NORM_TOL = 1e-12


def _unit_rows(directions, normalize: bool):
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if dirs.ndim != 2 or dirs.shape[0] == 0 or dirs.shape[1] == 0:
        raise InvalidInputError("need at least one direction of positive dimension")
    if not np.all(np.isfinite(dirs)):
        raise InvalidInputError("non-finite direction component")
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(norms == 0):
        raise InvalidInputError("zero-norm direction")
    if normalize:
        return dirs / norms[:, None], norms
    if np.any(np.abs(norms - 1.0) > NORM_TOL):
        raise InvalidInputError("directions must have unit Euclidean norm")
    return dirs, norms


def project_values(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Inner products <x_i, t_j> as an (N, m) array.

    Every entry is reduced from its own row pair, so the value for a given
    point does not depend on which other points are in the batch.  Membership
    tests and threshold candidates therefore always agree bit for bit.
    """
    points = np.atleast_2d(points)
    n, d = points.shape
    out = np.empty((n, len(directions)))
    step = max(1, 4_000_000 // max(1, d * len(directions)))
    for s in range(0, n, step):
        out[s:s + step] = (points[s:s + step, None, :] * directions[None, :, :]).sum(axis=2)
    return out


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """m unit vectors t_1..t_m in R^d (the family P(t_1, ..., t_m))."""

    directions: np.ndarray

    def __post_init__(self):
        dirs, _ = _unit_rows(self.directions, normalize=False)
        dirs = dirs.copy()
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    @classmethod
    def from_raw(cls, directions) -> "DirectionSet":
        dirs, _ = _unit_rows(directions, normalize=True)
        return cls(dirs)

    @classmethod
    def axes(cls, dim: int) -> "DirectionSet":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def m(self) -> int:
        return self.directions.shape[0]


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """{x : <x, t_j> <= b_j, j = 1..m} with unit t_j and b_j in R or +inf."""

    directions: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        dirs, _ = _unit_rows(self.directions, normalize=False)
        b = np.asarray(self.thresholds, dtype=float).reshape(-1)
        if len(b) != len(dirs):
            raise InvalidInputError("one threshold per direction is required")
        if np.any(np.isnan(b)) or np.any(b == -np.inf):
            raise InvalidInputError("thresholds must be real or +inf")
        dirs = dirs.copy()
        for name, val in (("directions", dirs), ("thresholds", b)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def from_raw(cls, directions, thresholds) -> "Polyhedron":
        """Normalize arbitrary non-zero normals, rescaling thresholds to match."""
        dirs, norms = _unit_rows(directions, normalize=True)
        b = np.asarray(thresholds, dtype=float).reshape(-1)
        return cls(dirs, b / norms)

    @classmethod
    def orthant(cls, corner) -> "Polyhedron":
        """The lower orthant {x <= corner} of the distribution-function definition."""
        corner = np.asarray(corner, dtype=float).reshape(-1)
        return cls(np.eye(len(corner)), corner)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    def direction_set(self) -> DirectionSet:
        return DirectionSet(self.directions)

    def padded(self, m: int) -> "Polyhedron":
        """Same set described with m halfspaces (extra ones have b = +inf)."""
        if m < self.m:
            raise InvalidInputError("cannot pad to fewer halfspaces")
        extra = m - self.m
        dirs = np.concatenate([self.directions, np.repeat(self.directions[:1], extra, 0)])
        b = np.concatenate([self.thresholds, np.full(extra, np.inf)])
        return Polyhedron(dirs, b)


def _check_dims(P: Polyhedron, dim: int) -> None:
    if P.dim != dim:
        raise InvalidInputError(f"polyhedron lives in R^{P.dim}, point/law in R^{dim}")


def contains_points(P: Polyhedron, points: np.ndarray) -> np.ndarray:
    _check_dims(P, points.shape[1])
    return np.all(project_values(points, P.directions) <= P.thresholds, axis=1)


def contains(P: Polyhedron, x) -> bool:
    pt = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    return bool(contains_points(P, pt)[0])


def measure(F: DiscreteDistribution, P: Polyhedron) -> float:
    """F{P}, the total mass of atoms inside the closed polyhedron."""
    return float(F.masses[contains_points(P, F.points)].sum())
