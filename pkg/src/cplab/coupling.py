"""Couplings of two integer laws and the transportation problem behind the
random-sum bounds.

The bound for random sums is an infimum of E cost(mu, nu) over all joint laws
of (mu, nu) with prescribed marginals.  The objective is linear in the joint
masses and the feasible set is a transportation polytope, so the infimum is a
linear program; it is solved exactly with the HiGHS simplex in scipy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import InvalidInputError, ResourceLimitError
from .models import IntegerPmf

DEFAULT_CAP = (200, 200)
MARGINAL_TOL = 1e-9

SYMMETRIC = "symmetric"
PLUS = "plus"


@dataclass(frozen=True)
class CouplingBoundSpec:
    """Cost integrand of the random-sum bound.

    ``symmetric`` (any symmetric F):  min{c_m / sqrt(l + 1) + c(m) |k - l| / (l + 1), 1}
    ``plus`` (non-negative char. fn): min{c(m) |k - l| / (l + 1), 1}

    The constants are not known explicitly; they are user parameters.
    """

    bound_type: str = PLUS
    const_cm: float = 1.0
    const_c_m: float = 1.0

    def __post_init__(self):
        if self.bound_type not in (SYMMETRIC, PLUS):
            raise InvalidInputError(f"bound_type must be {SYMMETRIC!r} or {PLUS!r}")
        if not (self.const_cm > 0 and self.const_c_m > 0):
            raise InvalidInputError("bound constants must be positive")


def coupling_cost(k, l, spec: CouplingBoundSpec):
    """Cost of the pair (mu, nu) = (k, l); broadcasts over arrays."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    if np.any(k < 0) or np.any(l < 0):
        raise InvalidInputError("counts must be non-negative")
    gap = spec.const_c_m * np.abs(k - l) / (l + 1.0)
    if spec.bound_type == SYMMETRIC:
        gap = gap + spec.const_cm / np.sqrt(l + 1.0)
    out = np.minimum(gap, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Coupling:
    """Joint masses over ``rows`` (support of U) x ``cols`` (support of V)."""

    rows: np.ndarray
    cols: np.ndarray
    joint: np.ndarray

    def cost(self, spec: CouplingBoundSpec) -> float:
        C = coupling_cost(self.rows[:, None], self.cols[None, :], spec)
        return float((C * self.joint).sum())

    def marginal_error(self, U, V) -> float:
        u, v = _marginal(U), _marginal(V)
        return float(max(np.abs(self.joint.sum(axis=1) - u[self.rows]).max(),
                         np.abs(self.joint.sum(axis=0) - v[self.cols]).max()))


def _marginal(U) -> np.ndarray:
    if isinstance(U, IntegerPmf):
        return U.masses
    m = np.asarray(U, dtype=float).reshape(-1)
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise InvalidInputError("marginal masses must be finite and non-negative")
    return m


def _supports(U, V):
    u, v = _marginal(U), _marginal(V)
    if abs(u.sum() - v.sum()) > MARGINAL_TOL:
        raise InvalidInputError(
            f"marginals carry different total mass ({u.sum()!r} vs {v.sum()!r})")
    return u, v, np.flatnonzero(u > 0), np.flatnonzero(v > 0)


def optimal_coupling(U, V, spec: CouplingBoundSpec, *, cap=DEFAULT_CAP):
    """Minimize E cost(mu, nu) over couplings of U and V.

    Returns ``(coupling, value)``.
    """
    u, v, rows, cols = _supports(U, V)
    r, c = len(rows), len(cols)
    if r > cap[0] or c > cap[1]:
        raise ResourceLimitError(f"coupling of {r} x {c} support exceeds cap {cap}")
    C = coupling_cost(rows[:, None], cols[None, :], spec)
    if r == 1 or c == 1:
        joint = v[cols][None, :].copy() if r == 1 else u[rows][:, None].copy()
        coup = Coupling(rows, cols, joint)
        return coup, coup.cost(spec)
    # row sums for every row, column sums for all but the last (redundant) column
    ri = np.repeat(np.arange(r), c)
    ci = np.tile(np.arange(c), r)
    var = np.arange(r * c)
    keep = ci < c - 1
    A = sparse.csr_matrix(
        (np.ones(r * c + keep.sum()),
         (np.concatenate([ri, r + ci[keep]]), np.concatenate([var, var[keep]]))),
        shape=(r + c - 1, r * c))
    b = np.concatenate([u[rows], v[cols][:-1]])
    res = linprog(C.reshape(-1), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise InvalidInputError(f"transportation LP failed: {res.message}")
    joint = np.clip(res.x.reshape(r, c), 0.0, None)
    coup = Coupling(rows, cols, joint)
    return coup, coup.cost(spec)


def quantile_coupling(U, V) -> Coupling:
    """Comonotone coupling: match cumulative masses in increasing order."""
    u, v, rows, cols = _supports(U, V)
    cu = np.cumsum(u[rows])
    cv = np.cumsum(v[cols])
    cu[-1] = cv[-1] = max(cu[-1], cv[-1])
    cuts = np.unique(np.concatenate([[0.0], cu, cv]))
    width = np.diff(cuts)
    mid = cuts[:-1] + 0.5 * width
    i = np.minimum(np.searchsorted(cu, mid), len(rows) - 1)
    j = np.minimum(np.searchsorted(cv, mid), len(cols) - 1)
    joint = np.zeros((len(rows), len(cols)))
    np.add.at(joint, (i, j), width)
    return Coupling(rows, cols, joint)
