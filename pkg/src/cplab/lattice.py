"""Dense lattice representation with FFT convolution (dimensions 1 and 2).

Used where sparse convolution would be too slow: powers and compound Poisson
laws of lattice-valued distributions with large supports.  FFT round-off can
produce slightly negative masses; these are clipped to zero and the result is
renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.signal import fftconvolve

from .dist import DiscreteDistribution, _float_gcd, poisson_truncation
from .errors import InvalidInputError, ResourceLimitError

MAX_LATTICE_DIM = 2
DEFAULT_MAX_CELLS = 50_000_000


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    """Masses on the grid ``origin + spacing * index`` for a dense index array."""

    origin: np.ndarray
    spacing: np.ndarray
    masses: np.ndarray
    error_bound: float = 0.0

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(-1)
        spacing = np.asarray(self.spacing, dtype=float).reshape(-1)
        masses = np.asarray(self.masses, dtype=float)
        if masses.ndim != len(origin) or len(spacing) != len(origin):
            raise InvalidInputError("origin, spacing and mass array disagree on dimension")
        if masses.ndim == 0 or min(masses.shape) == 0:
            raise InvalidInputError("lattice extents must be positive")
        if np.any(spacing <= 0):
            raise InvalidInputError("lattice spacing must be positive")
        if np.any(masses < 0) or abs(masses.sum() - 1.0) > 1e-12:
            raise InvalidInputError("lattice masses must be non-negative and sum to 1")
        for name, val in (("origin", origin), ("spacing", spacing), ("masses", masses)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def dim(self) -> int:
        return self.masses.ndim


def _clean(arr: np.ndarray) -> np.ndarray:
    arr = np.where(arr > 0, arr, 0.0)
    return arr / arr.sum()


def to_lattice(F: DiscreteDistribution, spacing=None, *,
               max_cells: int = DEFAULT_MAX_CELLS) -> LatticeDistribution:
    """Embed F in a dense grid; spacing defaults to the per-axis lattice step."""
    if F.dim > MAX_LATTICE_DIM:
        raise InvalidInputError(f"lattice path supports dims <= {MAX_LATTICE_DIM}")
    origin = F.points.min(axis=0)
    offsets = F.points - origin
    if spacing is None:
        hs = []
        for j in range(F.dim):
            if np.all(offsets[:, j] == 0):
                hs.append(1.0)
                continue
            h = _float_gcd(offsets[:, j])
            if h is None:
                raise InvalidInputError(f"axis {j} is not lattice-valued")
            hs.append(h)
        spacing = np.array(hs)
    spacing = np.asarray(spacing, dtype=float).reshape(-1)
    idx_f = offsets / spacing
    idx = np.rint(idx_f).astype(np.int64)
    if np.any(np.abs(idx_f - idx) > 1e-6):
        raise InvalidInputError("support is not contained in the requested lattice")
    shape = tuple(int(v) + 1 for v in idx.max(axis=0))
    if np.prod(shape, dtype=float) > max_cells:
        raise ResourceLimitError(f"lattice of shape {shape} exceeds {max_cells} cells")
    masses = np.zeros(shape)
    np.add.at(masses, tuple(idx.T), F.masses)
    return LatticeDistribution(origin, spacing, masses, F.error_bound)


def from_lattice(L: LatticeDistribution, *, quantum: float = 1e-9) -> DiscreteDistribution:
    idx = np.argwhere(L.masses > 0)
    pts = L.origin + idx * L.spacing
    return DiscreteDistribution(pts, L.masses[tuple(idx.T)], quantum=quantum,
                                normalize=True, error_bound=L.error_bound)


def _check_compatible(A: LatticeDistribution, B: LatticeDistribution) -> None:
    if A.dim != B.dim:
        raise InvalidInputError("lattice dimension mismatch")
    if not np.allclose(A.spacing, B.spacing, rtol=1e-12, atol=0):
        raise InvalidInputError("lattice spacing mismatch")


def convolve_lattice(A: LatticeDistribution, B: LatticeDistribution) -> LatticeDistribution:
    _check_compatible(A, B)
    out = fftconvolve(A.masses, B.masses, mode="full")
    return LatticeDistribution(A.origin + B.origin, A.spacing, _clean(out),
                               A.error_bound + B.error_bound)


def power_lattice(A: LatticeDistribution, n: int, *,
                  max_cells: int = DEFAULT_MAX_CELLS) -> LatticeDistribution:
    """A^n from a single transform: pad to the final extent, raise to the power n."""
    if n < 0 or int(n) != n:
        raise InvalidInputError("power exponent must be a non-negative integer")
    n = int(n)
    if n == 0:
        return LatticeDistribution(np.zeros(A.dim), A.spacing, np.ones((1,) * A.dim))
    shape = tuple(n * (s - 1) + 1 for s in A.masses.shape)
    if np.prod(shape, dtype=float) > max_cells:
        raise ResourceLimitError(f"lattice of shape {shape} exceeds {max_cells} cells")
    fshape = [sfft.next_fast_len(s, real=True) for s in shape]
    spec = sfft.rfftn(A.masses, fshape)
    out = sfft.irfftn(spec**n, fshape)[tuple(slice(0, s) for s in shape)]
    return LatticeDistribution(n * A.origin, A.spacing, _clean(out), n * A.error_bound)


def compound_poisson_lattice(alpha: float, A: LatticeDistribution, tol: float, *,
                             max_cells: int = DEFAULT_MAX_CELLS) -> LatticeDistribution:
    """Truncated series sum_{k<=K} e^-alpha alpha^k/k! A^k, summed in Fourier space.

    Same truncation rule as :func:`cplab.dist.compound_poisson`.  The origin
    must sit on the lattice (origin / spacing integral) so that all powers
    share one grid.
    """
    weights, tail = poisson_truncation(alpha, tol)
    K = len(weights) - 1
    c = A.origin / A.spacing
    ci = np.rint(c).astype(np.int64)
    if np.any(np.abs(c - ci) > 1e-9):
        raise InvalidInputError("lattice does not pass through the origin")
    # the k = 0 term sits at index 0, so the span must also reach the origin
    lo = np.minimum(K * ci, 0)
    hi = np.maximum(K * (ci + np.array(A.masses.shape) - 1), 0)
    span = tuple(int(v) for v in hi - lo + 1)
    if np.prod(span, dtype=float) > max_cells:
        raise ResourceLimitError(f"lattice of shape {span} exceeds {max_cells} cells")
    fshape = [sfft.next_fast_len(s) for s in span]
    base = np.zeros(fshape)
    idx = np.indices(A.masses.shape).reshape(A.dim, -1)
    wrapped = tuple((idx[j] + ci[j]) % fshape[j] for j in range(A.dim))
    np.add.at(base, wrapped, A.masses.reshape(-1))
    z = sfft.fftn(base)
    acc = np.zeros_like(z)
    zk = np.ones_like(z)
    for k, w in enumerate(weights):
        if k:
            zk = zk * z
        if w:
            acc += w * zk
    circ = np.real(sfft.ifftn(acc))
    out = np.roll(circ, tuple(int(-v) for v in lo), axis=tuple(range(A.dim)))
    out = out[tuple(slice(0, s) for s in span)]
    return LatticeDistribution(lo * A.spacing, A.spacing, _clean(out),
                               tail + alpha * A.error_bound)
